"""INI-style run configuration.

Sections and keys (all optional; defaults are the calibrated constants)::

    [run]         scheme = auto | step | pd | given, seed
    [weights]     a, b, r0
    [capital]     q, delta, gamma, maturity, rho (number or "basel"), b_squared
    [coexposure]  alpha, eta, stress_factor
    [simulation]  iterations, q, downturn_a (number or "none")
"""

from __future__ import annotations

import configparser
import hashlib
import json
import shutil
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .addon import CoexposureParams
from .irb import CapitalParams
from .montecarlo import SimConfig
from .network import StepWeightParams

__all__ = ["RunConfig", "load_config", "write_coexposure_params"]

SCHEMES = ("auto", "step", "pd", "given")


@dataclass(frozen=True)
class RunConfig:
    scheme: str = "auto"
    seed: int = 0
    weights: StepWeightParams = field(default_factory=StepWeightParams)
    capital: CapitalParams = field(default_factory=CapitalParams)
    coexposure: CoexposureParams = field(default_factory=CoexposureParams)
    simulation: SimConfig = field(default_factory=lambda: SimConfig(downturn_a=0.3))

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")

    def as_dict(self) -> dict:
        sim = asdict(self.simulation)
        sim.pop("threads")
        sim.pop("seed")
        cap = asdict(self.capital)
        if not isinstance(cap["rho"], (str, float, int)):
            cap["rho"] = list(cap["rho"])
        return {"scheme": self.scheme, "seed": self.seed, "weights": asdict(self.weights),
                "capital": cap, "coexposure": asdict(self.coexposure), "simulation": sim}

    def digest(self, extra: dict | None = None) -> str:
        payload = {"config": self.as_dict(), "args": extra or {}}
        blob = json.dumps(payload, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _float_or(value: str, keyword: str):
    return keyword if value.strip().lower() == keyword else float(value)


def load_config(path: str | Path | None = None, **overrides) -> RunConfig:
    cp = configparser.ConfigParser()
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        cp.read(path, encoding="utf-8")

    def sect(name: str) -> configparser.SectionProxy | dict:
        return cp[name] if cp.has_section(name) else {}

    run = sect("run")
    w = sect("weights")
    c = sect("capital")
    x = sect("coexposure")
    s = sect("simulation")

    weights = StepWeightParams(a=float(w.get("a", 0.2)), b=float(w.get("b", 1.0)),
                               r0=float(w.get("r0", 1.5)))
    capital = CapitalParams(
        q=float(c.get("q", 0.999)), delta=float(c.get("delta", 4.83)),
        gamma=float(c.get("gamma", 0.25)), maturity=float(c.get("maturity", 1.0)),
        rho=_float_or(str(c.get("rho", "basel")), "basel"),
        b_squared=str(c.get("b_squared", "true")).strip().lower() in ("1", "true", "yes", "on"),
    )
    coexp = CoexposureParams(eta=float(x.get("eta", 68.9)), alpha=float(x.get("alpha", 0.53)),
                             stress_factor=float(x.get("stress_factor", 5.0)))
    seed = overrides.pop("seed", None)
    seed = int(run.get("seed", 0)) if seed is None else int(seed)
    downturn = _float_or(str(s.get("downturn_a", 0.3)), "none")
    sim = SimConfig(iterations=int(float(s.get("iterations", 100_000))), q=float(s.get("q", 0.999)),
                    seed=seed, downturn_a=None if downturn == "none" else downturn,
                    threads=int(overrides.pop("threads", None) or 1))
    scheme = overrides.pop("scheme", None) or run.get("scheme", "auto")
    return RunConfig(scheme=scheme, seed=seed, weights=weights, capital=capital,
                     coexposure=coexp, simulation=sim)


def write_coexposure_params(path: str | Path, alpha: float, eta: float) -> Path:
    """Store fitted parameters in ``path``; the previous file is kept as ``<path>.bak``."""
    path = Path(path)
    cp = configparser.ConfigParser()
    if path.exists():
        cp.read(path, encoding="utf-8")
        shutil.copyfile(path, path.with_name(path.name + ".bak"))
    if not cp.has_section("coexposure"):
        cp.add_section("coexposure")
    cp["coexposure"]["alpha"] = repr(float(alpha))
    cp["coexposure"]["eta"] = repr(float(eta))
    with open(path, "w", encoding="utf-8") as fh:
        cp.write(fh)
    return path
