"""Command line entry point: ``overlaprisk <command> [options]``.

Data goes to files under ``--out``; diagnostics go to stderr. Every output
file starts with the tool version, a hash of the resolved configuration and
arguments, and the seed, so reruns with the same triple are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .addon import capital_report, lender_inputs
from .calibration import CalibrationError, capital_gap, fit_alpha_eta
from .concentration import concentration_report, overlap_risk_composition
from .config import RunConfig, load_config, write_coexposure_params
from .irb import borrower_capital
from .montecarlo import downturn_network, downturn_pd, simulate_network
from .network import (
    ExposureNetwork,
    NetworkError,
    apply_pd_weights,
    apply_step_weights,
    borrower_projection,
    impact_matrix,
    load_exposures,
    network_to_csv,
)
from .scenarios import (
    borrower_stress,
    downgrade,
    generate_ds1_like,
    generate_ds2_like,
    grow_overlap,
    randomize_within_risk,
)


class Output:
    """Writes files into the output directory with a provenance header."""

    def __init__(self, out: Path, cfg: RunConfig, args: dict):
        self.out = out
        self.meta = {"tool": "overlaprisk", "version": __version__,
                     "config_hash": cfg.digest(args), "seed": cfg.seed}
        out.mkdir(parents=True, exist_ok=True)

    def _header(self) -> str:
        return "# " + "; ".join(f"{k}={v}" for k, v in self.meta.items()) + "\n"

    def csv(self, name: str, header, rows) -> Path:
        buf = io.StringIO()
        buf.write(self._header())
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return self.text(name, buf.getvalue())

    def writer_csv(self, name: str, write) -> Path:
        buf = io.StringIO()
        buf.write(self._header())
        write(buf)
        return self.text(name, buf.getvalue())

    def json(self, name: str, payload: dict) -> Path:
        return self.text(name, json.dumps({"meta": self.meta, **payload}, indent=2, sort_keys=False) + "\n")

    def text(self, name: str, body: str) -> Path:
        path = self.out / name
        path.write_text(body, encoding="utf-8")
        return path


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def _has_weight_column(path: str) -> bool:
    with open(path, newline="", encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                return "weight" in next(csv.reader([line]), [])
    return False


def _resolve_scheme(net: ExposureNetwork, scheme: str, given: bool) -> str:
    """``auto`` prefers a weight column, then step weights, then PD weights, then raw exposures."""
    if scheme != "auto":
        return scheme
    if given:
        return "given"
    if all(b.risk_category is not None for b in net.borrowers):
        return "step"
    if all(b.pd is not None for b in net.borrowers):
        return "pd"
    return "given"


def _weighted(net: ExposureNetwork, cfg: RunConfig, given: bool = False) -> ExposureNetwork:
    scheme = _resolve_scheme(net, cfg.scheme, given)
    if scheme == "step":
        return apply_step_weights(net, cfg.weights)
    if scheme == "pd":
        return apply_pd_weights(net)
    return net


def _load(path: str, cfg: RunConfig) -> ExposureNetwork:
    return _weighted(load_exposures(path), cfg, _has_weight_column(path))


def cmd_gen(a, cfg: RunConfig, out: Output) -> None:
    if a.kind == "ds2":
        if not a.loans:
            raise ValueError("gen ds2 needs --loans <csv with issuer,amount,price>")
        with open(a.loans, newline="", encoding="utf-8") as fh:
            loans = list(csv.DictReader(fh))
        net = generate_ds2_like(loans, n_lenders=a.lenders, seed=cfg.seed)
    else:
        net = generate_ds1_like(n_borrowers=a.borrowers, n_shared=a.shared, n_lenders=a.lenders,
                                overlap_size_factor=a.overlap_size, params=cfg.weights, seed=cfg.seed)
    out.text("network.csv", out._header() + network_to_csv(net))


def cmd_metrics(a, cfg: RunConfig, out: Output) -> None:
    net = _load(a.input, cfg)
    s = impact_matrix(net)
    report = concentration_report(net, s)
    out.writer_csv("lender_stats.csv", report.to_csv)
    out.json("lender_stats.json", report.to_dict())
    out.writer_csv("impact_matrix.csv", s.to_csv)
    out.json("impact_matrix.json", {"impact_matrix": s.to_dict()})
    graph = borrower_projection(net, a.top_k)
    out.writer_csv("borrower_projection.csv", graph.to_csv)
    if all(b.risk_category is not None for b in net.borrowers):
        comp = overlap_risk_composition(net)
        out.csv("risk_composition.csv", ["scope", "risk_category", "fraction"],
                [(sc, c, _fmt(f)) for sc, c, f in comp.as_rows()])


def cmd_randomize(a, cfg: RunConfig, out: Output) -> None:
    net = _load(a.input, cfg)
    res = randomize_within_risk(net, a.trials, seed=cfg.seed, threads=a.threads)
    out.csv("randomize_samples.csv", ["trial", "di_sys"],
            [(t, _fmt(v)) for t, v in enumerate(res.samples)])
    counts, edges = res.histogram(a.bins)
    out.csv("randomize_histogram.csv", ["bin_lo", "bin_hi", "count"],
            [(_fmt(lo), _fmt(hi), int(c)) for lo, hi, c in zip(edges[:-1], edges[1:], counts)])
    out.json("randomize_summary.json", {"observed_di_sys": res.observed, "p_value": res.p_value,
                                        "trials": a.trials})


def cmd_downgrade(a, cfg: RunConfig, out: Output) -> None:
    net = _load(a.input, cfg)
    ids = [x.strip() for x in a.borrowers.split(",") if x.strip()]
    rep = downgrade(net, ids, a.category, cfg.weights)
    out.csv("downgrade.csv", ["ID", *(f"dDI_{x}" for x in rep.lender_ids)],
            [(r[0], *(_fmt(v) for v in r[1:])) for r in rep.rows()])
    out.json("downgrade.json", {
        "borrowers": ids, "new_category": a.category,
        "base_di": dict(zip(rep.lender_ids, rep.base_di.tolist())),
        "joint_delta_di": dict(zip(rep.lender_ids, rep.joint.tolist())),
        "convexity": dict(zip(rep.lender_ids, rep.convexity.tolist())) if len(ids) > 1 else None,
        "delta_di_sys": rep.joint_di_sys - rep.base_di_sys,
    })


def cmd_grow_overlap(a, cfg: RunConfig, out: Output) -> None:
    net = _load(a.input, cfg)
    traj = grow_overlap(net, a.steps, a.trials, seed=cfg.seed, threads=a.threads)
    out.csv("grow_overlap.csv", ["step", "mean_di_sys", "std_err", "trials"],
            [(s, _fmt(m), _fmt(e), int(c)) for s, (m, e, c) in
             enumerate(zip(traj.mean, traj.std_err, traj.counts))])
    out.json("grow_overlap.json", {"steps": a.steps, "trials": a.trials,
                                   "truncated": traj.truncated})


def cmd_stress(a, cfg: RunConfig, out: Output) -> None:
    net = _load(a.input, cfg)
    recs = borrower_stress(net, a.factor)
    out.csv("stress.csv", ["borrower_id", "delta_di_sys", "delta_hhi_sys", "in_overlap"],
            [(r.borrower_id, _fmt(r.delta_di_sys), _fmt(r.delta_hhi_sys), int(r.in_overlap))
             for r in recs])
    pos = sum(r.delta_di_sys > 0 for r in recs)
    ov = sum(r.in_overlap for r in recs)
    out.json("stress_summary.json", {"factor": a.factor, "borrowers": len(recs),
                                     "overlap_borrowers": ov, "positive_delta_di_sys": pos,
                                     "overlap_with_positive_delta": sum(r.in_overlap and r.delta_di_sys > 0 for r in recs)})


def _require_pd_lgd(net: ExposureNetwork) -> None:
    missing = [b.id for b in net.borrowers if b.pd is None or b.lgd is None]
    if missing:
        raise NetworkError(f"pd and lgd required for capital; missing for borrowers: {', '.join(missing[:20])}")


def cmd_capital(a, cfg: RunConfig, out: Output) -> None:
    net = _load(a.input, cfg)
    _require_pd_lgd(net)
    stress = borrower_stress(net, cfg.coexposure.stress_factor)
    d_di = np.array([r.delta_di_sys for r in stress])
    rep = capital_report(net, cfg.capital, cfg.coexposure, d_di)
    out.writer_csv("capital.csv", rep.to_csv)
    out.json("capital.json", rep.to_dict())
    cap = borrower_capital(net.pds, net.lgds, cfg.capital)
    out.csv("borrower_capital.csv", ["borrower_id", "pd", "lgd", "K_i", "R_i", "C_i", "MA_i", "delta_di_sys"],
            [(b.id, _fmt(b.pd), _fmt(b.lgd), _fmt(k), _fmt(r), _fmt(c), _fmt(m), _fmt(d))
             for b, k, r, c, m, d in zip(net.borrowers, cap.k, cap.r, cap.c, cap.ma, d_di)])


def _simulate_all(net: ExposureNetwork, cfg: RunConfig, threads: int):
    return simulate_network(net, replace(cfg.simulation, seed=cfg.seed, threads=threads))


def cmd_simulate(a, cfg: RunConfig, out: Output) -> None:
    net = load_exposures(a.input)
    _require_pd_lgd(net)
    results = _simulate_all(net, cfg, a.threads)
    out.json("simulate.json", {"iterations": cfg.simulation.iterations, "q": cfg.simulation.q,
                               "downturn_a": cfg.simulation.downturn_a,
                               "lenders": {k: v.to_dict() for k, v in results.items()}})
    stressed = (downturn_pd(net.pds, cfg.simulation.downturn_a)
                if cfg.simulation.downturn_a is not None else net.pds)
    out.csv("simulate_pd.csv", ["borrower_id", "pd", "stressed_pd"],
            [(b.id, _fmt(p), _fmt(sp)) for b, p, sp in zip(net.borrowers, net.pds, stressed)])


def _read_gaps(path: str) -> dict[str, float]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    header, body = rows[0], rows[1:]
    li, gi = header.index("lender"), header.index("gap")
    return {r[li]: float(r[gi]) for r in body}


def cmd_calibrate(a, cfg: RunConfig, out: Output) -> None:
    base = load_exposures(a.input)
    _require_pd_lgd(base)
    # analytics and simulation both run in the downturn scenario
    net = base if cfg.simulation.downturn_a is None else downturn_network(base, cfg.simulation.downturn_a)
    # auto ignores a weight column here: the downturn PDs need fresh weights
    net = _weighted(net, cfg)
    d_di = np.array([r.delta_di_sys for r in borrower_stress(net, cfg.coexposure.stress_factor)])
    inputs = lender_inputs(net, d_di, cfg.capital)
    analytic = {li.lender: li.k + li.gamma for li in inputs}
    if a.gaps:
        gaps = _read_gaps(a.gaps)
        ul = None
    else:
        sims = _simulate_all(base, cfg, a.threads)
        ul = {k: v.ul for k, v in sims.items()}
        gaps = dict(zip(analytic, capital_gap([ul[k] for k in analytic], list(analytic.values())).tolist()))
    res = fit_alpha_eta(gaps, inputs)
    payload = res.to_dict()
    payload["k_plus_gamma"] = analytic
    if ul is not None:
        payload["ul"] = ul
    out.json("calibration.json", payload)
    if a.write_params:
        if not a.config:
            raise ValueError("--write-params needs --config")
        write_coexposure_params(a.config, res.alpha, res.eta)


COMMANDS = {
    "gen": cmd_gen, "metrics": cmd_metrics, "randomize": cmd_randomize, "downgrade": cmd_downgrade,
    "grow-overlap": cmd_grow_overlap, "stress": cmd_stress, "capital": cmd_capital,
    "simulate": cmd_simulate, "calibrate": cmd_calibrate,
}


def _global_flags(defaults: bool) -> argparse.ArgumentParser:
    # subcommands get SUPPRESS defaults so flags given before the command survive
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    glob = argparse.ArgumentParser(add_help=False)
    glob.add_argument("--config", default=d(None), help="INI configuration file")
    glob.add_argument("--seed", type=int, default=d(None), help="random seed (overrides the config)")
    glob.add_argument("--out", default=d("out"), help="output directory (default: out)")
    glob.add_argument("--threads", type=int, default=d(1), help="worker threads")
    glob.add_argument("--scheme", choices=("auto", "step", "pd", "given"), default=d(None),
                      help="risk weighting: step (categories), pd (PD*EAD), given (weight column "
                           "or raw exposure); auto picks the first the input supports")
    return glob


def build_parser() -> argparse.ArgumentParser:
    glob = _global_flags(False)
    p = argparse.ArgumentParser(prog="overlaprisk", parents=[_global_flags(True)],
                                description="Credit concentration risk from overlapping portfolios")
    p.add_argument("--version", action="version", version=f"overlaprisk {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[glob], help="generate a synthetic exposure network")
    g.add_argument("kind", choices=("ds1", "ds2"))
    g.add_argument("--loans", help="loan list CSV (issuer,amount,price) for ds2")
    g.add_argument("--lenders", type=int, default=None)
    g.add_argument("--borrowers", type=int, default=1100)
    g.add_argument("--shared", type=int, default=9)
    g.add_argument("--overlap-size", type=float, default=1.0)

    m = sub.add_parser("metrics", parents=[glob], help="HHI, impact matrix, Dependency Index")
    m.add_argument("input")
    m.add_argument("--top-k", type=int, default=20)

    r = sub.add_parser("randomize", parents=[glob], help="counterparty shuffles within risk categories")
    r.add_argument("input")
    r.add_argument("--trials", type=int, default=100_000)
    r.add_argument("--bins", type=int, default=50)

    d = sub.add_parser("downgrade", parents=[glob], help="DI change after downgrading borrowers")
    d.add_argument("input")
    d.add_argument("--borrowers", required=True, help="comma-separated borrower ids")
    d.add_argument("--category", type=int, required=True)

    o = sub.add_parser("grow-overlap", parents=[glob], help="merge isolated borrowers into the overlap")
    o.add_argument("input")
    o.add_argument("--steps", type=int, default=50)
    o.add_argument("--trials", type=int, default=1000)

    s = sub.add_parser("stress", parents=[glob], help="per-borrower exposure stress")
    s.add_argument("input")
    s.add_argument("--factor", type=float, default=5.0)

    c = sub.add_parser("capital", parents=[glob], help="K, GA, X_CE, r, K_CE per lender")
    c.add_argument("input")

    sm = sub.add_parser("simulate", parents=[glob], help="Monte Carlo EL/VaR/UL per lender")
    sm.add_argument("input")

    cb = sub.add_parser("calibrate", parents=[glob], help="fit alpha and eta to capital gaps")
    cb.add_argument("input")
    cb.add_argument("--gaps", help="CSV with lender,gap columns instead of simulating")
    cb.add_argument("--write-params", action="store_true",
                    help="write fitted alpha/eta into the --config file (backup kept)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    try:
        cfg = load_config(a.config, seed=a.seed, threads=a.threads, scheme=a.scheme)
        if a.command == "gen" and a.lenders is None:
            a.lenders = 5 if a.kind == "ds2" else 2
        args = {k: v for k, v in vars(a).items() if k not in ("out", "threads", "config", "seed")}
        out = Output(Path(a.out), cfg, args)
        COMMANDS[a.command](a, cfg, out)
    except (NetworkError, CalibrationError, ValueError, KeyError, FileNotFoundError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"overlaprisk {a.command}: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
