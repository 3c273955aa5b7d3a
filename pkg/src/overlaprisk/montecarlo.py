"""Independent-default loss simulation for single lender portfolios."""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .network import Borrower, ExposureNetwork

__all__ = ["SimConfig", "SimResult", "downturn_pd", "downturn_network", "simulate_losses",
           "simulate_network", "var_from_losses"]

# draws per substream; fixed so results do not depend on the worker count
BLOCK = 4096


@dataclass(frozen=True)
class SimConfig:
    iterations: int = 100_000
    q: float = 0.999
    seed: int = 0
    downturn_a: float | None = None
    threads: int = 1

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0 < self.q < 1:
            raise ValueError("q must lie in (0, 1)")
        if self.downturn_a is not None and not 0 < self.downturn_a <= 1:
            raise ValueError("downturn_a must lie in (0, 1]")


@dataclass(frozen=True)
class SimResult:
    el: float
    var: float
    ul: float
    loss_samples: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {"EL": self.el, "VaR": self.var, "UL": self.ul}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def downturn_pd(pd, a: float = 0.3):
    """Downturn PD ``sqrt(A * PD)``, capped at one."""
    if not 0 < a <= 1:
        raise ValueError("A must lie in (0, 1]")
    pd = np.asarray(pd, dtype=float)
    if np.any((pd < 0) | (pd > 1)):
        raise ValueError("pd must lie in [0, 1]")
    return np.minimum(np.sqrt(a * pd), 1.0)


def downturn_network(net: ExposureNetwork, a: float = 0.3) -> ExposureNetwork:
    """Copy of ``net`` whose borrowers carry downturn PDs; weights are untouched."""
    stressed = downturn_pd(net.pds, a)
    borrowers = tuple(Borrower(b.id, float(p), b.lgd, b.risk_category)
                      for b, p in zip(net.borrowers, stressed))
    return net.with_borrowers(borrowers)


def var_from_losses(losses: np.ndarray, q: float) -> float:
    """Order statistic at rank ``ceil(q * N)`` (1-based) of the losses."""
    n = losses.size
    rank = min(max(math.ceil(q * n), 1), n)
    return float(np.partition(losses, rank - 1)[rank - 1])


def simulate_losses(shares, pd, lgd, config: SimConfig = SimConfig(),
                    keep_samples: bool = False, stream: int = 0) -> SimResult:
    """Loss distribution with independent Bernoulli defaults.

    Borrower ``i`` defaults when a uniform draw falls below ``pd_i``; the
    loss, as a fraction of the lender's exposure, sums ``s_i * lgd_i`` over
    defaulters. Iterations are split into fixed blocks, each with its own
    ``default_rng([seed, stream, block])`` generator, so the thread count
    never changes the answer.
    """
    s = np.asarray(shares, dtype=float)
    pd = np.asarray(pd, dtype=float)
    lgd = np.asarray(lgd, dtype=float)
    if np.any(s < 0) or abs(s.sum() - 1) > 1e-9:
        raise ValueError("shares must be nonnegative and sum to one")
    if np.any((pd < 0) | (pd > 1)):
        raise ValueError("pd must lie in [0, 1]")
    if config.downturn_a is not None:
        pd = downturn_pd(pd, config.downturn_a)
    if config.iterations * (1 - config.q) < 10:
        warnings.warn("quantile poorly resolved: fewer than 10 draws beyond q", RuntimeWarning,
                      stacklevel=2)
    loss_per_default = s * lgd
    n_iter = config.iterations
    n_blocks = -(-n_iter // BLOCK)
    # keep each uniform matrix around 32 MB
    rows = max(1, min(BLOCK, 4_000_000 // max(pd.size, 1)))

    def block(b: int) -> np.ndarray:
        rng = np.random.default_rng([config.seed, stream, b])
        size = min(BLOCK, n_iter - b * BLOCK)
        out = np.empty(size)
        for lo in range(0, size, rows):
            hi = min(lo + rows, size)
            u = rng.random((hi - lo, pd.size))
            out[lo:hi] = (u < pd) @ loss_per_default
        return out

    if config.threads > 1 and n_blocks > 1:
        with ThreadPoolExecutor(config.threads) as pool:
            parts = list(pool.map(block, range(n_blocks)))
    else:
        parts = [block(b) for b in range(n_blocks)]
    losses = np.concatenate(parts)
    el = math.fsum(losses) / n_iter
    var = var_from_losses(losses, config.q)
    return SimResult(el, var, var - el, losses if keep_samples else None)


def simulate_network(net: ExposureNetwork, config: SimConfig = SimConfig()) -> dict[str, SimResult]:
    """Simulate every lender; shares come from raw exposures."""
    pds, lgds = net.pds, net.lgds
    out = {}
    for i, lid in enumerate(net.lenders):
        cols, e = net.lender_row(i, "raw")
        s = e / e.sum()
        out[lid] = simulate_losses(s / s.sum(), pds[cols], lgds[cols], config, stream=i)
    return out
