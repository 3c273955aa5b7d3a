"""Least-squares calibration of the co-exposure add-on against simulated capital."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .addon import LenderCoexposure, k_ce

__all__ = ["CalibrationError", "SearchConfig", "CalibrationResult", "capital_gap",
           "fit_alpha_eta", "predicted_k_ce"]


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class SearchConfig:
    eta_min: float = 0.1
    eta_max: float = 1000.0
    n_eta: int = 32
    n_alpha: int = 21
    rtol: float = 1e-6


@dataclass(frozen=True)
class CalibrationResult:
    alpha: float
    eta: float
    gaps: dict[str, float]
    rss: float
    excluded: tuple[str, ...]
    grid_best_rss: float

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "eta": self.eta, "rss": self.rss,
                "gaps": self.gaps, "excluded": list(self.excluded)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def capital_gap(ul, k_plus_gamma) -> np.ndarray:
    """Simulated unexpected loss minus analytic ``K + Gamma``, per lender."""
    return np.asarray(ul, dtype=float) - np.asarray(k_plus_gamma, dtype=float)


def predicted_k_ce(lenders: Sequence[LenderCoexposure], alpha: float, eta: float) -> np.ndarray:
    return np.array([li.k_ce(alpha, eta) for li in lenders])


def fit_alpha_eta(gaps: dict[str, float] | Sequence[float], lenders: Sequence[LenderCoexposure],
                  search: SearchConfig = SearchConfig()) -> CalibrationResult:
    """Fit ``(alpha, eta)`` so that K_CE matches the positive capital gaps.

    Lenders with a gap <= 0 are already covered by ``K + Gamma``; they get
    ``K_CE = 0`` and stay out of the residual. The search scans a log grid
    over eta and a linear grid over alpha in [0, 1], then refines the best
    grid point with a bounded Nelder-Mead in ``(alpha, log eta)``.

    When every included lender has the same ``r`` the two parameters are not
    separately identified. The factor ``alpha (r - 1) + 1`` is then fixed at
    its largest value and the smallest adequate eta is reported.
    """
    if not isinstance(gaps, dict):
        gaps = {li.lender: float(g) for li, g in zip(lenders, gaps)}
    by_id = {li.lender: li for li in lenders}
    missing = set(gaps) - set(by_id)
    if missing:
        raise CalibrationError(f"no co-exposure inputs for lenders {sorted(missing)}")
    used = [by_id[k] for k, g in gaps.items() if g > 0]
    target = np.array([g for g in gaps.values() if g > 0])
    excluded = tuple(k for k, g in gaps.items() if g <= 0)
    if len(used) < 2:
        raise CalibrationError("underdetermined calibration: need at least two positive gaps")

    r = np.array([li.r for li in used])

    def x_vec(eta: float) -> np.ndarray:
        return np.array([li.x_ce(eta) for li in used])

    def rss(alpha: float, eta: float) -> float:
        pred = np.array([k_ce(x, ri, alpha) for x, ri in zip(x_vec(eta), r)])
        return float(np.sum((pred - target) ** 2))

    etas = np.geomspace(search.eta_min, search.eta_max, search.n_eta)
    alphas = np.linspace(0.0, 1.0, search.n_alpha)
    grid = np.empty((search.n_eta, search.n_alpha))
    for a_i, eta in enumerate(etas):
        xs = x_vec(eta)
        for b_i, alpha in enumerate(alphas):
            pred = np.maximum(0.0, (alpha * (r - 1) + 1) * xs)
            grid[a_i, b_i] = np.sum((pred - target) ** 2)
    # argmin takes the first minimum: smallest eta, then smallest alpha
    e_i, a_i = np.unravel_index(np.argmin(grid), grid.shape)
    grid_best = float(grid[e_i, a_i])
    lo, hi = np.log(search.eta_min), np.log(search.eta_max)

    if np.ptp(r) <= 1e-12 * max(1.0, abs(r[0])):
        alpha = 1.0 if r[0] > 1 else 0.0
        res = minimize_scalar(lambda le: rss(alpha, np.exp(le)), bounds=(lo, hi), method="bounded",
                              options={"xatol": search.rtol * 1e-3})
        eta, best = float(np.exp(res.x)), float(res.fun)
        if best > grid_best:
            alpha, eta, best = float(alphas[a_i]), float(etas[e_i]), grid_best
    else:
        x0 = np.array([alphas[a_i], np.log(etas[e_i])])
        res = minimize(lambda p: rss(p[0], np.exp(p[1])), x0, method="Nelder-Mead",
                       bounds=[(0.0, 1.0), (lo, hi)],
                       options={"xatol": search.rtol * 1e-3, "fatol": 1e-30,
                                "maxiter": 20_000, "maxfev": 40_000,
                                "initial_simplex": _simplex(x0, lo, hi)})
        alpha, eta, best = float(res.x[0]), float(np.exp(res.x[1])), float(res.fun)
        if best > grid_best:
            alpha, eta, best = float(alphas[a_i]), float(etas[e_i]), grid_best

    return CalibrationResult(alpha, eta, dict(gaps), best, excluded, grid_best)


def _simplex(x0: np.ndarray, lo: float, hi: float) -> np.ndarray:
    da = 0.05 if x0[0] + 0.05 <= 1 else -0.05
    de = 0.2 if x0[1] + 0.2 <= hi else -0.2
    return np.array([x0, x0 + [da, 0.0], x0 + [0.0, de]])
