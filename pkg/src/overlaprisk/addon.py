"""Common-exposure capital add-on and its double-counting correction."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np
from scipy.special import ndtr, ndtri

from .irb import (
    BorrowerCapital,
    CapitalParams,
    borrower_capital,
    granularity_adjustment,
    portfolio_k,
)
from .network import ExposureNetwork

__all__ = [
    "CoexposureParams",
    "x_ce_terms",
    "x_ce",
    "k_tilde",
    "double_count_ratio",
    "k_ce",
    "total_capital",
    "LenderCoexposure",
    "lender_inputs",
    "LenderCapital",
    "CapitalReport",
    "capital_report",
]


@dataclass(frozen=True)
class CoexposureParams:
    eta: float = 68.9
    alpha: float = 0.53
    stress_factor: float = 5.0

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if not 0 <= self.alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")
        if self.stress_factor <= 0:
            raise ValueError("stress_factor must be positive")


def x_ce_terms(pd, lgd, delta_di, eta: float, ma=1.0) -> np.ndarray:
    """Per-borrower co-exposure capital.

    ``MA LGD (Phi[Phi^-1(PD) + eta Phi^-1((1 + max(dDI, 0)) / 2)] - PD)``.
    Borrowers whose stress does not raise the system dependency contribute
    exactly zero.
    """
    pd, lgd, d, ma = (np.asarray(x, dtype=float) for x in np.broadcast_arrays(pd, lgd, delta_di, ma))
    pos = np.where(d > 0, d, 0.0)
    if np.any(pos >= 1):
        raise ValueError("dependency increment out of range: need delta DI < 1")
    out = np.zeros(pd.shape)
    live = pos > 0
    if eta == 0 or not live.any():
        return out
    p = pd[live]
    if np.any((p <= 0) | (p >= 1)):
        raise ValueError("pd must lie in (0, 1) for borrowers with positive increments")
    stressed = ndtr(ndtri(p) + eta * ndtri((1 + pos[live]) / 2))
    out[live] = ma[live] * lgd[live] * (stressed - p)
    return out


def x_ce(shares, pd, lgd, delta_di, eta: float, ma=1.0) -> tuple[float, np.ndarray]:
    """Lender co-exposure capital and its per-borrower terms."""
    terms = x_ce_terms(pd, lgd, delta_di, eta, ma)
    return float(np.dot(np.asarray(shares, dtype=float), terms)), terms


def k_tilde(cap: BorrowerCapital, delta: float = 4.83) -> np.ndarray:
    """Per-borrower GA numerator ``C_i [(delta - 1) K_i + delta R_i] / 2``.

    With this choice ``GA = sum s_i**2 Kt_i / sum s_i K_i`` holds exactly.
    """
    return 0.5 * cap.c * ((delta - 1) * cap.k + delta * cap.r)


def double_count_ratio(shares, overlap, k, kt, approximate: bool = False) -> float:
    """Ratio ``r`` comparing GA growth with portfolio overlap.

    ``r > 1`` exactly when the granularity adjustment grows as exposure is
    moved from the non-overlapping borrowers ``Z`` to the overlap, under the
    shift ``s_i + eps`` on the overlap and ``s_i - eps N_overlap / N_Z`` on
    ``Z``; ``r < 1`` when it shrinks. ``1 / r`` is the reciprocal convention
    in which values below one flag the growth regime.

    The default evaluates the derivative exactly: the overlap/non-overlap
    capital averages in the denominator's change are plain means over
    borrowers, while the GA numerator terms are share weighted.
    ``approximate=True`` uses share-weighted averages throughout, which is
    exact only when capital is homogeneous within each set.

    An empty overlap or an empty complement gives ``r = 1``.
    """
    s = np.asarray(shares, dtype=float)
    om = np.asarray(overlap, dtype=bool)
    k = np.asarray(k, dtype=float)
    kt = np.asarray(kt, dtype=float)
    z = ~om
    n_om, n_z = int(om.sum()), int(z.sum())
    if n_om == 0 or n_z == 0:
        return 1.0

    sum_s_om, sum_s_z = s[om].sum(), s[z].sum()
    if approximate:
        k_om = np.dot(s[om], k[om]) / sum_s_om if sum_s_om > 0 else k[om].mean()
        k_z = np.dot(s[z], k[z]) / sum_s_z if sum_s_z > 0 else k[z].mean()
        kt_om = np.dot(s[om], kt[om]) / sum_s_om if sum_s_om > 0 else kt[om].mean()
        kt_z = np.dot(s[z], kt[z]) / sum_s_z if sum_s_z > 0 else kt[z].mean()
        den = k_om * sum_s_om + k_z * sum_s_z
        num = kt_om * np.dot(s[om], s[om]) + kt_z * np.dot(s[z], s[z])
        lin_om, lin_z = kt_om * sum_s_om, kt_z * sum_s_z
        kbar_om, kbar_z = k_om, k_z
    else:
        den = np.dot(s, k)
        num = np.dot(s * s, kt)
        lin_om, lin_z = np.dot(s[om], kt[om]), np.dot(s[z], kt[z])
        kbar_om, kbar_z = k[om].mean(), k[z].mean()

    # GA growth side over GA shrink side of the derivative
    grow = 2 * lin_om * den + n_om * kbar_z * num
    shrink = 2 * (n_om / n_z) * lin_z * den + n_om * kbar_om * num
    if shrink <= 0:
        return float("inf") if grow > 0 else 1.0
    return float(grow / shrink)


def k_ce(x: float, r: float, alpha: float) -> float:
    """Corrected add-on ``[alpha (r - 1) + 1] X_CE``, floored at zero."""
    if x < 0:
        raise ValueError("X_CE must be nonnegative")
    return max(0.0, (alpha * (r - 1) + 1) * x)


def total_capital(k: float, gamma: float, kce: float) -> float:
    if min(k, gamma, kce) < 0:
        raise ValueError("capital components must be nonnegative")
    return k + gamma + kce


@dataclass(frozen=True)
class LenderCoexposure:
    """Per-lender inputs of the add-on; ``x_ce(eta)`` is cheap to re-evaluate."""

    lender: str
    shares: np.ndarray
    pd: np.ndarray
    lgd: np.ndarray
    ma: np.ndarray
    delta_di: np.ndarray
    overlap: np.ndarray
    k: float
    gamma: float
    r: float

    def x_ce(self, eta: float) -> float:
        return x_ce(self.shares, self.pd, self.lgd, self.delta_di, eta, self.ma)[0]

    def k_ce(self, alpha: float, eta: float) -> float:
        return k_ce(self.x_ce(eta), self.r, alpha)


def lender_inputs(net: ExposureNetwork, delta_di_sys, params: CapitalParams = CapitalParams(),
                  approximate_r: bool = False) -> list[LenderCoexposure]:
    """Assemble K, GA, r and the add-on inputs for every lender.

    ``delta_di_sys`` holds one system-dependency increment per borrower,
    typically from :func:`overlaprisk.scenarios.borrower_stress`. Shares
    are taken from raw exposures.
    """
    delta_di_sys = np.asarray(delta_di_sys, dtype=float)
    if delta_di_sys.shape != (net.m,):
        raise ValueError("need one dependency increment per borrower")
    pds, lgds = net.pds, net.lgds
    out = []
    for i, lid in enumerate(net.lenders):
        cols, e = net.lender_row(i, "raw")
        s = e / net.raw_totals[i]
        s = s / s.sum()
        cap = borrower_capital(pds[cols], lgds[cols], params)
        k = portfolio_k(s, cap.k)
        ga = granularity_adjustment(s, cap, params)
        om = net.overlap_mask[cols]
        r = double_count_ratio(s, om, cap.k, k_tilde(cap, params.delta), approximate_r)
        out.append(LenderCoexposure(lid, s, pds[cols], lgds[cols], cap.ma,
                                    delta_di_sys[cols], om, k, ga, r))
    return out


@dataclass(frozen=True)
class LenderCapital:
    lender: str
    k: float
    gamma: float
    x_ce: float
    r: float
    k_ce: float

    @property
    def k_total(self) -> float:
        return total_capital(self.k, self.gamma, self.k_ce)


@dataclass(frozen=True)
class CapitalReport:
    lenders: list[LenderCapital]
    params: CoexposureParams
    meta: dict = field(default_factory=dict)

    HEADER = ("Lender", "K", "Gamma", "X_CE", "r", "K_CE", "K_total")

    def to_csv(self, fh: TextIO) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(self.HEADER)
        for row in self.lenders:
            writer.writerow([row.lender, *(f"{v:.6g}" for v in
                                           (row.k, row.gamma, row.x_ce, row.r, row.k_ce, row.k_total))])

    def to_dict(self) -> dict:
        return {
            "alpha": self.params.alpha,
            "eta": self.params.eta,
            "stress_factor": self.params.stress_factor,
            "k_ce_floored_at_zero": True,
            **self.meta,
            "lenders": {
                row.lender: {"K": row.k, "Gamma": row.gamma, "X_CE": row.x_ce, "r": row.r,
                             "K_CE": row.k_ce, "K_total": row.k_total}
                for row in self.lenders
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def capital_report(net: ExposureNetwork, capital: CapitalParams = CapitalParams(),
                   coexp: CoexposureParams = CoexposureParams(), delta_di_sys=None) -> CapitalReport:
    """Per-lender K, GA, X_CE, r and K_CE for a risk-weighted network."""
    if delta_di_sys is None:
        from .scenarios import borrower_stress

        delta_di_sys = np.array([rec.delta_di_sys for rec in borrower_stress(net, coexp.stress_factor)])
    rows = []
    for li in lender_inputs(net, delta_di_sys, capital):
        x = li.x_ce(coexp.eta)
        rows.append(LenderCapital(li.lender, li.k, li.gamma, x, li.r, k_ce(x, li.r, coexp.alpha)))
    return CapitalReport(rows, coexp)
