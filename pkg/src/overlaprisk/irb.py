"""IRB capital, maturity adjustment and the granularity adjustment.

All functions are vectorised over borrowers. ``log`` is the natural log.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import ndtr, ndtri

__all__ = [
    "CapitalParams",
    "BorrowerCapital",
    "basel_corporate_rho",
    "maturity_b",
    "maturity_adjustment",
    "irb_k",
    "loss_reserve",
    "lgd_factor",
    "borrower_capital",
    "portfolio_k",
    "granularity_adjustment",
    "UvwCurve",
    "uvw_gamma",
    "uvw_gamma_curve",
]


@dataclass(frozen=True)
class CapitalParams:
    """Regulatory constants for the capital formulas.

    ``rho`` is a constant, a per-borrower array, or ``"basel"`` for the
    Basel corporate correlation curve. ``b_squared`` selects the Basel
    maturity slope ``b(PD)**2``; ``False`` uses the unsquared bracket.
    """

    q: float = 0.999
    delta: float = 4.83
    gamma: float = 0.25
    maturity: float = 1.0
    rho: float | str | Sequence[float] = "basel"
    b_squared: bool = True

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise ValueError("q must lie in (0, 1)")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if not 0 <= self.gamma <= 1:
            raise ValueError("gamma must lie in [0, 1]")
        if isinstance(self.rho, str) and self.rho != "basel":
            raise ValueError("rho must be a number, a sequence or 'basel'")

    def rho_for(self, pd) -> np.ndarray:
        pd = np.asarray(pd, dtype=float)
        if isinstance(self.rho, str):
            return basel_corporate_rho(pd)
        rho = np.broadcast_to(np.asarray(self.rho, dtype=float), pd.shape)
        return np.array(rho)


def basel_corporate_rho(pd):
    """Basel corporate asset correlation, between 0.12 and 0.24."""
    pd = np.asarray(pd, dtype=float)
    w = (1 - np.exp(-50 * pd)) / (1 - np.exp(-50))
    return 0.12 * w + 0.24 * (1 - w)


def maturity_b(pd, squared: bool = True):
    b = 0.119 - 0.0548 * np.log(np.asarray(pd, dtype=float))
    return b * b if squared else b


def maturity_adjustment(pd, maturity: float = 1.0, b_squared: bool = True):
    """``(1 + (M - 2.5) b) / (1 - 1.5 b)``; equals one at ``M = 1``."""
    pd = np.asarray(pd, dtype=float)
    if np.any((pd <= 0) | (pd > 1)):
        raise ValueError("maturity adjustment needs pd in (0, 1]")
    b = maturity_b(pd, b_squared)
    den = 1 - 1.5 * b
    if np.any(den <= 0):
        raise ValueError("maturity adjustment singular: 1 - 1.5 b(PD) <= 0")
    return (1 + (maturity - 2.5) * b) / den


def irb_k(pd, lgd, rho, q: float = 0.999, ma=1.0):
    """Per-borrower IRB capital.

    ``MA * LGD * (Phi[(Phi^-1(PD) + sqrt(rho) Phi^-1(q)) / sqrt(1 - rho)] - PD)``
    """
    pd = np.asarray(pd, dtype=float)
    lgd = np.asarray(lgd, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any((pd <= 0) | (pd >= 1)):
        raise ValueError("irb_k needs pd strictly inside (0, 1)")
    if np.any((lgd < 0) | (lgd > 1)):
        raise ValueError("lgd must lie in [0, 1]")
    if np.any((rho < 0) | (rho >= 1)):
        raise ValueError("rho must lie in [0, 1)")
    stressed = ndtr((ndtri(pd) + np.sqrt(rho) * ndtri(q)) / np.sqrt(1 - rho))
    return ma * lgd * (stressed - pd)


def loss_reserve(pd, lgd):
    return np.asarray(lgd, dtype=float) * np.asarray(pd, dtype=float)


def lgd_factor(lgd, gamma: float = 0.25):
    """``C_i = (gamma E[LGD](1 - E[LGD]) + E[LGD]**2) / E[LGD]``."""
    lgd = np.asarray(lgd, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (gamma * lgd * (1 - lgd) + lgd * lgd) / lgd


@dataclass(frozen=True)
class BorrowerCapital:
    k: np.ndarray
    r: np.ndarray
    c: np.ndarray
    ma: np.ndarray


def borrower_capital(pd, lgd, params: CapitalParams = CapitalParams()) -> BorrowerCapital:
    pd = np.asarray(pd, dtype=float)
    lgd = np.asarray(lgd, dtype=float)
    ma = maturity_adjustment(pd, params.maturity, params.b_squared)
    k = irb_k(pd, lgd, params.rho_for(pd), params.q, ma)
    return BorrowerCapital(k=k, r=loss_reserve(pd, lgd), c=lgd_factor(lgd, params.gamma), ma=ma)


def _check_shares(shares) -> np.ndarray:
    s = np.asarray(shares, dtype=float)
    if np.any(s < 0):
        raise ValueError("shares must be nonnegative")
    if abs(s.sum() - 1.0) > 1e-9:
        raise ValueError(f"shares must sum to one (got {s.sum():.12g})")
    return s


def portfolio_k(shares, k) -> float:
    """Portfolio IRB capital, the share-weighted sum of borrower capital."""
    s = _check_shares(shares)
    return float(np.dot(s, np.asarray(k, dtype=float)))


def granularity_adjustment(shares, cap: BorrowerCapital, params: CapitalParams = CapitalParams()) -> float:
    """Granularity adjustment ``(1/2K) sum s_i**2 C_i [delta (K_i + R_i) - K_i]``."""
    s = _check_shares(shares)
    lgd_zero = ~np.isfinite(cap.c)
    if np.any(lgd_zero & (s > 0)):
        raise ValueError("granularity adjustment undefined: zero LGD with a nonzero share")
    k = portfolio_k(s, cap.k)
    if k <= 0:
        raise ValueError("granularity adjustment undefined for K <= 0")
    use = s > 0
    terms = s[use] ** 2 * cap.c[use] * (params.delta * (cap.k[use] + cap.r[use]) - cap.k[use])
    return float(terms.sum() / (2 * k))


def uvw_gamma(n: int, w, pd: float, lgd: float, params: CapitalParams = CapitalParams()) -> np.ndarray:
    """Granularity adjustment of the aggregated "superlender" portfolio.

    The portfolio holds ``n - 2`` common exposures of share ``w`` and two
    isolated ones of share ``u = (1 - (n - 2) w) / 2``; all borrowers share
    the same PD and LGD.
    """
    w = np.atleast_1d(np.asarray(w, dtype=float))
    cap = borrower_capital(np.full(n, pd), np.full(n, lgd), params)
    out = np.empty_like(w)
    for j, wj in enumerate(w):
        u = (1 - (n - 2) * wj) / 2
        s = np.array([u, *([wj] * (n - 2)), u])
        out[j] = granularity_adjustment(s / s.sum(), cap, params)
    return out


@dataclass(frozen=True)
class UvwCurve:
    n: int
    w: np.ndarray
    gamma: np.ndarray
    closed_form: np.ndarray
    constant: float
    max_rel_dev: float
    w_min: float

    @property
    def u(self) -> np.ndarray:
        return (1 - (self.n - 2) * self.w) / 2


def uvw_gamma_curve(n: int, pd: float = 0.01, lgd: float = 0.45, w=None,
                    params: CapitalParams = CapitalParams()) -> UvwCurve:
    """Evaluate the superlender GA over a grid of common-exposure shares.

    The numeric curve is compared with ``1 - 2(n-2)w + n(n-2)w**2`` after
    fitting the single multiplicative constant by least squares.
    """
    if n < 3:
        raise ValueError("the uvw system needs n >= 3")
    if w is None:
        w = np.linspace(0.0, 1.0 / (n - 2), 201)
    w = np.asarray(w, dtype=float)
    feasible = (w >= 0) & ((1 - (n - 2) * w) >= 0)
    w = w[feasible]
    g = uvw_gamma(n, w, pd, lgd, params)
    shape = 1 - 2 * (n - 2) * w + n * (n - 2) * w ** 2
    const = float(np.dot(shape, g) / np.dot(shape, shape))
    rel = np.abs(g / (const * shape) - 1)
    return UvwCurve(n=n, w=w, gamma=g, closed_form=const * shape, constant=const,
                    max_rel_dev=float(rel.max()), w_min=float(w[np.argmin(g)]))
