"""Concentration metrics: HHI, Dependency Index and portfolio overlap."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .network import ExposureNetwork, ImpactMatrix, NetworkError, impact_matrix

__all__ = [
    "hhi",
    "lender_hhi",
    "dependency_index",
    "dependency_indices",
    "dependency_index_sys",
    "di_from_kernel",
    "overlap_stats",
    "OverlapStats",
    "overlap_risk_composition",
    "RiskComposition",
    "ConcentrationReport",
    "concentration_report",
]


def hhi(exposures) -> float:
    """Herfindahl-Hirschman index ``sum(E**2) / sum(E)**2``.

    Sums are exactly rounded, so the result does not depend on the order of
    the exposures.
    """
    e = np.asarray(exposures, dtype=float).ravel()
    if e.size and e.min() < 0:
        raise ValueError("exposures must be nonnegative")
    total = math.fsum(e)
    if total <= 0:
        raise ValueError("HHI of an all-zero exposure vector is undefined")
    return math.fsum(e * e) / (total * total)


def lender_hhi(net: ExposureNetwork, which: str = "weighted") -> np.ndarray:
    mat = net.weighted if which == "weighted" else net.raw
    return np.array([hhi(mat.data[mat.indptr[i]:mat.indptr[i + 1]]) for i in range(net.n)])


def _as_array(s) -> np.ndarray:
    return s.s if isinstance(s, ImpactMatrix) else np.asarray(s, dtype=float)


def dependency_index(s: ImpactMatrix | np.ndarray, i: int) -> float:
    """Dependency Index of lender ``i``: ``1 - 1 / sum_j (s_ji / s_ii)**2``."""
    s = _as_array(s)
    sii = s[i, i]
    if not sii > 0:
        raise ValueError(f"impact matrix diagonal entry {i} must be positive")
    ratios = s[:, i] / sii
    return 1.0 - 1.0 / float(np.sum(ratios * ratios))


def dependency_indices(s: ImpactMatrix | np.ndarray) -> np.ndarray:
    s = _as_array(s)
    diag = np.diag(s)
    if np.any(diag <= 0):
        raise ValueError("impact matrix diagonal must be positive")
    ratios = s / diag[None, :]
    return 1.0 - 1.0 / np.sum(ratios * ratios, axis=0)


def di_from_kernel(c: np.ndarray) -> np.ndarray:
    """Dependency indices straight from the co-exposure kernel.

    The lender totals cancel in ``s_ji / s_ii = C_ji / C_ii``, which lets
    scenario code update ``C`` incrementally without rebuilding ``S``.
    """
    diag = np.diag(c)
    ratios = c / diag[None, :]
    return 1.0 - 1.0 / np.sum(ratios * ratios, axis=0)


def dependency_index_sys(net: ExposureNetwork, s: ImpactMatrix | np.ndarray | None = None) -> float:
    """System Dependency Index, the risk-adjusted-size weighted mean of per-lender DI."""
    if s is None:
        s = impact_matrix(net)
    di = dependency_indices(s)
    totals = net.lender_totals
    if di.shape != totals.shape:
        raise ValueError("impact matrix does not match the network")
    return float(np.dot(totals, di) / totals.sum())


@dataclass(frozen=True)
class OverlapStats:
    overlap: np.ndarray  # boolean mask over borrowers
    co_exposure_frac: np.ndarray
    co_weight_frac: np.ndarray

    def overlap_ids(self, net: ExposureNetwork) -> list[str]:
        return [net.borrower_ids[k] for k in np.flatnonzero(self.overlap)]


def overlap_stats(net: ExposureNetwork) -> OverlapStats:
    """Share of each lender's raw and risk-adjusted exposure held in the overlap."""
    omega = net.overlap_mask
    co_e = np.empty(net.n)
    co_w = np.empty(net.n)
    for i in range(net.n):
        cols, e = net.lender_row(i, "raw")
        _, w = net.lender_row(i, "weighted")
        shared = omega[cols]
        co_e[i] = math.fsum(e[shared]) / net.raw_totals[i]
        co_w[i] = math.fsum(w[shared]) / net.lender_totals[i]
    return OverlapStats(omega.copy(), co_e, co_w)


@dataclass(frozen=True)
class RiskComposition:
    categories: tuple[int, ...]
    per_lender: dict[str, np.ndarray]
    overlap: np.ndarray | None  # None when no borrower is shared

    def as_rows(self):
        for scope, frac in [*self.per_lender.items(), ("overlap", self.overlap)]:
            if frac is None:
                continue
            for cat, f in zip(self.categories, frac):
                yield scope, cat, float(f)


def overlap_risk_composition(net: ExposureNetwork) -> RiskComposition:
    """Fraction of risk-adjusted exposure per risk category, per lender and in the overlap."""
    cats = net.risk_categories
    levels = np.unique(cats)
    pos = np.searchsorted(levels, cats)
    per_lender = {}
    for i, lid in enumerate(net.lenders):
        cols, w = net.lender_row(i)
        per_lender[lid] = _composition(pos[cols], w, len(levels))
    omega = net.overlap_mask
    w = net.weighted.tocoo()
    shared = omega[w.col]
    overlap = _composition(pos[w.col[shared]], w.data[shared], len(levels)) if shared.any() else None
    return RiskComposition(tuple(int(c) for c in levels), per_lender, overlap)


def _composition(pos: np.ndarray, w: np.ndarray, size: int) -> np.ndarray:
    sums = np.array([math.fsum(w[pos == c]) for c in range(size)])
    return sums / math.fsum(w)


@dataclass(frozen=True)
class ConcentrationReport:
    lender_ids: tuple[str, ...]
    hhi_raw: np.ndarray
    hhi_weighted: np.ndarray
    di: np.ndarray
    co_exposure_frac: np.ndarray
    co_weight_frac: np.ndarray
    di_sys: float

    CSV_HEADER = ("Lender", "HHI", "DI", "Co-exposures (%)", "Co-weights (%)")

    def to_csv(self, fh: TextIO) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(self.CSV_HEADER)
        for k, lid in enumerate(self.lender_ids):
            writer.writerow([
                lid,
                f"{self.hhi_weighted[k]:.6g}",
                f"{self.di[k]:.6g}",
                f"{100 * self.co_exposure_frac[k]:.4f}",
                f"{100 * self.co_weight_frac[k]:.4f}",
            ])

    def to_dict(self) -> dict:
        return {
            "di_sys": self.di_sys,
            "lenders": {
                lid: {
                    "hhi_raw": float(self.hhi_raw[k]),
                    "hhi_weighted": float(self.hhi_weighted[k]),
                    "di": float(self.di[k]),
                    "co_exposure_frac": float(self.co_exposure_frac[k]),
                    "co_weight_frac": float(self.co_weight_frac[k]),
                }
                for k, lid in enumerate(self.lender_ids)
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def concentration_report(net: ExposureNetwork, s: ImpactMatrix | None = None) -> ConcentrationReport:
    if s is None:
        s = impact_matrix(net)
    if s.lender_ids != net.lenders:
        raise NetworkError("impact matrix lenders do not match the network")
    ov = overlap_stats(net)
    return ConcentrationReport(
        lender_ids=net.lenders,
        hhi_raw=lender_hhi(net, "raw"),
        hhi_weighted=lender_hhi(net, "weighted"),
        di=dependency_indices(s),
        co_exposure_frac=ov.co_exposure_frac,
        co_weight_frac=ov.co_weight_frac,
        di_sys=dependency_index_sys(net, s),
    )
