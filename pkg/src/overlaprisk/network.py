"""Bipartite lender/borrower exposure network and its projections.

Rows of every matrix are lenders, columns are borrowers. ``raw`` holds the
exposures at default, ``weighted`` the risk-adjusted exposures that every
interdependence metric is computed from.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence, TextIO

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Borrower",
    "ExposureNetwork",
    "StepWeightParams",
    "ImpactMatrix",
    "BorrowerGraph",
    "NetworkError",
    "load_exposures",
    "apply_step_weights",
    "apply_pd_weights",
    "step_weight",
    "impact_matrix",
    "coexposure_kernel",
    "asymmetry_check",
    "borrower_projection",
    "reconcile_categories",
    "network_to_csv",
]


class NetworkError(ValueError):
    """Raised when exposure data violates the network invariants."""


@dataclass(frozen=True)
class Borrower:
    id: str
    pd: float | None = None
    lgd: float | None = None
    risk_category: int | None = None

    def __post_init__(self):
        if self.pd is not None and not 0.0 <= self.pd <= 1.0:
            raise NetworkError(f"borrower {self.id}: pd {self.pd} outside [0, 1]")
        if self.lgd is not None and not 0.0 <= self.lgd <= 1.0:
            raise NetworkError(f"borrower {self.id}: lgd {self.lgd} outside [0, 1]")
        if self.risk_category is not None and self.risk_category < 1:
            raise NetworkError(
                f"borrower {self.id}: risk_category must be >= 1, got {self.risk_category}"
            )


@dataclass(frozen=True)
class StepWeightParams:
    """Two-level risk weight ``a + b * [r > r0]``."""

    a: float = 0.2
    b: float = 1.0
    r0: float = 1.5

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise ValueError("step weight coefficients must be nonnegative")
        if self.a + self.b <= 0:
            raise ValueError("a + b must be positive")


def step_weight(category, params: StepWeightParams):
    """Weight factor for risk categories; the boundary ``r == r0`` counts as safe."""
    r = np.asarray(category, dtype=float)
    return params.a + params.b * (r > params.r0)


def _canonical(m) -> sp.csr_matrix:
    m = sp.csr_matrix(m, dtype=float, copy=True)
    m.sum_duplicates()
    m.sort_indices()
    return m


def _freeze(m: sp.csr_matrix) -> sp.csr_matrix:
    for arr in (m.data, m.indices, m.indptr):
        arr.flags.writeable = False
    return m


@dataclass(frozen=True)
class ExposureNetwork:
    lenders: tuple[str, ...]
    borrowers: tuple[Borrower, ...]
    raw: sp.csr_matrix = field(repr=False)
    weighted: sp.csr_matrix = field(repr=False)

    def __post_init__(self):
        lenders = tuple(str(x) for x in self.lenders)
        borrowers = tuple(self.borrowers)
        object.__setattr__(self, "lenders", lenders)
        object.__setattr__(self, "borrowers", borrowers)
        if len(set(lenders)) != len(lenders):
            raise NetworkError("lender ids must be unique")
        if len({b.id for b in borrowers}) != len(borrowers):
            raise NetworkError("borrower ids must be unique")

        raw = _canonical(self.raw)
        weighted = _canonical(self.weighted)
        shape = (len(lenders), len(borrowers))
        if raw.shape != shape or weighted.shape != shape:
            raise NetworkError(f"matrix shape must be {shape}")
        if raw.nnz and raw.data.min() < 0 or weighted.nnz and weighted.data.min() < 0:
            raise NetworkError("exposures must be nonnegative")
        if not np.all(np.isfinite(weighted.data)) or not np.all(np.isfinite(raw.data)):
            raise NetworkError("exposures must be finite")
        # explicit zeros are structural links with no weight, which is not allowed
        if np.any(raw.data == 0) or np.any(weighted.data == 0):
            bad = sorted({borrowers[k].id for k in weighted.indices[weighted.data == 0]}
                         | {borrowers[k].id for k in raw.indices[raw.data == 0]})
            raise NetworkError(f"zero-weight borrower column / link for borrowers {bad[:5]}")
        if not (np.array_equal(raw.indptr, weighted.indptr)
                and np.array_equal(raw.indices, weighted.indices)):
            raise NetworkError("raw and weighted exposures must share a sparsity pattern")

        row_nnz = np.diff(raw.indptr)
        if np.any(row_nnz == 0):
            bad = [lenders[i] for i in np.flatnonzero(row_nnz == 0)]
            raise NetworkError(f"lenders without exposures: {bad[:5]}")
        col_nnz = np.bincount(raw.indices, minlength=shape[1])
        if np.any(col_nnz == 0):
            bad = [borrowers[k].id for k in np.flatnonzero(col_nnz == 0)]
            raise NetworkError(f"zero-weight borrower column: {bad[:5]}")

        object.__setattr__(self, "raw", _freeze(raw))
        object.__setattr__(self, "weighted", _freeze(weighted))

    @classmethod
    def from_dense(cls, raw, weighted=None, lenders=None, borrowers=None) -> "ExposureNetwork":
        """Build a network from dense arrays; zeros mean "no link"."""
        raw = np.atleast_2d(np.asarray(raw, dtype=float))
        weighted = raw if weighted is None else np.atleast_2d(np.asarray(weighted, dtype=float))
        n, m = raw.shape
        if lenders is None:
            lenders = [chr(ord("A") + i) if n <= 26 else f"L{i}" for i in range(n)]
        if borrowers is None:
            borrowers = [Borrower(str(k + 1)) for k in range(m)]
        else:
            borrowers = [b if isinstance(b, Borrower) else Borrower(str(b)) for b in borrowers]
        return cls(tuple(lenders), tuple(borrowers), sp.csr_matrix(raw), sp.csr_matrix(weighted))

    @property
    def n(self) -> int:
        return len(self.lenders)

    @property
    def m(self) -> int:
        return len(self.borrowers)

    @cached_property
    def borrower_ids(self) -> tuple[str, ...]:
        return tuple(b.id for b in self.borrowers)

    @cached_property
    def lender_index(self) -> dict[str, int]:
        return {x: i for i, x in enumerate(self.lenders)}

    @cached_property
    def borrower_index(self) -> dict[str, int]:
        return {b.id: k for k, b in enumerate(self.borrowers)}

    @cached_property
    def lender_totals(self) -> np.ndarray:
        """Risk-adjusted portfolio size of each lender."""
        return _row_fsum(self.weighted)

    @cached_property
    def raw_totals(self) -> np.ndarray:
        return _row_fsum(self.raw)

    @cached_property
    def borrower_strength(self) -> np.ndarray:
        """Total risk-adjusted exposure to each borrower across lenders."""
        return np.bincount(self.weighted.indices, weights=self.weighted.data, minlength=self.m)

    @cached_property
    def lender_degree(self) -> np.ndarray:
        """Number of lenders holding each borrower."""
        return np.bincount(self.raw.indices, minlength=self.m)

    @cached_property
    def overlap_mask(self) -> np.ndarray:
        """Borrowers held by two or more lenders."""
        return self.lender_degree >= 2

    @cached_property
    def risk_categories(self) -> np.ndarray:
        missing = [b.id for b in self.borrowers if b.risk_category is None]
        if missing:
            raise NetworkError(f"borrowers without risk_category: {missing[:5]}")
        return np.array([b.risk_category for b in self.borrowers], dtype=int)

    @cached_property
    def pds(self) -> np.ndarray:
        missing = [b.id for b in self.borrowers if b.pd is None]
        if missing:
            raise NetworkError(f"borrowers without pd: {missing[:5]}")
        return np.array([b.pd for b in self.borrowers], dtype=float)

    @cached_property
    def lgds(self) -> np.ndarray:
        missing = [b.id for b in self.borrowers if b.lgd is None]
        if missing:
            raise NetworkError(f"borrowers without lgd: {missing[:5]}")
        return np.array([b.lgd for b in self.borrowers], dtype=float)

    def with_weights(self, weighted) -> "ExposureNetwork":
        return ExposureNetwork(self.lenders, self.borrowers, self.raw, weighted)

    def with_borrowers(self, borrowers: Sequence[Borrower]) -> "ExposureNetwork":
        return ExposureNetwork(self.lenders, tuple(borrowers), self.raw, self.weighted)

    def lender_row(self, i: int, which: str = "weighted") -> tuple[np.ndarray, np.ndarray]:
        """Borrower indices and values of lender ``i``."""
        mat = self.weighted if which == "weighted" else self.raw
        lo, hi = mat.indptr[i], mat.indptr[i + 1]
        return mat.indices[lo:hi], mat.data[lo:hi]


def _row_fsum(mat: sp.csr_matrix) -> np.ndarray:
    # exactly rounded, so totals do not depend on the storage order of a row
    return np.array([math.fsum(mat.data[mat.indptr[i]:mat.indptr[i + 1]])
                     for i in range(mat.shape[0])])


_REQUIRED = ("lender_id", "borrower_id", "ead")


def _opt_float(value: str | None) -> float | None:
    if value is None or value.strip() == "":
        return None
    return float(value)


def load_exposures(source: str | os.PathLike | TextIO) -> ExposureNetwork:
    """Read ``lender_id,borrower_id,ead[,pd,lgd,risk_category]`` rows.

    Duplicate (lender, borrower) rows are summed. Lenders and borrowers keep
    the order in which they first appear. ``source`` is a path or an open
    text stream; leading ``#`` comment lines are skipped. Borrower attributes
    given on several rows must agree, except ``risk_category`` where the
    riskier (larger) value wins.

    An optional ``weight`` column carries precomputed risk-adjusted
    exposures (summed like ``ead``); without it ``weighted == raw`` and a
    weighting scheme must be applied before computing risk-adjusted metrics.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="", encoding="utf-8") as fh:
            return load_exposures(fh)

    # leading "#" lines are provenance headers written by this package
    lines = iter(source)
    skipped = 0
    first = next(lines, None)
    while first is not None and first.startswith("#"):
        skipped += 1
        first = next(lines, None)
    reader = csv.DictReader(itertools.chain([first], lines) if first is not None else iter(()))
    if reader.fieldnames is None:
        raise NetworkError("empty exposure file")
    header = [h.strip() for h in reader.fieldnames]
    reader.fieldnames = header
    missing = [c for c in _REQUIRED if c not in header]
    if missing:
        raise NetworkError(f"missing required column(s): {', '.join(missing)}")

    lenders: dict[str, int] = {}
    borrower_ix: dict[str, int] = {}
    attrs: list[dict] = []
    cells: dict[tuple[int, int], float] = {}
    given: dict[tuple[int, int], float] = {}
    has_weight = "weight" in header

    for lineno, row in enumerate(reader, start=2 + skipped):
        try:
            lid, bid = row["lender_id"].strip(), row["borrower_id"].strip()
            ead = float(row["ead"])
            pd = _opt_float(row.get("pd"))
            lgd = _opt_float(row.get("lgd"))
            cat = _opt_float(row.get("risk_category"))
        except (AttributeError, TypeError, ValueError) as exc:
            raise NetworkError(f"line {lineno}: malformed row ({exc})") from None
        if not lid or not bid:
            raise NetworkError(f"line {lineno}: empty lender or borrower id")
        if not math.isfinite(ead):
            raise NetworkError(f"line {lineno}: non-finite exposure")
        if ead < 0:
            raise NetworkError(f"line {lineno}: negative exposure {ead}")
        if cat is not None and cat != int(cat):
            raise NetworkError(f"line {lineno}: risk_category must be an integer")

        i = lenders.setdefault(lid, len(lenders))
        if bid not in borrower_ix:
            borrower_ix[bid] = len(attrs)
            attrs.append({"id": bid, "pd": None, "lgd": None, "risk_category": None})
        k = borrower_ix[bid]
        a = attrs[k]
        for key, val in (("pd", pd), ("lgd", lgd)):
            if val is None:
                continue
            if a[key] is not None and a[key] != val:
                raise NetworkError(f"line {lineno}: conflicting {key} for borrower {bid}")
            a[key] = val
        if cat is not None:
            a["risk_category"] = int(cat) if a["risk_category"] is None else max(a["risk_category"], int(cat))
        cells[(i, k)] = cells.get((i, k), 0.0) + ead
        if has_weight:
            try:
                wv = float(row["weight"])
            except (TypeError, ValueError):
                raise NetworkError(f"line {lineno}: malformed weight") from None
            if wv < 0 or not math.isfinite(wv):
                raise NetworkError(f"line {lineno}: negative exposure weight {wv}")
            given[(i, k)] = given.get((i, k), 0.0) + wv

    if not cells:
        raise NetworkError("empty exposure file")

    try:
        borrowers = tuple(Borrower(**a) for a in attrs)
    except NetworkError as exc:
        raise NetworkError(str(exc)) from None
    # files without any rating column are plain exposure lists
    rated = "pd" in header or "risk_category" in header
    unrated = [b.id for b in borrowers if b.pd is None and b.risk_category is None]
    if rated and unrated:
        raise NetworkError(f"borrowers with neither pd nor risk_category: {unrated[:5]}")

    keys = np.array(list(cells.keys()), dtype=np.int64).reshape(-1, 2)
    vals = np.fromiter(cells.values(), dtype=float, count=len(cells))
    # zero-exposure rows carry no link
    keep = vals > 0
    shape = (len(lenders), len(borrowers))
    raw = sp.csr_matrix((vals[keep], (keys[keep, 0], keys[keep, 1])), shape=shape)
    weighted = raw
    if has_weight:
        wvals = np.array([given[key] for key in cells], dtype=float)
        weighted = sp.csr_matrix((wvals[keep], (keys[keep, 0], keys[keep, 1])), shape=shape)
    return ExposureNetwork(tuple(lenders), borrowers, raw, weighted)


def reconcile_categories(*ratings: dict[str, int]) -> dict[str, int]:
    """Merge per-bank risk ratings, keeping the riskier category on conflict."""
    out: dict[str, int] = {}
    for rating in ratings:
        for bid, cat in rating.items():
            out[bid] = max(out.get(bid, cat), cat)
    return out


def apply_step_weights(net: ExposureNetwork, params: StepWeightParams) -> ExposureNetwork:
    """Risk-adjust exposures with the two-level step weight of each borrower's category."""
    factor = step_weight(net.risk_categories, params)
    return net.with_weights(net.raw @ sp.diags(factor))


def apply_pd_weights(net: ExposureNetwork) -> ExposureNetwork:
    """Risk-adjust exposures as PD times EAD."""
    pds = net.pds
    if np.any(pds == 0):
        zero = [net.borrowers[k].id for k in np.flatnonzero(pds == 0)]
        raise NetworkError(f"zero-weight borrower column: {zero[:5]}")
    return net.with_weights(net.raw @ sp.diags(pds))


@dataclass(frozen=True)
class ImpactMatrix:
    """Lender-to-lender impact; ``s[i, j]`` is the impact of lender i on lender j."""

    s: np.ndarray
    lender_ids: tuple[str, ...]

    def __post_init__(self):
        s = np.array(self.s, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] != len(self.lender_ids):
            raise ValueError("impact matrix must be square and match lender ids")
        s.flags.writeable = False
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "lender_ids", tuple(self.lender_ids))

    @property
    def n(self) -> int:
        return len(self.lender_ids)

    def to_csv(self, fh: TextIO, digits: int = 12) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["lender", *self.lender_ids])
        for lid, row in zip(self.lender_ids, self.s):
            writer.writerow([lid, *(f"{v:.{digits}g}" for v in row)])

    def to_dict(self) -> dict[str, dict[str, float]]:
        return {a: {b: float(self.s[i, j]) for j, b in enumerate(self.lender_ids)}
                for i, a in enumerate(self.lender_ids)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def coexposure_kernel(net: ExposureNetwork) -> np.ndarray:
    """Symmetric kernel ``C[i, j] = sum_l w_il w_jl / d_l`` (``d_l`` = borrower strength).

    The sparse product touches each pair of links on a common borrower once,
    so the cost is ``sum_l deg(l)**2`` rather than ``n * m * n``.
    """
    w = net.weighted
    scaled = w @ sp.diags(1.0 / net.borrower_strength)
    c = (scaled @ w.T).toarray()
    return 0.5 * (c + c.T)


def impact_matrix(net: ExposureNetwork) -> ImpactMatrix:
    c = coexposure_kernel(net)
    return ImpactMatrix(c / net.lender_totals[None, :], net.lenders)


def asymmetry_check(net: ExposureNetwork, rtol: float = 1e-9) -> list[tuple[str, str]]:
    """Lender pairs whose mutual impacts differ by more than ``rtol`` (relative)."""
    s = impact_matrix(net).s
    pairs = []
    for i in range(net.n):
        for j in range(i + 1, net.n):
            a, b = s[i, j], s[j, i]
            if abs(a - b) > rtol * max(abs(a), abs(b)):
                pairs.append((net.lenders[i], net.lenders[j]))
    return pairs


@dataclass(frozen=True)
class BorrowerGraph:
    """Projection of the network onto its largest borrowers.

    ``weights[k, l]`` is the impact of borrower k on borrower l, the
    lender-side formula with the roles of lenders and borrowers swapped:
    ``sum_i w_ik w_il / (T_i * d_l)`` with ``T_i`` the lender total and
    ``d_l`` the borrower strength. The normalisation uses the full network,
    so rows restricted to the top borrowers do not sum to one.
    """

    borrower_ids: tuple[str, ...]
    strength: np.ndarray
    weights: np.ndarray

    def edges(self, include_zero: bool = False) -> Iterable[tuple[str, str, float]]:
        ids = self.borrower_ids
        for k in range(len(ids)):
            for l in range(len(ids)):
                if k != l and (include_zero or self.weights[k, l] > 0):
                    yield ids[k], ids[l], float(self.weights[k, l])

    def weight(self, a: str, b: str) -> float:
        ix = {x: i for i, x in enumerate(self.borrower_ids)}
        return float(self.weights[ix[a], ix[b]])

    def to_csv(self, fh: TextIO) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["source", "target", "weight"])
        for a, b, v in self.edges():
            writer.writerow([a, b, f"{v:.12g}"])


def borrower_projection(net: ExposureNetwork, top_k: int) -> BorrowerGraph:
    if top_k <= 0:
        raise ValueError("top_k must be positive")
    top_k = min(top_k, net.m)
    strength = net.borrower_strength
    # stable sort keeps first-appearance order among ties
    top = np.argsort(-strength, kind="stable")[:top_k]
    sub = net.weighted[:, top].tocsc()
    scaled = sp.diags(1.0 / net.lender_totals) @ sub
    w = (sub.T @ scaled).toarray()
    w = w / strength[top][None, :]
    return BorrowerGraph(tuple(net.borrower_ids[k] for k in top), strength[top], w)


def network_to_csv(net: ExposureNetwork) -> str:
    """Serialise a network back to the ingestion CSV layout."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["lender_id", "borrower_id", "ead", "pd", "lgd", "risk_category", "weight"])
    for i, lid in enumerate(net.lenders):
        _, w = net.lender_row(i, "weighted")
        for (k, e), wk in zip(zip(*net.lender_row(i, "raw")), w):
            b = net.borrowers[k]
            writer.writerow([lid, b.id, repr(float(e)),
                             "" if b.pd is None else repr(b.pd),
                             "" if b.lgd is None else repr(b.lgd),
                             "" if b.risk_category is None else b.risk_category,
                             repr(float(wk))])
    return buf.getvalue()
