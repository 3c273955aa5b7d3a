"""Stress and null-model experiments on exposure networks.

Every stochastic routine draws trial ``t`` from ``default_rng([seed, t])``,
so results do not depend on how trials are split across threads.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .concentration import di_from_kernel, hhi
from .network import (
    Borrower,
    ExposureNetwork,
    NetworkError,
    StepWeightParams,
    apply_step_weights,
    coexposure_kernel,
    step_weight,
)

__all__ = [
    "RandomizationResult",
    "randomize_within_risk",
    "shuffled_network",
    "portfolio_signature",
    "DowngradeReport",
    "downgrade",
    "OverlapTrajectory",
    "grow_overlap",
    "merge_borrowers",
    "SensitivityRecord",
    "borrower_stress",
    "generate_ds2_like",
    "generate_ds1_like",
]


def _di_sys(c: np.ndarray, totals: np.ndarray) -> float:
    return float(np.dot(totals, di_from_kernel(c)) / totals.sum())


class _PairKernel:
    """Co-exposure kernel for a fixed link pattern and changing link weights.

    Every ordered pair of links on a common borrower is listed once, so a
    trial costs ``sum_l deg(l)**2`` multiply-adds and no sparse algebra.
    """

    def __init__(self, indptr, indices, shape):
        n, m = shape
        rows = np.repeat(np.arange(n), np.diff(indptr))
        order = np.argsort(indices, kind="stable")
        col_ptr = np.concatenate([[0], np.cumsum(np.bincount(indices, minlength=m))])
        deg = np.diff(col_ptr)
        # links of borrower l are order[col_ptr[l]:col_ptr[l+1]]; pair them up
        pair_cols = np.repeat(np.arange(m), deg * deg)
        start = np.repeat(col_ptr[:-1], deg * deg)
        within = np.arange(pair_cols.size) - np.repeat(np.cumsum(deg * deg) - deg * deg, deg * deg)
        dg = deg[pair_cols]
        self.p = order[start + within // dg]
        self.q = order[start + within % dg]
        self.cols = pair_cols
        self.cell = rows[self.p] * n + rows[self.q]
        self.indices, self.n, self.m = indices, n, m

    def __call__(self, data: np.ndarray) -> np.ndarray:
        d = np.bincount(self.indices, weights=data, minlength=self.m)
        vals = data[self.p] * data[self.q] / d[self.cols]
        c = np.bincount(self.cell, weights=vals, minlength=self.n * self.n).reshape(self.n, self.n)
        return 0.5 * (c + c.T)


def _chunks(n: int, parts: int) -> list[range]:
    parts = max(1, min(parts, n))
    edges = np.linspace(0, n, parts + 1).astype(int)
    return [range(a, b) for a, b in zip(edges[:-1], edges[1:])]


def portfolio_signature(net: ExposureNetwork) -> tuple:
    """Per-lender totals, HHIs and risk composition, all exactly rounded.

    Two networks whose lenders hold the same multiset of (category, raw,
    weighted) links have identical signatures bit for bit.
    """
    return _signature(net.weighted.indptr, net.weighted.indices, net.raw.data,
                      net.weighted.data, net.risk_categories)


def _signature(indptr, indices, raw, w, cats) -> tuple:
    sig = []
    for i in range(len(indptr) - 1):
        lo, hi = indptr[i], indptr[i + 1]
        e, wi, ci = raw[lo:hi], w[lo:hi], cats[indices[lo:hi]]
        comp = tuple((int(c), math.fsum(wi[ci == c])) for c in np.unique(ci))
        sig.append((math.fsum(e), math.fsum(wi), hhi(e), hhi(wi), comp))
    return tuple(sig)


@dataclass(frozen=True)
class RandomizationResult:
    samples: np.ndarray
    observed: float
    p_value: float
    seed: int

    def histogram(self, bins: int = 50) -> tuple[np.ndarray, np.ndarray]:
        lo = min(self.samples.min(), self.observed)
        hi = max(self.samples.max(), self.observed)
        if hi <= lo:
            hi = lo + max(abs(lo), 1.0) * 1e-9
        return np.histogram(self.samples, bins=bins, range=(lo, hi))


def _permutation_groups(net: ExposureNetwork) -> list[np.ndarray]:
    cats = net.risk_categories
    w = net.weighted
    groups = []
    for i in range(net.n):
        lo, hi = w.indptr[i], w.indptr[i + 1]
        row_cats = cats[w.indices[lo:hi]]
        for c in np.unique(row_cats):
            pos = lo + np.flatnonzero(row_cats == c)
            if pos.size >= 2:
                groups.append(pos)
    return groups


def _shuffle(raw: np.ndarray, w: np.ndarray, groups, seed: int, trial: int):
    rng = np.random.default_rng([seed, trial])
    data_r, data_w = raw.copy(), w.copy()
    for pos in groups:
        perm = pos[rng.permutation(pos.size)]
        data_w[pos] = w[perm]
        data_r[pos] = raw[perm]
    return data_r, data_w


def shuffled_network(net: ExposureNetwork, seed: int, trial: int) -> ExposureNetwork:
    """The network drawn in trial ``trial`` of :func:`randomize_within_risk`."""
    data_r, data_w = _shuffle(net.raw.data, net.weighted.data, _permutation_groups(net), seed, trial)
    w = net.weighted
    return ExposureNetwork(net.lenders, net.borrowers,
                           sp.csr_matrix((data_r, w.indices, w.indptr), shape=w.shape),
                           sp.csr_matrix((data_w, w.indices, w.indptr), shape=w.shape))


def randomize_within_risk(net: ExposureNetwork, trials: int, seed: int = 0,
                          threads: int = 1, check: bool = True) -> RandomizationResult:
    """Null distribution of the system Dependency Index under counterparty shuffles.

    In each trial every lender's links are shuffled among that lender's own
    counterparties of the same risk category: the raw and risk-adjusted
    exposure to one borrower move together to another. The bipartite
    topology stays put, so the overlap count is unchanged, and each lender
    keeps its exact multiset of exposures per category. Only which borrower
    carries which exposure changes.

    ``p_value`` is the add-one right-tail estimate
    ``(#{samples >= observed} + 1) / (trials + 1)``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    groups = _permutation_groups(net)
    w, raw = net.weighted, net.raw
    shape = w.shape
    totals = net.lender_totals
    observed = _di_sys(coexposure_kernel(net), totals)
    signature = portfolio_signature(net) if check else None
    cats = net.risk_categories
    kernel = _PairKernel(w.indptr, w.indices, shape)

    def run(block: range) -> np.ndarray:
        out = np.empty(len(block))
        for j, t in enumerate(block):
            data_r, data_w = _shuffle(raw.data, w.data, groups, seed, t)
            if check:
                if _signature(w.indptr, w.indices, data_r, data_w, cats) != signature:
                    raise AssertionError(f"trial {t} changed a lender's portfolio profile")
            out[j] = _di_sys(kernel(data_w), totals)
        return out

    blocks = _chunks(trials, threads)
    if len(blocks) == 1:
        samples = run(blocks[0])
    else:
        with ThreadPoolExecutor(len(blocks)) as pool:
            samples = np.concatenate(list(pool.map(run, blocks)))
    # tolerance absorbs summation-order noise on relabelings equivalent to the identity
    tol = 1e-12 * max(abs(observed), 1e-300)
    hits = int(np.count_nonzero(samples >= observed - tol))
    return RandomizationResult(samples, observed, (hits + 1) / (trials + 1), seed)


@dataclass(frozen=True)
class DowngradeReport:
    lender_ids: tuple[str, ...]
    borrower_ids: tuple[str, ...]
    base_di: np.ndarray
    single: dict[str, np.ndarray]  # borrower id -> delta DI per lender
    joint: np.ndarray
    base_di_sys: float
    joint_di_sys: float

    @property
    def sum_of_singles(self) -> np.ndarray:
        return np.sum(list(self.single.values()), axis=0)

    @property
    def convexity(self) -> np.ndarray:
        """Joint increase minus the sum of the single-borrower increases."""
        return self.joint - self.sum_of_singles

    @property
    def convexity_pct(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return 100.0 * self.convexity / self.sum_of_singles

    def rows(self) -> list[tuple]:
        out = [(bid, *d) for bid, d in self.single.items()]
        if len(self.single) > 1:
            out.append(("Both" if len(self.single) == 2 else "All", *self.joint))
            out.append(("Difference", *self.convexity))
            out.append(("Difference (%)", *self.convexity_pct))
        return out


def _reweighted(net: ExposureNetwork, cols: Sequence[int], category: int,
                params: StepWeightParams) -> ExposureNetwork:
    w = net.weighted
    data = w.data.copy()
    mask = np.isin(w.indices, cols)
    data[mask] = net.raw.data[mask] * float(step_weight(category, params))
    borrowers = list(net.borrowers)
    for k in cols:
        b = borrowers[k]
        borrowers[k] = Borrower(b.id, b.pd, b.lgd, category)
    return ExposureNetwork(net.lenders, tuple(borrowers), net.raw,
                           sp.csr_matrix((data, w.indices, w.indptr), shape=w.shape))


def _di_vector(net: ExposureNetwork) -> tuple[np.ndarray, float]:
    di = di_from_kernel(coexposure_kernel(net))
    t = net.lender_totals
    return di, float(np.dot(t, di) / t.sum())


def downgrade(net: ExposureNetwork, borrower_ids: Iterable[str], new_category: int,
              params: StepWeightParams = StepWeightParams()) -> DowngradeReport:
    """Change of each lender's DI when borrowers move to a riskier category.

    The downgraded borrowers are re-weighted with the step weight of
    ``new_category``; all other risk-adjusted exposures are kept. With two
    or more borrowers the joint downgrade is compared with the sum of the
    single ones.
    """
    ids = list(dict.fromkeys(borrower_ids))
    if not ids:
        raise ValueError("no borrowers to downgrade")
    cols = []
    for bid in ids:
        if bid not in net.borrower_index:
            raise KeyError(f"unknown borrower {bid!r}")
        k = net.borrower_index[bid]
        cur = net.borrowers[k].risk_category
        if cur is None:
            raise NetworkError(f"borrower {bid} has no risk_category")
        if new_category < cur:
            raise ValueError(f"downgrade of {bid} to a safer category ({cur} -> {new_category})")
        cols.append(k)
    base, base_sys = _di_vector(net)
    single = {bid: _di_vector(_reweighted(net, [k], new_category, params))[0] - base
              for bid, k in zip(ids, cols)}
    joint_di, joint_sys = _di_vector(_reweighted(net, cols, new_category, params))
    return DowngradeReport(net.lenders, tuple(ids), base, single, joint_di - base,
                           base_sys, joint_sys)


def merge_borrowers(net: ExposureNetwork, a: str, b: str) -> ExposureNetwork:
    """Fuse two borrowers into one; the merged borrower keeps ``a``'s id.

    A lender holding both would see its HHI change, so that case is refused.
    The merged borrower takes the riskier category and the larger PD.
    """
    ka, kb = net.borrower_index[a], net.borrower_index[b]
    csc_raw = net.raw.tocsc()
    if set(csc_raw[:, ka].indices) & set(csc_raw[:, kb].indices):
        raise ValueError("cannot merge borrowers held by the same lender")
    keep = [k for k in range(net.m) if k != kb]
    raw = net.raw.tolil()
    weighted = net.weighted.tolil()
    raw[:, ka] = raw[:, ka] + raw[:, kb]
    weighted[:, ka] = weighted[:, ka] + weighted[:, kb]
    ba, bb = net.borrowers[ka], net.borrowers[kb]

    def riskier(x, y):
        return y if x is None else x if y is None else max(x, y)

    merged = Borrower(ba.id, riskier(ba.pd, bb.pd), riskier(ba.lgd, bb.lgd),
                      riskier(ba.risk_category, bb.risk_category))
    borrowers = [merged if k == ka else net.borrowers[k] for k in keep]
    return ExposureNetwork(net.lenders, tuple(borrowers),
                           raw.tocsr()[:, keep], weighted.tocsr()[:, keep])


@dataclass(frozen=True)
class OverlapTrajectory:
    """System DI after each merge; ``values[t, s]`` is trial t after s merges."""

    values: np.ndarray  # NaN after a trial ran out of eligible pairs
    truncated: bool

    @property
    def mean(self) -> np.ndarray:
        return np.nanmean(self.values, axis=0)

    @property
    def counts(self) -> np.ndarray:
        return np.sum(~np.isnan(self.values), axis=0)

    @property
    def std_err(self) -> np.ndarray:
        cnt = self.counts
        with np.errstate(divide="ignore", invalid="ignore"):
            sd = np.nanstd(self.values, axis=0, ddof=1) if self.values.shape[0] > 1 else np.zeros(cnt.shape)
            return np.where(cnt > 1, sd / np.sqrt(cnt), 0.0)


def _isolated_pools(net: ExposureNetwork) -> tuple[list[dict[int, list[int]]], np.ndarray, np.ndarray]:
    cats = net.risk_categories
    csc = net.weighted.tocsc()
    owner = np.full(net.m, -1)
    weight = np.zeros(net.m)
    iso = np.flatnonzero(net.lender_degree == 1)
    for k in iso:
        lo = csc.indptr[k]
        owner[k] = csc.indices[lo]
        weight[k] = csc.data[lo]
    levels = np.unique(cats[iso]) if iso.size else np.array([], dtype=int)
    pools = []
    for c in levels:
        by_lender: dict[int, list[int]] = OrderedDict()
        for k in iso[cats[iso] == c]:
            by_lender.setdefault(int(owner[k]), []).append(int(k))
        pools.append(by_lender)
    return pools, owner, weight


def grow_overlap(net: ExposureNetwork, steps: int, trials: int = 1000, seed: int = 0,
                 threads: int = 1) -> OverlapTrajectory:
    """Merge random pairs of isolated same-category borrowers of different lenders.

    Each merge turns two single-lender borrowers into one shared borrower.
    Lenders keep their exposures, so their HHI, totals and risk composition
    do not move; the system DI is tracked after every merge. Pairs are drawn
    uniformly among all eligible pairs. A trial that runs out of pairs stops
    early and the trajectory is flagged as truncated.
    """
    if steps < 0 or trials < 1:
        raise ValueError("steps must be >= 0 and trials >= 1")
    base_c = coexposure_kernel(net)
    totals = net.lender_totals
    observed = _di_sys(base_c, totals)
    pools, _, weight = _isolated_pools(net)
    n = net.n
    if steps > 0 and not any(sum(1 for v in p.values() if v) >= 2 for p in pools):
        raise ValueError("no eligible merge: need isolated borrowers of the same risk category "
                         "held by two different lenders")

    def one(t: int) -> tuple[np.ndarray, bool]:
        rng = np.random.default_rng([seed, t])
        c = base_c.copy()
        pool = [{i: list(v) for i, v in p.items()} for p in pools]
        out = np.full(steps + 1, np.nan)
        out[0] = observed
        for step in range(1, steps + 1):
            counts = np.zeros((len(pool), n))
            for ci, p in enumerate(pool):
                for i, v in p.items():
                    counts[ci, i] = len(v)
            pair_w = counts.sum(1) ** 2 - (counts ** 2).sum(1)  # twice the unordered pair count
            if pair_w.sum() <= 0:
                return out, True
            ci = rng.choice(len(pool), p=pair_w / pair_w.sum())
            cnt = counts[ci]
            joint = np.outer(cnt, cnt)
            np.fill_diagonal(joint, 0)
            flat = rng.choice(n * n, p=(joint / joint.sum()).ravel())
            i, j = divmod(int(flat), n)
            ka = pool[ci][i].pop(rng.integers(len(pool[ci][i])))
            kb = pool[ci][j].pop(rng.integers(len(pool[ci][j])))
            a, b = weight[ka], weight[kb]
            x = a * b / (a + b)
            c[i, i] -= x
            c[j, j] -= x
            c[i, j] += x
            c[j, i] += x
            out[step] = _di_sys(c, totals)
        return out, False

    def run(block: range):
        return [one(t) for t in block]

    blocks = _chunks(trials, threads)
    if len(blocks) == 1:
        res = run(blocks[0])
    else:
        with ThreadPoolExecutor(len(blocks)) as pool_ex:
            res = [r for part in pool_ex.map(run, blocks) for r in part]
    values = np.vstack([r[0] for r in res])
    return OverlapTrajectory(values, any(r[1] for r in res))


@dataclass(frozen=True)
class SensitivityRecord:
    borrower_id: str
    delta_di_sys: float
    delta_hhi_sys: float
    in_overlap: bool


def borrower_stress(net: ExposureNetwork, factor: float = 5.0) -> list[SensitivityRecord]:
    """Change of system DI and system HHI when one borrower's exposures are scaled.

    Each borrower's risk-adjusted column is multiplied by ``factor`` in turn.
    The system HHI is the size-weighted mean of lender risk-adjusted HHIs,
    weighted like the system DI. Updates are incremental: scaling column
    ``l`` scales its contribution to the co-exposure kernel by ``factor``.
    """
    if factor <= 0:
        raise ValueError("factor must be positive")
    c = coexposure_kernel(net)
    t = net.lender_totals
    w = net.weighted
    q = np.array([math.fsum(w.data[w.indptr[i]:w.indptr[i + 1]] ** 2) for i in range(net.n)])
    di = di_from_kernel(c)
    t_sum = t.sum()
    base_di_sys = float(np.dot(t, di) / t_sum)
    base_hhi_sys = float(np.dot(t, q / t ** 2) / t_sum)
    strength = net.borrower_strength
    csc = w.tocsc()
    overlap = net.overlap_mask
    out = []
    for k in range(net.m):
        lo, hi = csc.indptr[k], csc.indptr[k + 1]
        rows, wk = csc.indices[lo:hi], csc.data[lo:hi]
        sub = c[:, rows].copy()
        sub[rows, :] += (factor - 1) * np.outer(wk, wk) / strength[k]
        diag = sub[rows, np.arange(rows.size)]
        ratios = sub / diag[None, :]
        di_new = di.copy()
        di_new[rows] = 1.0 - 1.0 / np.sum(ratios * ratios, axis=0)
        t_new = t.copy()
        t_new[rows] += (factor - 1) * wk
        q_new = q.copy()
        q_new[rows] += (factor ** 2 - 1) * wk ** 2
        t_new_sum = t_new.sum()
        d_di = float(np.dot(t_new, di_new) / t_new_sum) - base_di_sys
        d_hhi = float(np.dot(t_new, q_new / t_new ** 2) / t_new_sum) - base_hhi_sys
        out.append(SensitivityRecord(net.borrower_ids[k], d_di, d_hhi, bool(overlap[k])))
    return out


def _price_categories(prices: np.ndarray) -> np.ndarray:
    # quartiles of price, cheapest quartile riskiest
    ranks = np.argsort(np.argsort(-prices, kind="stable"), kind="stable")
    return 1 + (4 * ranks) // max(len(prices), 1)


def generate_ds2_like(loans: Iterable, n_lenders: int = 5, isolated_frac: float = 0.15,
                      top_exclude_frac: float = 0.10, n_tranches: int = 3,
                      min_tranche: float = 0.20, seed: int = 0) -> ExposureNetwork:
    """Overlapping synthetic portfolios built from a list of syndicated loans.

    ``loans`` yields ``(issuer, amount, price)`` tuples or mappings with
    those keys. Loans are aggregated by issuer, and the risk-adjusted
    exposure is ``amount / price``. A fraction ``isolated_frac`` of issuers,
    drawn outside the largest ``top_exclude_frac`` by amount, goes whole to
    one random lender. Every other issuer is cut into ``n_tranches`` random
    pieces of at least ``min_tranche`` of its total, each held by a distinct
    random lender. Issuers get risk categories 1-4 by price quartile
    (cheapest = riskiest).
    """
    if not (0 <= isolated_frac < 1 and 0 <= top_exclude_frac < 1):
        raise ValueError("fractions must lie in [0, 1)")
    if min_tranche * n_tranches > 1:
        raise ValueError("min_tranche * n_tranches must not exceed 1")
    if n_tranches < 1 or n_tranches > n_lenders:
        raise ValueError("need 1 <= n_tranches <= n_lenders")

    amount: dict[str, float] = {}
    adjusted: dict[str, float] = {}
    for loan in loans:
        if isinstance(loan, Mapping):
            issuer, amt, price = loan["issuer"], float(loan["amount"]), float(loan["price"])
        else:
            issuer, amt, price = loan[0], float(loan[1]), float(loan[2])
        if amt <= 0 or price <= 0:
            raise ValueError(f"issuer {issuer}: amounts and prices must be positive")
        issuer = str(issuer)
        amount[issuer] = amount.get(issuer, 0.0) + amt
        adjusted[issuer] = adjusted.get(issuer, 0.0) + amt / price

    issuers = list(amount)
    m = len(issuers)
    if m < n_lenders:
        raise ValueError(f"too few issuers ({m}) for {n_lenders} lenders")
    amt = np.array([amount[x] for x in issuers])
    adj = np.array([adjusted[x] for x in issuers])
    rng = np.random.default_rng(seed)

    n_top = math.ceil(top_exclude_frac * m)
    top = set(np.argsort(-amt, kind="stable")[:n_top].tolist())
    eligible = np.array([k for k in range(m) if k not in top], dtype=int)
    n_iso = int(round(isolated_frac * m))
    if n_iso > eligible.size:
        raise ValueError("too few issuers outside the excluded top loans to isolate")
    iso = set(rng.choice(eligible, size=n_iso, replace=False).tolist()) if n_iso else set()

    rows, cols, raw_vals, w_vals = [], [], [], []
    for k in range(m):
        if k in iso:
            holders = [int(rng.integers(n_lenders))]
            fracs = np.array([1.0])
        else:
            holders = rng.choice(n_lenders, size=n_tranches, replace=False).tolist()
            fracs = min_tranche + (1 - n_tranches * min_tranche) * rng.dirichlet(np.ones(n_tranches))
        for i, f in zip(holders, fracs):
            rows.append(i)
            cols.append(k)
            raw_vals.append(amt[k] * f)
            w_vals.append(adj[k] * f)

    shape = (n_lenders, m)
    held = np.bincount(rows, minlength=n_lenders)
    if np.any(held == 0):
        raise NetworkError("too few issuers: some lender received no exposure")
    prices = amt / adj  # amount-weighted harmonic mean price per issuer
    cats = _price_categories(prices)
    borrowers = tuple(Borrower(x, risk_category=int(c)) for x, c in zip(issuers, cats))
    lenders = tuple(chr(ord("A") + i) if n_lenders <= 26 else f"L{i}" for i in range(n_lenders))
    return ExposureNetwork(lenders, borrowers,
                           sp.csr_matrix((raw_vals, (rows, cols)), shape=shape),
                           sp.csr_matrix((w_vals, (rows, cols)), shape=shape))


DEFAULT_CATEGORY_PD = {1: 0.003, 2: 0.01, 3: 0.03, 4: 0.10}


def generate_ds1_like(n_borrowers: int = 1100, n_shared: int = 9, n_lenders: int = 2,
                      category_probs: Sequence[float] = (0.25, 0.35, 0.25, 0.15),
                      overlap_category_probs: Sequence[float] | None = None,
                      overlap_size_factor: float = 1.0, sigma: float = 1.5,
                      lgd: float = 0.45, params: StepWeightParams = StepWeightParams(),
                      seed: int = 0) -> ExposureNetwork:
    """Weakly overlapping bank portfolios with four risk categories.

    Exposures are lognormal with log-scale ``sigma``. ``n_shared`` borrowers
    are held by two distinct lenders. Their categories follow
    ``overlap_category_probs`` and their exposures are multiplied by
    ``overlap_size_factor``, so the overlap can be tilted towards risky,
    large names. Borrowers get a PD from their category and a common LGD,
    so the capital pipeline can run on the result. Weights use the step
    function ``params``.
    """
    if n_lenders < 2 or n_shared > n_borrowers:
        raise ValueError("need >= 2 lenders and n_shared <= n_borrowers")
    rng = np.random.default_rng(seed)
    probs = np.asarray(category_probs, dtype=float)
    probs = probs / probs.sum()
    ov_probs = probs if overlap_category_probs is None else np.asarray(overlap_category_probs, float)
    ov_probs = ov_probs / ov_probs.sum()
    n_iso = n_borrowers - n_shared
    cats = np.concatenate([1 + rng.choice(len(probs), size=n_iso, p=probs),
                           1 + rng.choice(len(ov_probs), size=n_shared, p=ov_probs)])
    owner = np.empty(n_iso, dtype=int)
    owner[:n_lenders] = np.arange(n_lenders)  # every lender holds something
    owner[n_lenders:] = rng.integers(n_lenders, size=n_iso - n_lenders)
    rows, cols, vals = [], [], []
    for k in range(n_iso):
        rows.append(owner[k])
        cols.append(k)
        vals.append(rng.lognormal(0.0, sigma))
    for j in range(n_shared):
        k = n_iso + j
        for i in rng.choice(n_lenders, size=2, replace=False):
            rows.append(int(i))
            cols.append(k)
            vals.append(overlap_size_factor * rng.lognormal(0.0, sigma))
    raw = sp.csr_matrix((np.asarray(vals) * 1e6, (rows, cols)), shape=(n_lenders, n_borrowers))
    borrowers = tuple(Borrower(str(k + 1), DEFAULT_CATEGORY_PD.get(int(c), 0.1), lgd, int(c))
                      for k, c in enumerate(cats))
    lenders = tuple(chr(ord("A") + i) if n_lenders <= 26 else f"L{i}" for i in range(n_lenders))
    net = ExposureNetwork(lenders, borrowers, raw, raw)
    return apply_step_weights(net, params)
