"""Randomized checks of the four structural properties of the Dependency Index.

Each ``check_*`` function draws ``count`` instances and returns the number of
violations. Instances are two-lender systems with random isolated and
shared borrowers; the first property also uses larger random systems.
"""

import numpy as np

from overlaprisk import ExposureNetwork, dependency_index_sys, dependency_indices, impact_matrix

EPS_FRACTIONS = np.geomspace(1e-6, 1e-1, 6)
TOL = 1e-13


def di_all(w):
    net = ExposureNetwork.from_dense(w)
    s = impact_matrix(net)
    return np.append(dependency_indices(s), dependency_index_sys(net, s))


def two_lender_system(rng, min_shared=1):
    """Columns: A-only borrowers, shared borrowers, B-only borrowers."""
    ia, sh, ib = rng.integers(1, 6), rng.integers(min_shared, 6), rng.integers(1, 6)
    w = np.zeros((2, ia + sh + ib))
    w[0, :ia + sh] = rng.lognormal(0, 1, ia + sh)
    w[1, ia:] = rng.lognormal(0, 1, sh + ib)
    return w, np.arange(ia), np.arange(ia, ia + sh)


def check_minimum_dependency(rng, count):
    """DI_i == 0 exactly when no other lender shares a borrower with i."""
    bad = 0
    for _ in range(count):
        n = rng.integers(2, 7)
        m = rng.integers(n, 25)
        loner = rng.random(n) < 0.4  # lenders that never share
        w = np.zeros((n, m))
        for l in range(m):
            i = l if l < n else rng.integers(n)
            w[i, l] = rng.lognormal()
            if not loner[i]:
                others = np.flatnonzero(~loner)
                extra = others[rng.random(others.size) < 0.3]
                w[extra, l] = rng.lognormal(size=extra.size)
        net = ExposureNetwork.from_dense(w)
        s = impact_matrix(net).s
        di = dependency_indices(s)
        off = s - np.diag(np.diag(s))
        isolated = ~off.any(axis=0)
        bad += int(np.any((di == 0) != isolated))
    return bad


def check_transfer_monotonicity(rng, count):
    """Moving weight from an isolated to a shared borrower never lowers DI."""
    bad = 0
    for _ in range(count):
        w, iso, shared = two_lender_system(rng)
        base = di_all(w)
        src, dst = rng.choice(iso), rng.choice(shared)
        for f in EPS_FRACTIONS:
            w2 = w.copy()
            eps = f * w[0, src]
            w2[0, src] -= eps
            w2[0, dst] += eps
            bad += int(np.any(di_all(w2) < base - TOL))
    return bad


def check_merge_superadditivity(rng, count):
    """Merging two shared borrowers never lowers DI; equality iff proportional.

    Returns (violations, equality_cases_checked).
    """
    bad = eq = 0
    for t in range(count):
        w, _, shared = two_lender_system(rng, min_shared=2)
        a, b = rng.choice(shared, size=2, replace=False)
        if t % 4 == 0:
            # proportional pair: w_A1 / w_A2 == w_B1 / w_B2
            w[1, b] = w[1, a] * w[0, b] / w[0, a]
        base = di_all(w)
        merged = np.delete(w, b, axis=1)
        merged[:, a if a < b else a - 1] += w[:, b]
        after = di_all(merged)
        proportional = np.isclose(w[0, a] * w[1, b], w[0, b] * w[1, a], rtol=1e-12)
        if proportional:
            eq += 1
            bad += int(np.any(np.abs(after - base) > 1e-12))
        else:
            bad += int(np.any(after <= base))
    return bad, eq


def check_isolated_dilution(rng, count):
    """Moving weight from a shared borrower to a new isolated one never raises DI."""
    bad = 0
    for _ in range(count):
        w, _, shared = two_lender_system(rng)
        base = di_all(w)
        src = rng.choice(shared)
        lender = rng.integers(2)
        for f in EPS_FRACTIONS:
            w2 = np.hstack([w, np.zeros((2, 1))])
            eps = f * w[lender, src]
            w2[lender, src] -= eps
            w2[lender, -1] = eps
            bad += int(np.any(di_all(w2) > base + TOL))
    return bad


def perturbed_gamma_slope(shares, overlap, cap, params, eps=1e-6):
    """Central difference of the GA when ``eps`` of share moves into the overlap.

    Overlap shares grow by ``eps`` and each non-overlap share shrinks by
    ``eps * N_overlap / N_rest``, so the shares still sum to one.
    """
    from overlaprisk import granularity_adjustment

    om = np.asarray(overlap, dtype=bool)
    step = np.where(om, 1.0, -om.sum() / (~om).sum())
    up = granularity_adjustment(shares + eps * step, cap, params)
    down = granularity_adjustment(shares - eps * step, cap, params)
    return (up - down) / (2 * eps)


def random_r_system(rng):
    """Small lender portfolio with a nonempty overlap and a nonempty rest."""
    n = int(rng.integers(2, 13))
    n_om = int(rng.integers(1, n))
    om = np.zeros(n, dtype=bool)
    om[rng.choice(n, n_om, replace=False)] = True
    # keep every share comfortably above the perturbation size
    shares = rng.dirichlet(np.ones(n)) * 0.9 + 0.1 / n
    pd = np.exp(rng.uniform(np.log(1e-3), np.log(0.3), n))
    lgd = rng.uniform(0.1, 0.9, n)
    return shares, om, pd, lgd
