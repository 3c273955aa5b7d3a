import sys

import numpy as np
import pytest

from overlaprisk import ExposureNetwork
from overlaprisk.network import Borrower


def dense_impact_oracle(w):
    """Triple loop over lenders i, j and borrowers l, no sparse algebra."""
    w = np.asarray(w, dtype=float)
    n, m = w.shape
    d = [sum(w[k, l] for k in range(n)) for l in range(m)]
    t = [sum(w[k, l] for l in range(m)) for k in range(n)]
    s = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for l in range(m):
                if w[i, l] and w[j, l]:
                    acc += w[i, l] * w[j, l] / d[l]
            s[i, j] = acc / t[j]
    return s


def dense_di_oracle(s):
    n = s.shape[0]
    out = np.zeros(n)
    for i in range(n):
        out[i] = 1 - 1 / sum((s[j, i] / s[i, i]) ** 2 for j in range(n))
    return out


def random_dense(rng, n, m, density=0.3):
    """Random nonnegative matrix with no empty row or column."""
    w = rng.lognormal(0, 1, (n, m)) * (rng.random((n, m)) < density)
    for l in range(m):
        if not w[:, l].any():
            w[rng.integers(n), l] = rng.lognormal()
    for i in range(n):
        if not w[i].any():
            w[i, rng.integers(m)] = rng.lognormal()
    return w


def with_categories(net, cats, pds=None, lgd=0.45):
    pds = pds if pds is not None else [0.01] * len(cats)
    bs = tuple(Borrower(b.id, float(p), lgd, int(c)) for b, c, p in zip(net.borrowers, cats, pds))
    return net.with_borrowers(bs)


@pytest.fixture
def building_block():
    # lender A holds borrowers 1 and 2, lender B holds 2 and 3, all unit weights
    return ExposureNetwork.from_dense([[1, 1, 0], [0, 1, 1]], lenders=["A", "B"],
                                      borrowers=["1", "2", "3"])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
