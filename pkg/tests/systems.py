"""Synthetic multi-lender systems shared by the calibration and acceptance tests."""

import numpy as np

from overlaprisk import borrower_stress, generate_ds1_like, lender_inputs

PLANTED = (0.5, 50.0)


def coexposure_inputs(seed=3, n_lenders=5, n_borrowers=600, n_shared=40):
    net = generate_ds1_like(n_borrowers=n_borrowers, n_shared=n_shared, n_lenders=n_lenders, seed=seed)
    d = [r.delta_di_sys for r in borrower_stress(net)]
    return lender_inputs(net, d)


def planted_gaps(lenders, alpha=PLANTED[0], eta=PLANTED[1]):
    """Gaps produced by the forward model itself."""
    return {li.lender: li.k_ce(alpha, eta) for li in lenders}


def rel_err(got, want):
    return abs(got - want) / abs(want)


def portfolio_sigma(s, pd, lgd):
    """Standard deviation of the independent-default loss."""
    loss = np.asarray(s) * np.asarray(lgd)
    return float(np.sqrt(np.sum(loss ** 2 * pd * (1 - pd))))
