import math

import numpy as np
import pytest

from overlaprisk import (
    ExposureNetwork,
    StepWeightParams,
    apply_step_weights,
    borrower_stress,
    dependency_index_sys,
    downgrade,
    generate_ds1_like,
    generate_ds2_like,
    grow_overlap,
    hhi,
    overlap_risk_composition,
    randomize_within_risk,
)
from overlaprisk.scenarios import merge_borrowers, portfolio_signature, shuffled_network

from overlaprisk.network import coexposure_kernel
from overlaprisk.scenarios import _PairKernel

from conftest import random_dense, with_categories


def step_net(w, cats):
    net = with_categories(ExposureNetwork.from_dense(w), cats)
    return apply_step_weights(net, StepWeightParams())


def brute_stress(net, k, factor):
    """Scale column k and recompute DI_sys and the size-weighted HHI from scratch."""
    w = net.weighted.toarray()
    w2 = w.copy()
    w2[:, k] *= factor

    def sys_values(mat):
        m = ExposureNetwork.from_dense(mat)
        t = m.lender_totals
        h = np.array([hhi(row[row > 0]) for row in mat])
        return dependency_index_sys(m), float(np.dot(t, h) / t.sum())

    (d0, h0), (d1, h1) = sys_values(w), sys_values(w2)
    return d1 - d0, h1 - h0


@pytest.fixture(scope="module")
def ds1():
    return generate_ds1_like(n_borrowers=400, n_shared=12, seed=11,
                             overlap_category_probs=(0.05, 0.15, 0.4, 0.4), overlap_size_factor=3.0)


class TestRandomize:
    def test_no_freedom_gives_observed(self):
        # every lender holds at most one borrower per category
        net = step_net([[1, 2, 0, 0], [0, 3, 4, 5]], [1, 2, 3, 4])
        res = randomize_within_risk(net, 50, seed=1)
        assert np.all(res.samples == res.observed)
        assert res.p_value == 1.0

    def test_deterministic_and_thread_independent(self, ds1):
        a = randomize_within_risk(ds1, 60, seed=5)
        b = randomize_within_risk(ds1, 60, seed=5)
        c = randomize_within_risk(ds1, 60, seed=5, threads=4)
        assert np.array_equal(a.samples, b.samples) and np.array_equal(a.samples, c.samples)
        assert not np.array_equal(a.samples, randomize_within_risk(ds1, 60, seed=6).samples)

    def test_p_value_rule(self, ds1):
        res = randomize_within_risk(ds1, 99, seed=2)
        hits = np.count_nonzero(res.samples >= res.observed * (1 - 1e-12))
        assert res.p_value == (hits + 1) / 100

    def test_trials_match_shuffled_networks(self, ds1):
        res = randomize_within_risk(ds1, 5, seed=3)
        for t in range(5):
            assert res.samples[t] == pytest.approx(dependency_index_sys(shuffled_network(ds1, 3, t)),
                                                   rel=1e-12)

    def test_conservation_independent_check(self, ds1):
        before = overlap_risk_composition(ds1)
        for t in range(20):
            net = shuffled_network(ds1, 9, t)
            assert np.array_equal(net.weighted.indices, ds1.weighted.indices)
            for i in range(net.n):
                (_, e0), (_, e1) = ds1.lender_row(i, "raw"), net.lender_row(i, "raw")
                (_, w0), (_, w1) = ds1.lender_row(i), net.lender_row(i)
                assert math.fsum(e0) == math.fsum(e1) and math.fsum(w0) == math.fsum(w1)
                assert hhi(w0) == hhi(w1) and hhi(e0) == hhi(e1)
            after = overlap_risk_composition(net)
            for lid in net.lenders:
                assert np.array_equal(before.per_lender[lid], after.per_lender[lid])
            assert np.array_equal(net.overlap_mask, ds1.overlap_mask)
            assert portfolio_signature(net) == portfolio_signature(ds1)

    def test_pair_kernel_matches_sparse_product(self, rng):
        for _ in range(40):
            net = ExposureNetwork.from_dense(random_dense(rng, rng.integers(1, 8), rng.integers(1, 40), 0.4))
            w = net.weighted
            kernel = _PairKernel(w.indptr, w.indices, w.shape)
            assert np.allclose(kernel(w.data), coexposure_kernel(net), rtol=1e-13, atol=0)

    def test_histogram(self, ds1):
        res = randomize_within_risk(ds1, 100, seed=0)
        counts, edges = res.histogram(10)
        assert counts.sum() == 100 and edges.size == 11
        assert edges[0] <= res.observed <= edges[-1]

    def test_bad_trials(self, ds1):
        with pytest.raises(ValueError):
            randomize_within_risk(ds1, 0)


class TestDowngrade:
    def test_single_lender_isolated(self):
        net = step_net([[1, 2, 3]], [1, 1, 2])
        rep = downgrade(net, ["1"], 4)
        assert np.all(rep.joint == 0)

    def test_already_riskiest(self):
        net = step_net([[1, 2, 0], [0, 3, 4]], [4, 4, 2])
        rep = downgrade(net, ["2"], 4)
        assert np.all(rep.joint == 0)

    def test_refuses_upgrade(self):
        net = step_net([[1, 2, 0], [0, 3, 4]], [4, 4, 2])
        with pytest.raises(ValueError):
            downgrade(net, ["2"], 1)

    def test_convexity_positive(self):
        # two shared low-risk borrowers among isolated ones
        w = np.array([[4.0, 3.0, 1.0, 2.0, 0.0, 0.0],
                      [0.0, 0.0, 2.0, 1.5, 3.0, 5.0]])
        net = step_net(w, [2, 3, 1, 1, 3, 2])
        rep = downgrade(net, ["3", "4"], 3)
        assert np.all(rep.sum_of_singles > 0)
        assert np.all(rep.convexity > 0)
        assert [r[0] for r in rep.rows()] == ["3", "4", "Both", "Difference", "Difference (%)"]

    def test_matches_recomputation(self):
        w = np.array([[4.0, 3.0, 1.0, 2.0, 0.0], [0.0, 0.0, 2.0, 1.5, 3.0]])
        net = step_net(w, [2, 3, 1, 1, 3])
        rep = downgrade(net, ["3"], 4)
        again = step_net(w, [2, 3, 4, 1, 3])
        assert rep.joint_di_sys == pytest.approx(dependency_index_sys(again), rel=1e-12)


class TestGrowOverlap:
    def test_zero_steps(self, ds1):
        traj = grow_overlap(ds1, 0, trials=3)
        assert traj.mean.tolist() == [pytest.approx(dependency_index_sys(ds1), rel=1e-12)]

    def test_each_merge_raises_dependency(self, ds1):
        traj = grow_overlap(ds1, 15, trials=20, seed=1)
        assert np.all(np.diff(traj.values, axis=1) > 0)

    def test_mean_nondecreasing(self, ds1):
        traj = grow_overlap(ds1, 20, trials=1000, seed=2, threads=4)
        step = np.diff(traj.mean)
        se = np.sqrt(traj.std_err[1:] ** 2 + traj.std_err[:-1] ** 2)
        assert np.all(step >= -2 * se)

    def test_thread_independent(self, ds1):
        a = grow_overlap(ds1, 5, trials=30, seed=4)
        b = grow_overlap(ds1, 5, trials=30, seed=4, threads=3)
        assert np.array_equal(a.values, b.values)

    def test_merge_matches_rebuilt_network(self):
        # one eligible pair: merging it by hand must reproduce the step value
        w = np.array([[2.0, 1.0, 0.0, 0.0], [0.0, 1.0, 3.0, 0.0], [0.0, 0.0, 0.0, 1.0]])
        net = step_net(w, [2, 1, 2, 3])
        traj = grow_overlap(net, 1, trials=1)
        merged = merge_borrowers(net, "1", "3")
        assert traj.values[0, 1] == pytest.approx(dependency_index_sys(merged), rel=1e-12)

    def test_same_lender_never_merged(self):
        with pytest.raises(ValueError):
            merge_borrowers(step_net([[1, 2], [0, 1]], [1, 1]), "1", "2")

    def test_no_eligible_pair(self):
        net = step_net([[1, 2, 0], [0, 3, 4]], [1, 2, 3])
        with pytest.raises(ValueError, match="no eligible merge"):
            grow_overlap(net, 3, trials=2)

    def test_runs_out_is_truncated(self):
        w = np.array([[2.0, 1.0, 0.0], [0.0, 1.0, 3.0]])
        traj = grow_overlap(step_net(w, [2, 1, 2]), 3, trials=2)
        assert traj.truncated and np.isnan(traj.values[0, 2])


class TestStress:
    def test_factor_one(self, ds1):
        assert all(r.delta_di_sys == 0 and r.delta_hhi_sys == 0 for r in borrower_stress(ds1, 1.0))

    def test_single_lender(self):
        net = step_net([[1, 2, 3]], [1, 2, 3])
        recs = borrower_stress(net, 5)
        assert all(r.delta_di_sys == 0 for r in recs)
        assert all(r.delta_hhi_sys != 0 for r in recs)

    def test_building_block_shared(self, building_block):
        recs = {r.borrower_id: r for r in borrower_stress(building_block, 5)}
        assert recs["2"].delta_di_sys > 0 and recs["2"].in_overlap

    def test_matches_recomputation(self, ds1):
        recs = borrower_stress(ds1, 5.0)
        for k in range(0, ds1.m, 37):
            d_di, d_hhi = brute_stress(ds1, k, 5.0)
            assert recs[k].delta_di_sys == pytest.approx(d_di, rel=1e-9, abs=1e-15)
            assert recs[k].delta_hhi_sys == pytest.approx(d_hhi, rel=1e-9, abs=1e-15)

    def test_isolated_borrowers_only_dilute(self, ds1):
        recs = borrower_stress(ds1, 5.0)
        assert all(r.delta_di_sys <= 0 for r in recs if not r.in_overlap)
        # a shared borrower can go either way, depending on how its weight splits across lenders
        assert any(r.delta_di_sys > 0 for r in recs if r.in_overlap)

    def test_input_unchanged(self, ds1):
        before = ds1.weighted.data.copy()
        borrower_stress(ds1, 5.0)
        assert np.array_equal(before, ds1.weighted.data)

    def test_bad_factor(self, ds1):
        with pytest.raises(ValueError):
            borrower_stress(ds1, 0)


class TestGenerators:
    loans = [(f"I{k}", 10.0 + k, 80.0 + (k * 7) % 20) for k in range(60)]

    def test_ds2_no_isolated(self):
        net = generate_ds2_like(self.loans, isolated_frac=0.0, seed=1)
        assert np.all(net.lender_degree == 3)

    def test_ds2_tranches(self):
        net = generate_ds2_like(self.loans, seed=2)
        amount = {i: a for i, a, _ in self.loans}
        raw = net.raw.tocsc()
        for k, b in enumerate(net.borrowers):
            col = raw[:, k].data
            frac = col / amount[b.id]
            assert frac.sum() == pytest.approx(1.0, abs=1e-12)
            if col.size > 1:
                assert np.all(frac >= 0.2 - 1e-12)
        assert set(net.risk_categories) == {1, 2, 3, 4}

    def test_ds2_isolated_outside_top(self):
        net = generate_ds2_like(self.loans, seed=3)
        top = sorted(self.loans, key=lambda x: -x[1])[:6]
        ids = {i for i, *_ in top}
        assert all(net.lender_degree[net.borrower_index[i]] == 3 for i in ids)
        assert int(np.sum(net.lender_degree == 1)) == 9

    def test_ds2_deterministic(self):
        a = generate_ds2_like(self.loans, seed=4)
        b = generate_ds2_like(self.loans, seed=4)
        assert np.array_equal(a.raw.toarray(), b.raw.toarray())

    def test_ds1_shape(self):
        net = generate_ds1_like(n_borrowers=300, n_shared=9, seed=0)
        assert net.m == 300 and int(net.overlap_mask.sum()) == 9
        assert np.array_equal(net.weighted.toarray(),
                              apply_step_weights(net, StepWeightParams()).weighted.toarray())
