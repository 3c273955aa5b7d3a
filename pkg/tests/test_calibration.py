import json

import numpy as np
import pytest

from overlaprisk import capital_gap, fit_alpha_eta
from overlaprisk.calibration import CalibrationError, SearchConfig, predicted_k_ce

from systems import PLANTED, coexposure_inputs, planted_gaps, rel_err


@pytest.fixture(scope="module")
def lenders():
    return coexposure_inputs()


class TestGap:
    def test_table_values(self):
        gaps = capital_gap([0.043, 0.232], [0.036, 0.372])
        assert gaps[0] == pytest.approx(0.007, abs=1e-15)
        assert gaps[1] == pytest.approx(-0.14, abs=1e-15)

    def test_zero_gap_is_excluded(self, lenders):
        gaps = planted_gaps(lenders)
        gaps[lenders[0].lender] = 0.0
        gaps[lenders[1].lender] = -0.139
        res = fit_alpha_eta(gaps, lenders)
        assert set(res.excluded) == {lenders[0].lender, lenders[1].lender}


class TestFit:
    def test_planted_recovery(self, lenders):
        res = fit_alpha_eta(planted_gaps(lenders), lenders)
        assert rel_err(res.alpha, PLANTED[0]) < 0.01 and rel_err(res.eta, PLANTED[1]) < 0.01

    @pytest.mark.parametrize("alpha,eta", [(0.2, 5.0), (0.9, 300.0), (0.0, 1.0)])
    def test_other_planted_points(self, lenders, alpha, eta):
        res = fit_alpha_eta(planted_gaps(lenders, alpha, eta), lenders)
        assert rel_err(res.eta, eta) < 0.01
        assert abs(res.alpha - alpha) < 0.01 * max(alpha, 1.0)

    def test_idempotent(self, lenders):
        res = fit_alpha_eta(planted_gaps(lenders), lenders)
        again = fit_alpha_eta(dict(zip([li.lender for li in lenders],
                                       predicted_k_ce(lenders, res.alpha, res.eta))), lenders)
        assert rel_err(again.alpha, res.alpha) < 1e-4 and rel_err(again.eta, res.eta) < 1e-4

    def test_grid_dominance(self, lenders):
        # noisy targets, so the optimum is not at zero residual
        rng = np.random.default_rng(0)
        gaps = {k: v * rng.uniform(0.7, 1.3) for k, v in planted_gaps(lenders).items()}
        res = fit_alpha_eta(gaps, lenders)
        assert res.rss <= res.grid_best_rss
        cfg = SearchConfig()
        target = np.array(list(gaps.values()))
        for eta in np.geomspace(cfg.eta_min, cfg.eta_max, cfg.n_eta):
            for alpha in np.linspace(0, 1, cfg.n_alpha):
                assert res.rss <= np.sum((predicted_k_ce(lenders, alpha, eta) - target) ** 2)

    def test_excluded_do_not_move_the_fit(self, lenders):
        gaps = planted_gaps(lenders)
        gaps[lenders[0].lender] = -0.5
        a = fit_alpha_eta(gaps, lenders)
        gaps[lenders[0].lender] = -50.0
        b = fit_alpha_eta(gaps, lenders)
        assert (a.alpha, a.eta, a.rss) == (b.alpha, b.eta, b.rss)

    def test_deterministic(self, lenders):
        gaps = planted_gaps(lenders, 0.3, 20.0)
        assert fit_alpha_eta(gaps, lenders) == fit_alpha_eta(gaps, lenders)

    def test_sequence_gaps(self, lenders):
        gaps = planted_gaps(lenders)
        res = fit_alpha_eta(list(gaps.values()), lenders)
        assert res.gaps == gaps

    def test_json(self, lenders):
        res = fit_alpha_eta(planted_gaps(lenders), lenders)
        assert set(json.loads(res.to_json())) == {"alpha", "eta", "rss", "gaps", "excluded"}


class TestErrors:
    def test_single_positive_gap(self, lenders):
        gaps = {li.lender: -0.01 for li in lenders}
        gaps[lenders[2].lender] = 0.003
        with pytest.raises(CalibrationError, match="underdetermined calibration"):
            fit_alpha_eta(gaps, lenders)

    def test_unknown_lender(self, lenders):
        with pytest.raises(CalibrationError):
            fit_alpha_eta({"nobody": 0.1, lenders[0].lender: 0.1}, lenders)


def test_identical_lenders_take_smallest_eta(lenders):
    # every included lender has the same r, so alpha and eta are not separately identified
    li = lenders[0]
    twins = [type(li)(name, li.shares, li.pd, li.lgd, li.ma, li.delta_di, li.overlap, li.k, li.gamma, li.r)
             for name in ("X", "Y", "Z")]
    target = li.k_ce(0.5, 50.0)
    res = fit_alpha_eta({"X": target, "Y": target, "Z": target}, twins)
    assert res.rss < 1e-20 * 3
    assert res.alpha == (1.0 if li.r > 1 else 0.0)
    assert twins[0].k_ce(res.alpha, res.eta) == pytest.approx(target, rel=1e-6)
