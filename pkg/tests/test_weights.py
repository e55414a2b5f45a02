import json
from fractions import Fraction

import numpy as np
import pytest
from numpy.testing import assert_allclose

from wmcvar.errors import WeightError
from wmcvar.weights import (Group, VarMoments, WeightModel, beta_variance,
                            counting_weights, dirichlet_group_moments,
                            group_cov_from_probs, selector_weights)


class TestSpecialMoments:
    def test_counting(self):
        m = counting_weights().default
        assert (m.muP, m.muN) == (1, 1)
        assert (m.varP, m.varN, m.covPN) == (3, 3, -1)

    def test_selector(self):
        m = selector_weights()
        assert (m.muP, m.muN) == (1, 1)
        assert (m.varP, m.varN, m.covPN) == (3, 3, -3)

    def test_counting_per_model_variance(self):
        # a single model's weight: mean 1, second moment 4^n
        m = counting_weights().default
        e2_true = m.varP + m.muP ** 2
        e2_false = m.varN + m.muN ** 2
        for n in range(1, 6):
            second = e2_true ** n
            assert second == 4 ** n
            assert e2_false ** n == 4 ** n


class TestBeta:
    def test_variance_formula(self):
        assert_allclose(beta_variance(0.3, 20), 0.3 * 0.7 / 20)
        assert beta_variance(Fraction(1, 4), 8) == Fraction(3, 128)

    def test_degenerate(self):
        assert beta_variance(0.0, 10) == 0.0
        assert beta_variance(1.0, 10) == 0.0


class TestDirichlet:
    def test_moments_match_closed_form(self):
        alphas = (2.0, 3.0, 5.0)
        s = sum(alphas)
        means, cov = dirichlet_group_moments(alphas)
        assert_allclose(means, [a / s for a in alphas])
        for i in range(3):
            for j in range(3):
                ai, aj = alphas[i], alphas[j]
                if i == j:
                    want = ai * (s - ai) / (s * s * (s + 1))
                else:
                    want = -ai * aj / (s * s * (s + 1))
                assert_allclose(cov[i][j], want)

    def test_group_cov_from_probs(self):
        ps = (0.2, 0.5, 0.3)
        theta = 10
        cov = np.array(group_cov_from_probs(ps, theta))
        for i in range(3):
            for j in range(3):
                want = ps[i] * (1 - ps[i]) if i == j else -ps[i] * ps[j]
                assert_allclose(cov[i][j], want / theta, rtol=1e-12)
        # same shape as a Dirichlet with pseudo-count theta, rescaled
        _, dir_cov = dirichlet_group_moments(tuple(p * theta for p in ps))
        assert_allclose(cov, np.array(dir_cov) * (theta + 1) / theta,
                        rtol=1e-12)
        # rows of a probability vector sum to 1, so covariances cancel
        assert_allclose(cov.sum(axis=0), 0, atol=1e-15)
        assert min(np.linalg.eigvalsh(cov)) > -1e-12

    def test_degenerate_rows_zeroed(self):
        cov = np.array(group_cov_from_probs((0.0, 1.0), 5))
        assert_allclose(cov, 0, atol=0)


class TestWeightModel:
    def test_default_and_override(self):
        wm = WeightModel({2: VarMoments(0.5, 0.5, 0.01, 0.01, -0.01)})
        assert wm.moments(1).muP == 1
        assert wm.moments(2).muP == 0.5

    def test_json_round_trip(self):
        wm = WeightModel(
            {1: VarMoments(0.3, 0.7, 0.02, 0.02, -0.02),
             2: VarMoments(1, 1, 3, 3, -1)},
            groups=(Group((1, 2), ((0.01, -0.005), (-0.005, 0.01))),))
        again = WeightModel.from_json(json.dumps(wm.to_json()))
        assert again.moments(1) == wm.moments(1)
        assert again.moments(2) == wm.moments(2)
        assert len(again.groups) == 1
        assert again.groups[0].members == (1, 2)

    def test_to_exact(self):
        wm = WeightModel({1: VarMoments(0.5, 0.5, 0.25, 0.25, -0.25)})
        ex = wm.to_exact()
        m = ex.moments(1)
        assert isinstance(m.muP, Fraction) and m.muP == Fraction(1, 2)
        assert m.covPN == Fraction(-1, 4)

    def test_grouped_vars_need_degenerate_negative(self):
        # group covariance only speaks about the positive weights, so the
        # negative side must be deterministic
        wm = WeightModel(
            {1: VarMoments(0.2, 1, 0.0, 0.1, 0.0),
             2: VarMoments(0.8, 1, 0.0, 0.0, 0.0)},
            groups=(Group((1, 2), ((0.01, -0.01), (-0.01, 0.01))),))
        with pytest.raises(WeightError):
            wm.validate_for(2)

    def test_group_member_without_moments(self):
        wm = WeightModel(groups=(Group((1, 9), ((0, 0), (0, 0))),))
        with pytest.raises(WeightError):
            wm.validate_for(3)

    def test_overlapping_groups_rejected(self):
        g1 = Group((1, 2), ((0, 0), (0, 0)))
        g2 = Group((2, 3), ((0, 0), (0, 0)))
        with pytest.raises(WeightError):
            WeightModel({v: VarMoments(0.5, 1, 0, 0, 0) for v in (1, 2, 3)},
                        groups=(g1, g2))

    def test_cov_pp(self):
        g = Group((3, 5), ((0.04, -0.01), (-0.01, 0.09)))
        wm = WeightModel({3: VarMoments(0.5, 1, 0.04, 0, 0),
                          5: VarMoments(0.5, 1, 0.09, 0, 0)}, groups=(g,))
        assert wm.cov_pp(3, 5) == -0.01
        assert wm.cov_pp(5, 3) == -0.01
        assert wm.cov_pp(3, 3) == 0.04
