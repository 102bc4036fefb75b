"""Core model primitives: predictions, pseudo-gradients, risks, norms."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dp_relu.datagen import CovarianceSpec, GroundTruth
from dp_relu.model import (
    Dataset,
    LabeledExample,
    empirical_risk,
    excess_risk,
    excess_risk_detail,
    glmtron_gradient,
    param_error_h,
    population_risk_mc,
    predict,
    relu,
    sgd_gradient,
)

finite_floats = st.floats(min_value=-1e12, max_value=1e12, allow_nan=False)


class TestRelu:
    def test_clamps_negative(self):
        assert relu(-3.0) == 0.0

    def test_boundary(self):
        assert relu(0.0) == 0.0

    def test_identity_on_positive(self):
        assert relu(2.5) == 2.5

    @given(finite_floats)
    def test_idempotent_monotone_dominating(self, z):
        r = relu(z)
        assert relu(r) == r
        assert r >= 0.0
        assert r >= z

    @given(finite_floats, finite_floats)
    def test_monotone(self, a, b):
        if a <= b:
            assert relu(a) <= relu(b)


class TestPredict:
    def test_positive_preactivation(self):
        assert predict(np.array([1.0, 0.0]), np.array([2.0, 1.0])) == 2.0

    def test_negative_preactivation(self):
        assert predict(np.array([-1.0, 0.0]), np.array([2.0, 1.0])) == 0.0

    def test_zero_parameter(self):
        assert predict(np.zeros(2), np.array([5.0, 5.0])) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            predict(np.zeros(3), np.zeros(2))


class TestGradients:
    def test_glmtron_zero_parameter(self):
        g = glmtron_gradient(np.zeros(2), np.array([1.0, 0.0]), 2.0)
        np.testing.assert_array_equal(g, [-2.0, 0.0])

    def test_glmtron_zero_residual(self):
        g = glmtron_gradient(np.array([1.0, 0.0]), np.array([1.0, 0.0]), 1.0)
        np.testing.assert_array_equal(g, [0.0, 0.0])

    def test_glmtron_hand_computed(self):
        # relu(2) - 3 = -1, times x
        g = glmtron_gradient(np.array([1.0, 0.0]), np.array([2.0, 1.0]), 3.0)
        np.testing.assert_allclose(g, [-2.0, -1.0])

    def test_sgd_gated_to_zero(self):
        g = sgd_gradient(np.array([-1.0, 0.0]), np.array([1.0, 0.0]), 2.0)
        np.testing.assert_array_equal(g, [0.0, 0.0])

    def test_sgd_active(self):
        g = sgd_gradient(np.array([1.0, 0.0]), np.array([1.0, 0.0]), 0.0)
        np.testing.assert_allclose(g, [1.0, 0.0])

    def test_sgd_equals_glmtron_when_active(self):
        w, x, y = np.array([1.0, 0.0]), np.array([2.0, 1.0]), 3.0
        np.testing.assert_array_equal(sgd_gradient(w, x, y), glmtron_gradient(w, x, y))

    @given(st.integers(0, 2**32 - 1))
    def test_sgd_is_gated_glmtron(self, seed):
        rng = np.random.default_rng(seed)
        w, x = rng.standard_normal(3), rng.standard_normal(3)
        y = float(rng.standard_normal())
        expected = glmtron_gradient(w, x, y) if x @ w > 0 else np.zeros(3)
        np.testing.assert_array_equal(sgd_gradient(w, x, y), expected)


class TestEmpiricalRisk:
    def test_zero_residuals(self):
        data = Dataset(np.array([[1.0, 0.0], [0.5, 0.0]]), np.array([1.0, 0.5]))
        assert empirical_risk(np.array([1.0, 0.0]), data) == 0.0

    def test_single_example(self):
        data = Dataset(np.array([[1.0, 0.0]]), np.array([0.0]))
        assert empirical_risk(np.array([1.0, 0.0]), data) == 0.5

    def test_two_residuals(self):
        # residuals 1 and 3: risk = (1 + 9) / 2 / 2 = 2.5
        data = Dataset(np.array([[1.0, 0.0], [3.0, 0.0]]), np.array([0.0, 0.0]))
        assert empirical_risk(np.array([1.0, 0.0]), data) == 2.5

    def test_nonnegative(self):
        rng = np.random.default_rng(3)
        data = Dataset(rng.standard_normal((50, 3)), rng.standard_normal(50))
        for _ in range(10):
            assert empirical_risk(rng.standard_normal(3), data) >= 0.0

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            empirical_risk(np.zeros(2), Dataset(np.empty((0, 2)), np.empty(0)))


class TestPopulationRisk:
    def test_noise_floor(self):
        # L(w*) = sigma^2 / 2; at 1e5 samples the MC error is ~2e-5
        gt = GroundTruth(np.array([1.0, 0.5]), 0.1, CovarianceSpec.identity(2))
        val = population_risk_mc(gt.w_star, gt, 100_000, seed=11)
        assert abs(val - 0.005) < 7e-5

    def test_noiseless_at_optimum(self):
        gt = GroundTruth(np.array([1.0, 0.5]), 0.0, CovarianceSpec.identity(2))
        assert population_risk_mc(gt.w_star, gt, 1000, seed=1) == 0.0

    def test_one_dim_quarter(self):
        # w* = 1, w = 0, sigma = 0: L(0) = E relu(x)^2 / 2 = 1/4
        gt = GroundTruth(np.array([1.0]), 0.0, CovarianceSpec.identity(1))
        val = population_risk_mc(np.zeros(1), gt, 100_000, seed=5)
        assert abs(val - 0.25) < 6e-3

    def test_deterministic(self):
        gt = GroundTruth(np.array([1.0]), 1.0, CovarianceSpec.identity(1))
        a = population_risk_mc(np.zeros(1), gt, 1000, seed=9)
        b = population_risk_mc(np.zeros(1), gt, 1000, seed=9)
        assert a == b


class TestExcessRisk:
    def test_exactly_zero_at_optimum(self):
        gt = GroundTruth(np.array([1.0, -1.0]), 0.5, CovarianceSpec.identity(2))
        assert excess_risk(gt.w_star, gt.w_star, gt, 5000, seed=3) == 0.0

    def test_one_dim_quarter(self):
        gt = GroundTruth(np.array([1.0]), 0.0, CovarianceSpec.identity(1))
        val = excess_risk(np.zeros(1), gt.w_star, gt, 100_000, seed=5)
        assert abs(val - 0.25) < 6e-3

    def test_asymptotically_nonnegative(self):
        gt = GroundTruth(np.array([0.5, 0.5, 0.0]), 0.2, CovarianceSpec.identity(3))
        rng = np.random.default_rng(17)
        for i in range(5):
            w = rng.standard_normal(3)
            er, se = excess_risk_detail(w, gt.w_star, gt, 50_000, seed=100 + i)
            assert er >= -3 * se

    def test_quarter_factor_inequality(self):
        # Squared-residual gap dominates ||w - w*||^2 / 4 for Gaussian designs
        # (the unscaled gap is twice the 1/2-convention excess risk).
        rng = np.random.default_rng(8)
        for i in range(10):
            w = rng.standard_normal(3)
            w = w / np.linalg.norm(w) * rng.uniform() ** (1 / 3)
            ws = rng.standard_normal(3)
            ws = ws / np.linalg.norm(ws) * rng.uniform() ** (1 / 3)
            gt = GroundTruth(ws, 0.0, CovarianceSpec.identity(3))
            er, se = excess_risk_detail(w, ws, gt, 100_000, seed=500 + i)
            assert 2.0 * er >= 0.25 * param_error_h(w, ws) - 3.0 * (2.0 * se)


class TestParamError:
    def test_zero(self):
        w = np.array([1.0, 2.0])
        assert param_error_h(w, w) == 0.0

    def test_identity_norm(self):
        assert param_error_h(np.array([3.0, 4.0]), np.zeros(2)) == 25.0

    def test_diagonal(self):
        assert param_error_h(np.array([1.0, 1.0]), np.zeros(2), np.array([2.0, 1.0])) == 3.0

    def test_covariance_spec(self):
        spec = CovarianceSpec.diagonal(np.array([2.0, 1.0]))
        assert param_error_h(np.array([1.0, 1.0]), np.zeros(2), spec) == 3.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            param_error_h(np.zeros(2), np.zeros(3))


class TestTypes:
    def test_example_rejects_nan(self):
        with pytest.raises(ValueError):
            LabeledExample(np.array([1.0, math.nan]), 0.0)

    def test_dataset_round_trip(self):
        data = Dataset(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([1.0, 2.0]))
        ex = data.example(1)
        np.testing.assert_array_equal(ex.x, [3.0, 4.0])
        assert ex.y == 2.0
        assert ex.d == 2
        assert len(data) == 2 and data.d == 2

    def test_dataset_rejects_inf(self):
        with pytest.raises(ValueError):
            Dataset(np.array([[1.0], [math.inf]]), np.array([0.0, 0.0]))
