"""
Test suite for kernel distribution estimation with full bandwidth matrices
"""
import numpy as np
import pytest
from scipy import integrate

from estimators.kernel_smoothing import (
    check_bandwidth,
    fit_model,
    get_kernel,
    kde_cdf,
    kde_density,
    marginal_cdf,
    marginal_pdf,
    marginal_quantile,
    smoothed_copula_eval,
)
from utils.bivariate_normal import bvn_cdf_general
from utils.errors import ArgumentError, DomainError, UnsupportedOperationError
from utils.rng import derive_stream

QUANTILE_LEVELS = [0.001, 0.01, 0.5, 0.99, 0.999]
FULL_H = np.array([[0.3, 0.12], [0.12, 0.2]])


class TestBandwidth:
    """Bandwidth validation"""

    def test_accepts_spd(self):
        np.testing.assert_allclose(check_bandwidth(FULL_H, 2), FULL_H)

    @pytest.mark.parametrize("H", [[[1.0, 2.0], [2.0, 1.0]], [[1.0, 0.1], [0.0, 1.0]], [[1.0]]])
    def test_rejects_invalid(self, H):
        with pytest.raises(ArgumentError):
            check_bandwidth(H, 2)

    def test_unknown_kernel(self):
        with pytest.raises(UnsupportedOperationError):
            get_kernel("epanechnikov")


class TestUnivariate:
    """Density, distribution and margins at d = 1"""

    @pytest.fixture
    def data(self):
        return derive_stream(5, 1).standard_normal(40)

    @pytest.mark.parametrize("kernel", ["gauss", "laplace"])
    def test_density_integrates_to_one(self, data, kernel):
        model = fit_model(data, 0.25, kernel)
        value, _ = integrate.quad(lambda x: kde_density(model, x), -15, 15, limit=400, points=list(data))
        assert value == pytest.approx(1.0, abs=1e-5)

    @pytest.mark.parametrize("kernel", ["gauss", "laplace"])
    def test_cdf_agrees_with_margin(self, data, kernel):
        model = fit_model(data, 0.25, kernel)
        x = np.linspace(-3, 3, 13)
        np.testing.assert_allclose(kde_cdf(model, x), marginal_cdf(model, 0, x), atol=1e-14)

    def test_margin_limits_and_pdf(self, data):
        model = fit_model(data, 0.25)
        assert marginal_cdf(model, 0, -50.0) == pytest.approx(0.0, abs=1e-12)
        assert marginal_cdf(model, 0, 50.0) == pytest.approx(1.0, abs=1e-12)
        x0, eps = 0.3, 1e-5
        slope = (marginal_cdf(model, 0, x0 + eps) - marginal_cdf(model, 0, x0 - eps)) / (2 * eps)
        assert marginal_pdf(model, 0, x0) == pytest.approx(slope, rel=1e-6)

    def test_bad_index(self, data):
        with pytest.raises(ArgumentError):
            marginal_cdf(fit_model(data, 0.25), 1, 0.0)


class TestBivariate:
    """Joint distribution with a full bandwidth matrix"""

    @pytest.fixture
    def data(self):
        return derive_stream(5, 2).standard_normal((5, 2))

    def test_cdf_is_normal_mixture(self, data):
        model = fit_model(data, FULL_H)
        points = np.array([[0.0, 0.0], [0.5, -0.3], [-1.0, 1.2]])
        expected = np.mean([bvn_cdf_general(points, xi, FULL_H) for xi in data], axis=0)
        np.testing.assert_allclose(kde_cdf(model, points), expected, atol=1e-12)

    def test_cdf_monotone(self, data):
        model = fit_model(data, FULL_H)
        grid = np.linspace(-3, 3, 15)
        values = np.array([[kde_cdf(model, [a, b]) for b in grid] for a in grid])
        assert np.all(np.diff(values, axis=0) >= -1e-14)
        assert np.all(np.diff(values, axis=1) >= -1e-14)

    def test_density_point(self, data):
        model = fit_model(data, FULL_H)
        assert kde_density(model, [0.1, 0.2]) > 0

    def test_laplace_joint_cdf_unsupported(self, data):
        model = fit_model(data, FULL_H, "laplace")
        with pytest.raises(UnsupportedOperationError):
            kde_cdf(model, [0.0, 0.0])
        assert 0 < marginal_cdf(model, 1, 0.0) < 1


class TestQuantiles:
    """Inversion of the mixture margins"""

    def test_roundtrip_on_random_models(self):
        for seed in range(50):
            rng = derive_stream(77, seed)
            data = rng.normal(size=(int(rng.integers(5, 40)), 1)) * rng.uniform(0.5, 3.0)
            model = fit_model(data, rng.uniform(0.01, 1.0))
            x = marginal_quantile(model, 0, QUANTILE_LEVELS, use_table=False)
            np.testing.assert_allclose(marginal_cdf(model, 0, x), QUANTILE_LEVELS, atol=1e-10)

    def test_roundtrip_with_table(self):
        data = derive_stream(78).standard_normal((30, 2))
        model = fit_model(data, FULL_H)
        for j in range(2):
            x = marginal_quantile(model, j, QUANTILE_LEVELS)
            np.testing.assert_allclose(marginal_cdf(model, j, x), QUANTILE_LEVELS, atol=1e-10)
            assert np.all(np.diff(x) > 0)

    def test_steep_margin_meets_p_tolerance(self, settings):
        model = fit_model(np.arange(5.0), 1e-10)
        levels = np.array([0.1, 0.3, 0.5, 0.7, 0.9])
        x = marginal_quantile(model, 0, levels, use_table=False)
        np.testing.assert_allclose(x, np.arange(5.0), atol=1e-9)
        assert np.max(np.abs(marginal_cdf(model, 0, x) - levels)) <= settings.quantile_ptol

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.2, float("nan")])
    def test_domain(self, p):
        model = fit_model(derive_stream(79).standard_normal(10), 0.5)
        with pytest.raises(DomainError):
            marginal_quantile(model, 0, p, use_table=False)


class TestSmoothedCopula:
    """Copula of the smoothed model"""

    @pytest.fixture
    def model(self):
        return fit_model(derive_stream(80).standard_normal((25, 2)), FULL_H)

    def test_uniform_margins(self, model):
        for u in (0.2, 0.7):
            assert smoothed_copula_eval(model, [u, 1.0]) == pytest.approx(u, abs=1e-9)
            assert smoothed_copula_eval(model, [1.0, u]) == pytest.approx(u, abs=1e-9)
            assert smoothed_copula_eval(model, [0.0, u]) == 0.0

    def test_frechet_bounds(self, model):
        points = np.array([[0.3, 0.6], [0.5, 0.5], [0.9, 0.2]])
        values = smoothed_copula_eval(model, points)
        assert np.all(values <= points.min(axis=1) + 1e-9)
        assert np.all(values >= np.maximum(points.sum(axis=1) - 1, 0) - 1e-9)

    def test_domain(self, model):
        with pytest.raises(DomainError):
            smoothed_copula_eval(model, [1.5, 0.5])
