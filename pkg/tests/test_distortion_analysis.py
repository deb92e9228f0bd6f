"""
Test suite for the distortion of dependence by elliptical smoothing
"""
import math

import numpy as np
import pytest

from estimators.distortion_analysis import (
    correlation_preservation_check,
    distortion_frame,
    first_order_residual,
    fit_rate_exponent,
    laplace_bound_at,
    laplace_default_m,
    laplace_uniform_bound,
    relative_error_curve,
)
from estimators.elliptical_core import EllipticalSpec, make_generator
from utils.errors import ArgumentError, DomainError, UnsupportedOperationError

SIGMA = np.array([[1.0, 0.5], [0.5, 1.0]])


class TestRelativeError:
    """1 - psi_Y(c u) and its small-c rate"""

    @pytest.mark.parametrize("name,rate", [("gauss", 1.0), ("laplace", 1.0), ("cauchy", 0.5)])
    def test_rate_exponents(self, name, rate):
        assert fit_rate_exponent(make_generator(name)) == pytest.approx(rate, abs=0.05)

    def test_gauss_curve(self):
        report = relative_error_curve("gauss", 0.1, [0.0, 1.0, 4.0])
        np.testing.assert_allclose(report.rel_error, 1 - np.exp(-0.05 * np.array([0.0, 1.0, 4.0])))
        assert report.generator == "gauss"
        assert report.rate_exponent == pytest.approx(1.0, abs=0.05)
        assert report.abs_bound is None

    def test_frequency_bound(self):
        t = np.array([[1.0, 0.0], [1.0, 1.0]])
        report = relative_error_curve("gauss", 0.2, [1.0], sigma=SIGMA, t=t, with_rate=False)
        quad = np.array([1.0, 3.0])
        np.testing.assert_allclose(report.abs_bound, 1 - np.exp(-0.1 * quad))
        assert report.rate_exponent is None

    def test_nonpositive_c(self):
        with pytest.raises(DomainError):
            relative_error_curve("gauss", 0.0, [1.0])

    def test_distortion_frame(self):
        frame = distortion_frame("gauss", "gauss", 0.5, np.linspace(0, 3, 7))
        np.testing.assert_allclose(frame["psi_z"], np.exp(-0.75 * frame["u"]))
        np.testing.assert_allclose(frame["abs_diff"], np.abs(frame["psi_x"] - frame["psi_z"]))
        assert list(frame.columns) == ["u", "psi_x", "psi_z", "rel_error", "abs_diff"]


class TestLaplaceBound:
    """Optimal cutoff of the smoothing inequality"""

    def test_default_constant(self):
        assert laplace_default_m(2.0) == pytest.approx(12.0)
        with pytest.raises(DomainError):
            laplace_default_m(0.0)

    def test_reference_cutoff(self):
        t_star, bound = laplace_uniform_bound(0.01, 1.0, M=10.0)
        assert t_star == pytest.approx(11.97, abs=0.01)
        assert bound == pytest.approx(laplace_bound_at(t_star, 0.01, 1.0, 10.0))

    @pytest.mark.parametrize("c", [1e-6, 1e-4, 1e-2, 0.5])
    @pytest.mark.parametrize("sigma2", [0.5, 1.0, 4.0])
    def test_first_order_condition(self, c, sigma2):
        M = laplace_default_m(sigma2)
        t_star, _ = laplace_uniform_bound(c, sigma2)
        assert first_order_residual(t_star, c, sigma2, M) < 1e-8

    @pytest.mark.parametrize("c", [1e-4, 1e-2, 0.5])
    def test_local_minimum(self, c):
        M = laplace_default_m(1.0)
        t_star, bound = laplace_uniform_bound(c, 1.0)
        for factor in (0.99, 1.01):
            assert laplace_bound_at(factor * t_star, c, 1.0, M) >= bound - 1e-12

    def test_cube_root_scaling(self):
        ratios = [laplace_uniform_bound(c, 1.0)[1] / c ** (1 / 3) for c in (1e-4, 1e-3, 1e-2, 1e-1)]
        assert max(ratios) / min(ratios) < 2.0

    def test_invalid(self):
        with pytest.raises(DomainError):
            laplace_uniform_bound(-0.1, 1.0)
        with pytest.raises(DomainError):
            laplace_uniform_bound(0.1, 1.0, M=0.0)


class TestCorrelationPreservation:
    """Monte Carlo check of the correlation identities"""

    @pytest.mark.parametrize("kernel", ["gauss", "laplace"])
    def test_gaussian_data(self, kernel, stream):
        spec = EllipticalSpec(mu=[0.0, 0.0], sigma=SIGMA, generator="gauss")
        report = correlation_preservation_check(spec, kernel, 0.5, 20_000, stream(70))
        assert report.max_corr_gap < 0.03
        assert report.inflation_expected == pytest.approx(1.5)
        assert report.inflation_observed == pytest.approx(1.5, abs=0.05)

    def test_tau_preserved_for_same_generator(self, stream):
        spec = EllipticalSpec(mu=[0.0, 0.0], sigma=SIGMA, generator="gauss")
        report = correlation_preservation_check(spec, "gauss", 0.3, 20_000, stream(71))
        assert abs(report.tau_diff) <= 4 * report.tau_diff_se
        assert report.tau_x == pytest.approx(math.asin(0.5) * 2 / math.pi, abs=0.02)

    def test_no_smoothing(self, stream):
        spec = EllipticalSpec(mu=[0.0, 0.0], sigma=SIGMA, generator="student_t:5")
        report = correlation_preservation_check(spec, "gauss", 0.0, 500, stream(72))
        assert report.tau_diff == 0.0
        assert report.tau_within_3se
        assert report.inflation_observed == pytest.approx(1.0)

    def test_rejections(self, stream):
        spec = EllipticalSpec(mu=[0.0, 0.0], sigma=SIGMA, generator="gauss")
        with pytest.raises(UnsupportedOperationError):
            correlation_preservation_check(spec, "cauchy", 0.5, 100, stream(73))
        with pytest.raises(DomainError):
            correlation_preservation_check(spec, "gauss", -0.1, 100, stream(73))
        with pytest.raises(ArgumentError):
            correlation_preservation_check(spec, "gauss", 0.5, 10, stream(73))


@pytest.mark.slow
def test_correlation_preservation_at_scale(stream):
    spec = EllipticalSpec(mu=[0.0, 0.0], sigma=SIGMA, generator="student_t:5")
    report = correlation_preservation_check(spec, "laplace", 0.5, 1_000_000, stream(74))
    assert report.max_corr_gap < 0.01
    assert report.inflation_observed == pytest.approx(report.inflation_expected, rel=0.02)


@pytest.mark.slow
def test_kendall_tau_preserved_at_scale(stream):
    sigma = np.array([[1.0, 0.75], [0.75, 1.0]])
    spec = EllipticalSpec(mu=[0.0, 0.0], sigma=sigma, generator="gauss")
    report = correlation_preservation_check(spec, "gauss", 0.5, 1_000_000, stream(75))
    assert report.tau_within_3se
