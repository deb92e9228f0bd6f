"""
Test suite for characteristic generators, radial laws and elliptical sampling
"""
import math

import numpy as np
import pytest
from scipy import special

from estimators.elliptical_core import (
    EllipticalSpec,
    _student_t_quad,
    bessel_k_half,
    bessel_k_integral,
    closure_defect,
    closure_search,
    eval_generator,
    laplace_distorted_radial,
    laplace_radial,
    make_generator,
    product_generator,
    rayleigh_test,
    sample_elliptical,
    sample_radial,
    sample_sphere,
)
from utils.errors import DomainError, SingularParameterError, UnsupportedOperationError

CLOSURE_GRID = np.round(np.arange(0.1, 20.0 + 1e-9, 0.1), 10)


class TestGenerators:
    """Generator values and derivatives at zero"""

    def test_known_values(self):
        assert eval_generator(make_generator("gauss"), 0.0) == 1.0
        assert eval_generator(make_generator("laplace"), 2.0) == pytest.approx(0.5)
        assert eval_generator(make_generator("cauchy"), 1.0) == pytest.approx(math.exp(-1))
        assert eval_generator(make_generator("student_t:3"), 1 / 3) == pytest.approx(2 / math.e, rel=1e-12)

    def test_student_t_one_is_cauchy(self):
        u = np.linspace(0.0, 5.0, 21)
        t1 = eval_generator(make_generator("student_t:1"), u)
        cauchy = eval_generator(make_generator("cauchy"), u)
        np.testing.assert_allclose(t1, cauchy, rtol=1e-12)

    def test_quadrature_matches_closed_form(self):
        quad = _student_t_quad(3.0)
        closed = make_generator("student_t:3")
        for u in (0.05, 0.5, 2.0, 7.5):
            assert quad(u) == pytest.approx(eval_generator(closed, u), rel=1e-7)

    def test_even_nu_uses_cached_quadrature(self):
        g = make_generator("student_t:4")
        assert g.cacheable
        first = eval_generator(g, 1.25)
        assert eval_generator(g, 1.25) == first
        assert 0 < first < 1

    def test_negative_argument_rejected(self):
        with pytest.raises(DomainError):
            eval_generator(make_generator("gauss"), -0.1)

    def test_derivatives_at_zero(self):
        assert make_generator("gauss").deriv_at_zero == -0.5
        assert make_generator("laplace").deriv_at_zero == -0.5
        assert make_generator("stable:2").deriv_at_zero == -1.0
        assert math.isinf(make_generator("cauchy").deriv_at_zero)
        assert math.isinf(make_generator("stable:1.5").deriv_at_zero)
        assert make_generator("student_t:5").deriv_at_zero == pytest.approx(-5 / 6)
        assert not make_generator("student_t:2").finite_variance

    def test_product_generator(self):
        g = make_generator("gauss")
        prod = product_generator(g, g, 0.5)
        assert prod.deriv_at_zero == pytest.approx(-0.75)
        assert eval_generator(prod, 2.0) == pytest.approx(math.exp(-1.5))
        with pytest.raises(DomainError):
            product_generator(g, g, 0.0)

    def test_unknown_family_rejected(self):
        with pytest.raises(ValueError):
            make_generator("weibull")


class TestClosure:
    """Closure of generator families under convolution"""

    @pytest.mark.parametrize("c", [0.1, 1.0, 10.0])
    def test_gauss_closed(self, c):
        assert closure_defect(make_generator("gauss"), c, CLOSURE_GRID) <= 1e-10

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 2.0])
    @pytest.mark.parametrize("c", [0.1, 1.0, 10.0])
    def test_stable_closed(self, alpha, c):
        g = make_generator(f"stable:{alpha}")
        defect, gamma = closure_search(g, c, CLOSURE_GRID)
        assert defect <= 1e-10
        a = alpha / 2
        assert gamma == pytest.approx((1 + c ** a) ** (1 / a), rel=1e-8)

    def test_student_t_not_closed(self):
        assert closure_defect(make_generator("student_t:3"), 0.5, CLOSURE_GRID) > 1e-3

    def test_bad_inputs(self):
        g = make_generator("gauss")
        with pytest.raises(DomainError):
            closure_defect(g, -1.0, CLOSURE_GRID)
        with pytest.raises(ValueError):
            closure_defect(g, 1.0, [])


class TestBessel:
    """Half-integer closed form and cosine-integral representation"""

    @pytest.mark.parametrize("r", [0, 1, 2, 4])
    def test_half_integer_matches_scipy(self, r):
        t = np.array([0.3, 1.0, 2.0, 6.0])
        np.testing.assert_allclose(bessel_k_half(r, t), special.kv(r + 0.5, t), rtol=1e-12)

    def test_golden_value(self):
        assert bessel_k_half(0, 1.0) == pytest.approx(0.461069, abs=1e-6)

    def test_integral_matches_scipy(self):
        for alpha, t in [(1.0, 0.7), (1.5, 2.0), (2.0, 3.0)]:
            assert bessel_k_integral(alpha, t) == pytest.approx(special.kv(alpha, t), rel=1e-7)

    def test_domain(self):
        with pytest.raises(DomainError):
            bessel_k_half(-1, 1.0)
        with pytest.raises(DomainError):
            bessel_k_half(1, 0.0)


class TestEllipticalSpec:
    """Validation, moments and characteristic function"""

    @pytest.fixture
    def sigma(self):
        return np.array([[1.0, 0.75], [0.75, 1.0]])

    def test_characteristic_function_at_zero(self, sigma):
        spec = EllipticalSpec(mu=[0.5, -1.0], sigma=sigma, generator="gauss")
        assert spec.characteristic_function(np.zeros(2))[0] == pytest.approx(1.0)

    def test_covariance_and_normalize(self, sigma):
        spec = EllipticalSpec(mu=[0.0, 0.0], sigma=sigma, generator="student_t:5")
        np.testing.assert_allclose(spec.covariance(), 5 / 3 * sigma)
        normalized = spec.normalize()
        np.testing.assert_allclose(normalized.covariance(), 5 / 3 * sigma)
        np.testing.assert_allclose(normalized.sigma, 5 / 3 * sigma)

    def test_infinite_variance(self, sigma):
        spec = EllipticalSpec(mu=[0.0, 0.0], sigma=sigma, generator="cauchy")
        with pytest.raises(UnsupportedOperationError):
            spec.covariance()

    def test_invalid_dispersion(self):
        with pytest.raises(ValueError):
            EllipticalSpec(mu=[0.0, 0.0], sigma=[[1.0, 2.0], [2.0, 1.0]], generator="gauss")
        with pytest.raises(ValueError):
            EllipticalSpec(mu=[0.0], sigma=np.eye(2), generator="gauss")


class TestRadialLaws:
    """Laplace radial densities and the distorted law"""

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_laplace_radial_mass(self, d):
        assert laplace_radial(d).total_mass() == pytest.approx(1.0, abs=1e-6)

    def test_distorted_density_mass(self):
        density = laplace_distorted_radial(0.5, 2)
        assert density.total_mass() == pytest.approx(1.0, abs=1e-6)
        assert density.negative_points(np.linspace(0.01, 20, 200)).size == 0

    def test_singular_beta(self):
        with pytest.raises(SingularParameterError):
            laplace_distorted_radial(1.0, 2)


class TestSampling:
    """Stochastic representation mu + R A S"""

    @pytest.fixture
    def sigma(self):
        return np.array([[1.0, 0.75], [0.75, 1.0]])

    @pytest.mark.parametrize("name", ["gauss", "laplace"])
    def test_sample_covariance(self, name, sigma, stream):
        spec = EllipticalSpec(mu=[1.0, -2.0], sigma=sigma, generator=name)
        x = sample_elliptical(spec, 200_000, stream(1))
        np.testing.assert_allclose(x.mean(axis=0), [1.0, -2.0], atol=0.02)
        np.testing.assert_allclose(np.cov(x, rowvar=False), spec.covariance(), atol=0.03)

    def test_student_t_covariance(self, sigma, stream):
        spec = EllipticalSpec(mu=[0.0, 0.0], sigma=sigma, generator="student_t:6")
        x = sample_elliptical(spec, 200_000, stream(2))
        np.testing.assert_allclose(np.cov(x, rowvar=False), 1.5 * sigma, atol=0.06)

    def test_directions_uniform(self, stream):
        directions = sample_sphere(3, 5000, stream(3))
        np.testing.assert_allclose(np.linalg.norm(directions, axis=1), 1.0)
        assert rayleigh_test(directions) > 1e-4

    def test_concentrated_directions_detected(self):
        directions = np.tile([1.0, 0.0], (200, 1))
        assert rayleigh_test(directions) < 1e-10

    def test_stable_radial_unsupported(self, stream):
        with pytest.raises(UnsupportedOperationError):
            sample_radial(make_generator("stable:1.5"), 2, 10, stream(4))
