"""
Parametric copulas and the empirical copula

Archimedean families are sampled through their frailty (Marshall-Olkin)
representation, elliptical copulas by transforming an elliptical vector with
its marginal CDF.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate, special
from scipy.stats import rankdata

from config.settings import get_settings
from estimators.elliptical_core import EllipticalSpec, sample_elliptical
from models.schemas import CopulaSpec, PolygonChain
from utils.bivariate_normal import bvn_cdf
from utils.errors import ArgumentError, DomainError, UnsupportedOperationError
from utils.rng import RandomStream, open_uniforms

logger = logging.getLogger(__name__)


class ArchimedeanGenerator:
    """Generator phi with inverse and derivative; C(u) = phi_inv(sum phi(u_j))"""

    def __init__(self, theta: float):
        self.theta = float(theta)

    def phi(self, t):
        raise NotImplementedError

    def phi_inv(self, s):
        raise NotImplementedError

    def phi_prime(self, t):
        raise NotImplementedError

    def sample_frailty(self, n: int, rng: RandomStream) -> np.ndarray:
        raise UnsupportedOperationError(f"{type(self).__name__} has no frailty sampler for theta={self.theta}")

    def cdf(self, u: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            s = np.sum(self.phi(u), axis=-1)
            out = self.phi_inv(s)
        return np.clip(np.nan_to_num(out, nan=0.0), 0.0, 1.0)

    def sample(self, n: int, d: int, rng: RandomStream) -> np.ndarray:
        v = self.sample_frailty(n, rng)
        e = rng.standard_exponential((n, d))
        with np.errstate(divide="ignore", over="ignore"):
            return self.phi_inv(e / v[:, None])


class ClaytonGenerator(ArchimedeanGenerator):
    """phi(t) = (t^-theta - 1) / theta, theta in (-1, inf) minus 0"""

    def phi(self, t):
        return (np.power(t, -self.theta) - 1) / self.theta

    def phi_inv(self, s):
        base = 1 + self.theta * np.asarray(s, dtype=float)
        if self.theta > 0:
            return np.power(base, -1 / self.theta)
        # Negative theta: the generator is clamped at zero
        return np.power(np.maximum(base, 0.0), -1 / self.theta)

    def phi_prime(self, t):
        return -np.power(t, -1 - self.theta)

    def cdf(self, u: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore", over="ignore"):
            s = np.sum(np.power(u, -self.theta), axis=-1) - u.shape[-1] + 1
            if self.theta > 0:
                out = np.power(s, -1 / self.theta)
            else:
                out = np.power(np.maximum(s, 0.0), -1 / self.theta)
        return np.clip(out, 0.0, 1.0)

    def sample_frailty(self, n: int, rng: RandomStream) -> np.ndarray:
        if self.theta <= 0:
            return super().sample_frailty(n, rng)
        return rng.gamma(1 / self.theta, self.theta, size=n)

    def sample_conditional(self, n: int, rng: RandomStream) -> np.ndarray:
        """Bivariate sampling by inverting the conditional distribution of V given U"""
        u = open_uniforms(rng, n)
        w = open_uniforms(rng, n)
        th = self.theta
        base = np.power(u, -th) * (np.power(w, -th / (1 + th)) - 1) + 1
        v = np.power(np.maximum(base, 0.0), -1 / th)
        return np.column_stack([u, v])

    def sample(self, n: int, d: int, rng: RandomStream) -> np.ndarray:
        if self.theta > 0:
            return super().sample(n, d, rng)
        if d != 2:
            raise UnsupportedOperationError("negative clayton theta is bivariate only")
        return self.sample_conditional(n, rng)


class GumbelGenerator(ArchimedeanGenerator):
    """phi(t) = (-log t)^theta, theta >= 1; positive stable frailty"""

    def phi(self, t):
        return np.power(-np.log(t), self.theta)

    def phi_inv(self, s):
        return np.exp(-np.power(s, 1 / self.theta))

    def phi_prime(self, t):
        return -self.theta * np.power(-np.log(t), self.theta - 1) / t

    def sample_frailty(self, n: int, rng: RandomStream) -> np.ndarray:
        alpha = 1 / self.theta
        if alpha == 1:
            return np.ones(n)
        # Kanter representation of the one-sided stable law with LT exp(-s^alpha)
        u = np.pi * open_uniforms(rng, n)
        e = rng.standard_exponential(n)
        return (
            np.sin(alpha * u) / np.power(np.sin(u), 1 / alpha)
            * np.power(np.sin((1 - alpha) * u) / e, (1 - alpha) / alpha)
        )


class JoeGenerator(ArchimedeanGenerator):
    """phi(t) = -log(1 - (1 - t)^theta), theta >= 1; Sibuya frailty"""

    def phi(self, t):
        return -np.log1p(-np.power(1 - np.asarray(t, dtype=float), self.theta))

    def phi_inv(self, s):
        return 1 - np.power(-np.expm1(-np.asarray(s, dtype=float)), 1 / self.theta)

    def phi_prime(self, t):
        w = np.power(1 - t, self.theta)
        return -self.theta * np.power(1 - t, self.theta - 1) / (1 - w)

    def sample_frailty(self, n: int, rng: RandomStream) -> np.ndarray:
        alpha = 1 / self.theta
        if alpha == 1:
            return np.ones(n)
        # P(V > k) = Gamma(k + 1 - alpha) / (Gamma(k + 1) Gamma(1 - alpha)); bisection on log k
        log_u = np.log(open_uniforms(rng, n))
        log_norm = special.gammaln(1 - alpha)
        lo = np.full(n, -40.0)
        hi = np.full(n, 700.0)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            k = np.exp(mid)
            exact = special.gammaln(k + 1 - alpha) - special.gammaln(k + 1)
            # Large k: Gamma(z - a) / Gamma(z) ~ z^-a (1 + a (a + 1) / (2 z))
            asymptotic = -alpha * np.log(k + 1) + np.log1p(alpha * (alpha + 1) / (2 * (k + 1)))
            log_s = np.where(k < 1e6, exact, asymptotic) - log_norm
            above = log_s >= log_u
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        return np.floor(np.exp(0.5 * (lo + hi))) + 1


def archimedean_generator(spec: CopulaSpec) -> ArchimedeanGenerator:
    if spec.family == "clayton":
        return ClaytonGenerator(spec.theta)
    if spec.family == "gumbel":
        return GumbelGenerator(spec.theta)
    if spec.family == "joe":
        return JoeGenerator(spec.theta)
    raise UnsupportedOperationError(f"{spec.family} is not archimedean")


def elliptical_copula_spec(spec: CopulaSpec) -> EllipticalSpec:
    """Standardized elliptical law behind a gaussian or t copula (equicorrelated when d > 2)"""
    d = spec.dim
    corr = np.full((d, d), spec.rho)
    np.fill_diagonal(corr, 1.0)
    generator = "gauss" if spec.family == "gaussian" else f"student_t:{spec.nu}"
    return EllipticalSpec(mu=np.zeros(d), sigma=corr, generator=generator)


def _elliptical_margin_cdf(spec: CopulaSpec, x):
    if spec.family == "gaussian":
        return special.ndtr(x)
    return special.stdtr(spec.nu, x)


def _t_density(nu: float):
    return lambda x: math.exp(
        special.gammaln((nu + 1) / 2) - special.gammaln(nu / 2) - 0.5 * math.log(nu * math.pi)
        - (nu + 1) / 2 * math.log1p(x * x / nu)
    )


def _t_copula_cdf2(rho: float, nu: float, u: float, v: float) -> float:
    """Bivariate t copula by a 1-D integral over the conditional law of Y given X"""
    a = special.stdtrit(nu, u)
    b = special.stdtrit(nu, v)
    density = _t_density(nu)

    def integrand(x):
        scale = math.sqrt((1 - rho * rho) * (nu + x * x) / (nu + 1))
        return density(x) * special.stdtr(nu + 1, (b - rho * x) / scale)

    value, _ = integrate.quad(integrand, -np.inf, a, epsabs=1e-10, epsrel=1e-8, limit=200)
    return float(value)


def copula_cdf(spec: CopulaSpec, u):
    """
    Evaluate C(u) for one point (shape (d,)) or many (shape (k, d))

    Raises:
        DomainError: if u leaves [0, 1]^d
        UnsupportedOperationError: for elliptical copulas with d > 2
    """
    u = np.asarray(u, dtype=float)
    single = u.ndim == 1
    points = np.atleast_2d(u)
    if points.shape[-1] != spec.dim:
        raise ArgumentError(f"expected points of dimension {spec.dim}")
    if np.any(points < 0) or np.any(points > 1):
        raise DomainError("copula arguments must lie in [0, 1]")

    if spec.family == "independence":
        out = np.prod(points, axis=-1)
    elif spec.is_archimedean:
        out = archimedean_generator(spec).cdf(points)
    else:
        if spec.dim != 2:
            raise UnsupportedOperationError("elliptical copula CDF is implemented for d = 2 only")
        out = np.empty(points.shape[0])
        zero = np.any(points == 0, axis=-1)
        first_one = points[:, 0] == 1
        second_one = points[:, 1] == 1
        out[zero] = 0.0
        out[~zero & first_one] = points[~zero & first_one, 1]
        out[~zero & ~first_one & second_one] = points[~zero & ~first_one & second_one, 0]
        interior = ~zero & ~first_one & ~second_one
        if spec.family == "gaussian":
            inner = points[interior]
            out[interior] = bvn_cdf(special.ndtri(inner[:, 0]), special.ndtri(inner[:, 1]), spec.rho)
        else:
            for idx in np.flatnonzero(interior):
                out[idx] = _t_copula_cdf2(spec.rho, spec.nu, points[idx, 0], points[idx, 1])
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if single else out


def sample_copula(spec: CopulaSpec, n: int, rng: RandomStream) -> np.ndarray:
    """
    Draw n iid rows from the copula

    Returns:
        Array of shape (n, dim) with entries in [0, 1]
    """
    if n < 1:
        raise ArgumentError("n must be positive")
    if spec.family == "independence":
        return open_uniforms(rng, (n, spec.dim))
    if spec.is_archimedean:
        return archimedean_generator(spec).sample(n, spec.dim, rng)
    x = sample_elliptical(elliptical_copula_spec(spec), n, rng)
    return _elliptical_margin_cdf(spec, x)


def _joe_tau(theta: float) -> float:
    gen = JoeGenerator(theta)

    def ratio(t):
        return float(gen.phi(t) / gen.phi_prime(t))

    value, _ = integrate.quad(ratio, 0.0, 1.0, epsabs=1e-10, epsrel=1e-10, limit=200)
    return 1 + 4 * value


def true_tau(spec: CopulaSpec) -> float:
    """Kendall's tau of the model"""
    family = spec.family
    if family == "independence":
        return 0.0
    if family == "clayton":
        return spec.theta / (spec.theta + 2)
    if family == "gumbel":
        return 1 - 1 / spec.theta
    if family == "joe":
        return 0.0 if spec.theta == 1 else _joe_tau(spec.theta)
    return 2 / math.pi * math.asin(spec.rho)


def _t_rho_s(rho: float, nu: float) -> float:
    norm = math.sqrt(1 - rho * rho)

    def integrand(y, x):
        q = (x * x - 2 * rho * x * y + y * y) / (1 - rho * rho)
        f = math.exp(
            special.gammaln((nu + 2) / 2) - special.gammaln(nu / 2)
            - math.log(nu * math.pi * norm) - (nu + 2) / 2 * math.log1p(q / nu)
        )
        return special.stdtr(nu, x) * special.stdtr(nu, y) * f

    value, _ = integrate.dblquad(integrand, -np.inf, np.inf, -np.inf, np.inf, epsabs=1e-9, epsrel=1e-7)
    return 12 * value - 3


def true_rho_s(spec: CopulaSpec) -> float:
    """Spearman's rho of a bivariate model"""
    if spec.dim != 2:
        raise UnsupportedOperationError("spearman's rho is implemented for d = 2 only")
    if spec.family == "independence":
        return 0.0
    if spec.family == "gaussian":
        return 6 / math.pi * math.asin(spec.rho / 2)
    if spec.family == "student_t":
        return _t_rho_s(spec.rho, spec.nu)
    gen = archimedean_generator(spec)

    def integrand(v, u):
        return float(gen.cdf(np.array([u, v])))

    value, _ = integrate.dblquad(integrand, 0.0, 1.0, 0.0, 1.0, epsabs=1e-9, epsrel=1e-7)
    return 12 * value - 3


def clayton_level_boundary(theta: float, t: float, n_pts: Optional[int] = None) -> PolygonChain:
    """
    Closed-form boundary of {C <= t} for a bivariate Clayton copula

    theta = 0 gives the independence boundary v = t / u.

    Args:
        theta: Clayton parameter in (-1, inf)
        t: Level in (0, 1)
        n_pts: Number of vertices, uniform in u on [t, 1]

    Returns:
        Chain from (t, 1) to (1, t)
    """
    if not 0 < t < 1:
        raise DomainError("level t must lie in (0, 1)")
    if theta <= -1:
        raise DomainError("theta must exceed -1")
    n_pts = n_pts or get_settings().truth_points
    if n_pts < 2:
        raise ArgumentError("n_pts must be at least 2")
    u = np.linspace(t, 1.0, n_pts)
    if theta == 0:
        v = t / u
    else:
        base = t ** (-theta) - np.power(u, -theta) + 1
        v = np.power(np.maximum(base, 0.0), -1 / theta)
    u[0], v[0] = t, 1.0
    u[-1], v[-1] = 1.0, t
    return PolygonChain.from_array(np.column_stack([u, v]))


def true_diagonal(spec: CopulaSpec, u_grid) -> np.ndarray:
    """delta(u) = C(u, ..., u)"""
    u_grid = np.asarray(u_grid, dtype=float)
    points = np.repeat(u_grid[:, None], spec.dim, axis=1)
    return np.asarray(copula_cdf(spec, points), dtype=float)


def pseudo_observations(data) -> np.ndarray:
    """Column ranks (average on ties) divided by n + 1"""
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ArgumentError("data must be an n x d matrix")
    n = data.shape[0]
    return rankdata(data, method="average", axis=0) / (n + 1)


@dataclass(frozen=True)
class EmpiricalCopula:
    """Empirical distribution of the pseudo-observations"""

    pseudo_obs: np.ndarray

    @classmethod
    def from_data(cls, data) -> "EmpiricalCopula":
        return cls(pseudo_observations(data))

    @property
    def n(self) -> int:
        return self.pseudo_obs.shape[0]

    @property
    def dim(self) -> int:
        return self.pseudo_obs.shape[1]

    def evaluate(self, u, chunk: int = 2048):
        """(1/n) #{i : pseudo_obs_i <= u componentwise} for one or many points"""
        u = np.asarray(u, dtype=float)
        single = u.ndim == 1
        points = np.atleast_2d(u)
        out = np.empty(points.shape[0])
        for start in range(0, points.shape[0], chunk):
            block = points[start:start + chunk]
            below = np.all(self.pseudo_obs[None, :, :] <= block[:, None, :], axis=-1)
            out[start:start + chunk] = below.mean(axis=1)
        return float(out[0]) if single else out

    def grid_values(self, grid) -> np.ndarray:
        """Bivariate values C_n(grid[i], grid[j]) through a cumulative 2-D histogram"""
        if self.dim != 2:
            raise UnsupportedOperationError("grid evaluation is bivariate")
        grid = np.asarray(grid, dtype=float)
        g = grid.size
        i = np.searchsorted(grid, self.pseudo_obs[:, 0], side="left")
        j = np.searchsorted(grid, self.pseudo_obs[:, 1], side="left")
        counts = np.zeros((g + 1, g + 1))
        np.add.at(counts, (i, j), 1.0)
        cumulative = counts.cumsum(axis=0).cumsum(axis=1)
        return cumulative[:g, :g] / self.n

    def diagonal(self, u_grid) -> np.ndarray:
        """C_n(u, ..., u): the ECDF of row maxima"""
        maxima = np.sort(self.pseudo_obs.max(axis=1))
        return np.searchsorted(maxima, np.asarray(u_grid, dtype=float), side="right") / self.n


def empirical_copula_eval(ec: EmpiricalCopula, u):
    """C_n(u) for a point in [0, 1]^d, or an array of values for a k x d block"""
    return ec.evaluate(u)
