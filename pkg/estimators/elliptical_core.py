"""
Characteristic generators, radial laws and elliptical sampling

An elliptical vector has characteristic function exp(i t'mu) * psi(t' Sigma t)
and stochastic representation mu + R * A * S with A A' = Sigma and S uniform on
the unit sphere.
"""
import logging
import math
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, Iterable, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy import integrate, optimize, special

from config.settings import get_settings
from models.schemas import GeneratorSpec
from utils.errors import (
    ArgumentError,
    DomainError,
    SingularParameterError,
    UnsupportedOperationError,
)
from utils.rng import RandomStream

logger = logging.getLogger(__name__)


class CharGenerator:
    """Characteristic generator psi: [0, inf) -> [-1, 1] with psi(0) = 1"""

    def __init__(
        self,
        name: str,
        family: str,
        func: Callable[[np.ndarray], np.ndarray],
        deriv_at_zero: float,
        param: Optional[float] = None,
        scale: float = 1.0,
        cacheable: bool = False,
    ):
        """
        Args:
            name: Display name, e.g. "student_t:3"
            family: Generator family or "product" for composed generators
            func: Vectorized evaluation on nonnegative arrays
            deriv_at_zero: psi'(0), possibly -inf
            param: Family parameter (nu or alpha)
            scale: Argument scaling s in psi(s * u) relative to the family
            cacheable: Memoize scalar evaluations
        """
        self.name = name
        self.family = family
        self.func = func
        self.deriv_at_zero = float(deriv_at_zero)
        self.param = param
        self.scale = float(scale)
        self.cacheable = cacheable
        self._cache: Dict[int, float] = {}
        self._lock = threading.Lock()

    def __call__(self, u):
        return eval_generator(self, u)

    def __repr__(self) -> str:
        return f"CharGenerator({self.name!r}, deriv_at_zero={self.deriv_at_zero})"

    @property
    def finite_variance(self) -> bool:
        return math.isfinite(self.deriv_at_zero)

    def scaled(self, s: float) -> "CharGenerator":
        """Generator u -> psi(s * u)"""
        if s <= 0:
            raise DomainError("scale must be positive")
        return CharGenerator(
            name=f"{self.name}@{s:g}",
            family=self.family,
            func=lambda u, f=self.func: f(s * u),
            deriv_at_zero=s * self.deriv_at_zero,
            param=self.param,
            scale=self.scale * s,
            cacheable=self.cacheable,
        )

    def cached_scalar(self, u: float) -> float:
        granularity = get_settings().cache_granularity
        key = int(round(u / granularity))
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        value = float(self.func(np.asarray(u, dtype=float)))
        with self._lock:
            self._cache[key] = value
        return value


def eval_generator(g: CharGenerator, u):
    """
    Evaluate psi at u (scalar or array)

    Raises:
        DomainError: if any u is negative
    """
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("generator argument must be nonnegative")
    if arr.ndim == 0:
        if g.cacheable and get_settings().generator_cache:
            return g.cached_scalar(float(arr))
        return float(g.func(arr))
    return np.asarray(g.func(arr), dtype=float)


def bessel_k_half(r: int, t):
    """
    Modified Bessel function K_{r + 1/2}(t) by its finite closed sum

    Args:
        r: Nonnegative integer order offset
        t: Positive argument (scalar or array)
    """
    if r < 0 or int(r) != r:
        raise DomainError("r must be a nonnegative integer")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("t must be positive")
    r = int(r)
    total = np.zeros_like(t)
    for k in range(r + 1):
        coef = math.factorial(r + k) / (math.factorial(r - k) * math.factorial(k))
        total = total + coef * (2 * t) ** (-k)
    out = np.sqrt(np.pi / (2 * t)) * np.exp(-t) * total
    return float(out) if out.ndim == 0 else out


def bessel_k_integral(alpha: float, t: float, tol: Optional[float] = None) -> float:
    """K_alpha(t) from its cosine-integral representation (t > 0, alpha > -1/2)"""
    if t <= 0:
        raise DomainError("t must be positive")
    if alpha <= -0.5:
        raise DomainError("alpha must exceed -1/2")
    tol = tol or get_settings().student_t_quad_tol
    value, _ = integrate.quad(
        lambda s: (s * s + t * t) ** (-(alpha + 0.5)),
        0.0,
        np.inf,
        weight="cos",
        wvar=1.0,
        epsrel=tol,
        limlst=200,
    )
    return special.gamma(alpha + 0.5) * (2 * t) ** alpha / math.sqrt(math.pi) * value


def _student_t_closed(nu: float):
    r = int(round((nu - 1) / 2))
    norm = special.gamma(nu / 2) * 2 ** (nu / 2 - 1)

    def func(u):
        u = np.asarray(u, dtype=float)
        flat = np.atleast_1d(u).ravel()
        out = np.ones_like(flat)
        pos = flat > 0
        if pos.any():
            t = np.sqrt(nu * flat[pos])
            out[pos] = np.atleast_1d(bessel_k_half(r, t)) * t ** (nu / 2) / norm
        return out.reshape(u.shape) if u.ndim else out[0]

    return func


def _student_t_quad(nu: float):
    norm = special.gamma(nu / 2) * 2 ** (nu / 2 - 1)

    def scalar(u: float) -> float:
        if u == 0:
            return 1.0
        t = math.sqrt(nu * u)
        return bessel_k_integral(nu / 2, t) * t ** (nu / 2) / norm

    def func(u):
        u = np.asarray(u, dtype=float)
        if u.ndim == 0:
            return scalar(float(u))
        return np.array([scalar(float(x)) for x in u.ravel()]).reshape(u.shape)

    return func


@lru_cache(maxsize=64)
def build_generator(family: str, param: Optional[float] = None) -> CharGenerator:
    """Generator for a named family; instances are shared so their caches are too"""
    spec = GeneratorSpec(family=family, param=param)
    if family == "gauss":
        return CharGenerator("gauss", family, lambda u: np.exp(-u / 2), -0.5)
    if family == "laplace":
        return CharGenerator("laplace", family, lambda u: 1.0 / (1.0 + u / 2), -0.5)
    if family == "cauchy":
        return CharGenerator("cauchy", family, lambda u: np.exp(-np.sqrt(u)), -np.inf)
    if family == "stable":
        alpha = float(param)
        deriv = -1.0 if alpha == 2 else -np.inf
        return CharGenerator(spec.label, family, lambda u: np.exp(-(u ** (alpha / 2))), deriv, param=alpha)
    nu = float(param)
    deriv = -nu / (2 * nu - 4) if nu > 2 else -np.inf
    if float(nu).is_integer() and int(nu) % 2 == 1:
        return CharGenerator(spec.label, family, _student_t_closed(nu), deriv, param=nu)
    return CharGenerator(spec.label, family, _student_t_quad(nu), deriv, param=nu, cacheable=True)


def make_generator(name) -> CharGenerator:
    """Accepts "gauss", "laplace", "cauchy", "student_t:<nu>", "stable:<alpha>" or a GeneratorSpec"""
    if isinstance(name, CharGenerator):
        return name
    spec = name if isinstance(name, GeneratorSpec) else GeneratorSpec.parse(name)
    return build_generator(spec.family, spec.param)


def product_generator(gx: CharGenerator, gy: CharGenerator, c: float) -> CharGenerator:
    """
    Generator of X + Y with Y scaled by c: psi_Z(u) = psi_X(u) * psi_Y(c u)

    Args:
        gx: Generator of the data vector
        gy: Generator of the smoothing kernel
        c: Bandwidth scale, H = c * Sigma
    """
    if c <= 0:
        raise DomainError("c must be positive")
    if gx.finite_variance and gy.finite_variance:
        deriv = gx.deriv_at_zero + c * gy.deriv_at_zero
    else:
        deriv = -np.inf
    return CharGenerator(
        name=f"{gx.name}*{gy.name}({c:g})",
        family="product",
        func=lambda u: gx.func(u) * gy.func(c * u),
        deriv_at_zero=deriv,
    )


def _solve_scale(g: CharGenerator, u: float, target: float) -> Optional[float]:
    """Solve g(s * u) = target for s >= 1; None if the target is out of reach"""
    lo, hi = 1.0, 2.0
    for _ in range(get_settings().bracket_doublings):
        if g.func(np.asarray(hi * u)) < target:
            break
        lo, hi = hi, 2 * hi
    else:
        return None
    return optimize.brentq(lambda s: float(g.func(np.asarray(s * u))) - target, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def closure_search(g: CharGenerator, c: float, grid: Iterable[float]) -> Tuple[float, float]:
    """
    Best scale gamma for g(u) g(c u) ~ g(gamma u) on a grid

    Returns:
        (max-abs defect at the best gamma, gamma)
    """
    if c <= 0:
        raise DomainError("c must be positive")
    grid = np.asarray(list(grid), dtype=float)
    if grid.size == 0:
        raise ArgumentError("grid must be nonempty")
    if np.any(grid < 0):
        raise DomainError("grid values must be nonnegative")

    lhs = g.func(grid) * g.func(c * grid)

    def defect(gamma: float) -> float:
        return float(np.max(np.abs(lhs - g.func(gamma * grid))))

    candidates = []
    for u, target in zip(grid, lhs):
        base = float(g.func(np.asarray(u)))
        if u == 0 or not 0 < target < base:
            continue
        gamma = _solve_scale(g, float(u), float(target))
        if gamma is not None:
            candidates.append(gamma)
    if not candidates:
        candidates = [1.0 + c]

    scored = [(defect(gm), gm) for gm in candidates]
    best_defect, best_gamma = min(scored)
    lo, hi = min(candidates), max(candidates)
    if hi - lo > 1e-12:
        res = optimize.minimize_scalar(defect, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        if res.fun < best_defect:
            best_defect, best_gamma = float(res.fun), float(res.x)
    logger.debug("closure search %s c=%g: gamma=%.12g defect=%.3e", g.name, c, best_gamma, best_defect)
    return best_defect, best_gamma


def closure_defect(g: CharGenerator, c: float, grid: Iterable[float]) -> float:
    """min over gamma of max_u |g(u) g(c u) - g(gamma u)|"""
    return closure_search(g, c, grid)[0]


def symmetric_sqrt(matrix) -> np.ndarray:
    """Symmetric square root through the eigendecomposition"""
    matrix = np.asarray(matrix, dtype=float)
    vals, vecs = np.linalg.eigh(matrix)
    if np.any(vals <= 0):
        raise ArgumentError("matrix must be positive definite")
    return (vecs * np.sqrt(vals)) @ vecs.T


class EllipticalSpec(BaseModel):
    """Location, dispersion matrix and generator of an elliptical law"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mu: np.ndarray
    sigma: np.ndarray
    generator: CharGenerator

    @field_validator("mu", mode="before")
    @classmethod
    def as_vector(cls, v):
        return np.atleast_1d(np.asarray(v, dtype=float))

    @field_validator("sigma", mode="before")
    @classmethod
    def as_matrix(cls, v):
        return np.atleast_2d(np.asarray(v, dtype=float))

    @field_validator("generator", mode="before")
    @classmethod
    def as_generator(cls, v):
        return make_generator(v)

    @model_validator(mode="after")
    def check_dispersion(self):
        d = self.mu.shape[0]
        if self.sigma.shape != (d, d):
            raise ValueError("sigma must be d x d")
        if not np.allclose(self.sigma, self.sigma.T):
            raise ValueError("sigma must be symmetric")
        if np.any(np.linalg.eigvalsh(self.sigma) <= 0):
            raise ValueError("sigma must be positive definite")
        return self

    @property
    def dim(self) -> int:
        return self.mu.shape[0]

    def characteristic_function(self, t) -> np.ndarray:
        """phi(t) for rows t of shape (k, d)"""
        t = np.atleast_2d(np.asarray(t, dtype=float))
        quad = np.einsum("ki,ij,kj->k", t, self.sigma, t)
        return np.exp(1j * t @ self.mu) * eval_generator(self.generator, quad)

    def covariance(self) -> np.ndarray:
        if not self.generator.finite_variance:
            raise UnsupportedOperationError(f"{self.generator.name} has no finite covariance")
        return -2 * self.generator.deriv_at_zero * self.sigma

    def normalize(self) -> "EllipticalSpec":
        """Reparameterize so the dispersion matrix equals the covariance"""
        s = -2 * self.generator.deriv_at_zero
        if not math.isfinite(s):
            raise UnsupportedOperationError(f"{self.generator.name} has no finite covariance")
        return EllipticalSpec(mu=self.mu, sigma=s * self.sigma, generator=self.generator.scaled(1 / s))


@dataclass(frozen=True)
class RadialDensity:
    """Density of the radial part R on (0, inf)"""

    family: str
    func: Callable[[np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.asarray(self.func(x), dtype=float)
        return float(out) if out.ndim == 0 else out

    def total_mass(self, tol: float = 1e-10) -> float:
        value, _ = integrate.quad(self.func, 0.0, np.inf, epsabs=tol, epsrel=tol, limit=200)
        return float(value)

    def negative_points(self, grid) -> np.ndarray:
        grid = np.asarray(grid, dtype=float)
        return grid[self(grid) < 0]


def _laplace_radial_pdf(x, d: int):
    x = np.asarray(x, dtype=float)
    flat = np.atleast_1d(x).ravel()
    order = d / 2 - 1
    norm = math.sqrt(2) ** order * special.gamma(d / 2)
    out = np.zeros_like(flat)
    pos = flat > 0
    xp = flat[pos]
    out[pos] = 2 * xp ** (d / 2) * special.kv(order, xp * math.sqrt(2)) / norm
    if d == 1:
        out[flat == 0] = math.sqrt(2)
    return out.reshape(x.shape) if x.ndim else out[0]


def laplace_radial(d: int) -> RadialDensity:
    """Radial density of the multivariate Laplace law with generator (1 + u/2)^-1"""
    if d < 1:
        raise DomainError("d must be positive")
    return RadialDensity("laplace", lambda x: _laplace_radial_pdf(x, d), {"d": d})


def laplace_distorted_radial(beta: float, d: int) -> RadialDensity:
    """
    Radial density of a Laplace vector smoothed by a Laplace kernel scaled by beta

    Raises:
        SingularParameterError: for beta = 1, where the partial fractions degenerate
    """
    if beta <= 0 or d < 1:
        raise DomainError("beta must be positive and d >= 1")
    if beta == 1:
        raise SingularParameterError("beta = 1 makes the partial fraction form singular")
    root = math.sqrt(beta)

    def func(x):
        x = np.asarray(x, dtype=float)
        return (_laplace_radial_pdf(x, d) - root * _laplace_radial_pdf(x / root, d)) / (1 - beta)

    density = RadialDensity("laplace_distorted", func, {"beta": beta, "d": d})
    grid = np.logspace(-3, math.log10(50), 400)
    negative = density.negative_points(grid)
    if negative.size:
        logger.warning(
            "distorted radial density negative at %d grid points (beta=%g, d=%d), min x=%g",
            negative.size, beta, d, negative.min(),
        )
    return density


@lru_cache(maxsize=16)
def _laplace_radial_table(d: int, size: int) -> Tuple[np.ndarray, np.ndarray]:
    x_max = 30.0 + 2.0 * d
    grid = np.linspace(0.0, x_max, size)
    cdf = integrate.cumulative_trapezoid(_laplace_radial_pdf(grid, d), grid, initial=0.0)
    cdf /= cdf[-1]
    return grid, cdf


def sample_radial(g: CharGenerator, d: int, n: int, rng: RandomStream) -> np.ndarray:
    """Draw the radial part R for a named generator family"""
    family = g.family
    if family == "gauss":
        r = np.sqrt(rng.chisquare(d, size=n))
    elif family == "student_t":
        r = np.sqrt(d * rng.f(d, g.param, size=n))
    elif family == "cauchy":
        r = np.sqrt(d * rng.f(d, 1.0, size=n))
    elif family == "laplace":
        grid, cdf = _laplace_radial_table(d, get_settings().laplace_radial_table)
        r = np.interp(rng.random(n), cdf, grid)
    else:
        raise UnsupportedOperationError(f"no radial sampler for generator {g.name}")
    # psi(s u) corresponds to dispersion s * Sigma
    return r * math.sqrt(g.scale)


def sample_sphere(d: int, n: int, rng: RandomStream) -> np.ndarray:
    """Uniform directions on the unit sphere via normalized Gaussians"""
    z = rng.standard_normal((n, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def sample_elliptical(spec: EllipticalSpec, n: int, rng: RandomStream) -> np.ndarray:
    """
    Draw n rows of E_d(mu, Sigma, psi) as mu + R * A * S

    Args:
        spec: Elliptical specification with a named generator family
        n: Number of rows
        rng: Random stream

    Returns:
        Array of shape (n, d)
    """
    if n < 1:
        raise ArgumentError("n must be positive")
    d = spec.dim
    r = sample_radial(spec.generator, d, n, rng)
    s = sample_sphere(d, n, rng)
    a = symmetric_sqrt(spec.sigma)
    return spec.mu + (r[:, None] * s) @ a.T


def rayleigh_test(directions: np.ndarray) -> float:
    """p-value of the Rayleigh test for uniformity of unit vectors"""
    directions = np.asarray(directions, dtype=float)
    n, d = directions.shape
    resultant = directions.sum(axis=0)
    stat = d * float(resultant @ resultant) / n
    return float(special.chdtrc(d, stat))
