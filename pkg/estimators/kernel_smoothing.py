"""
Kernel density and distribution estimation with full bandwidth matrices

The fitted SmoothedModel is the conditional (smoothed) distribution of the
data: a mixture of rescaled kernels k_H(x - x_i) = det(H)^-1/2 k(H^-1/2 (x - x_i)).
"""
import logging
import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Dict

import numpy as np
from scipy import optimize, special
from scipy.interpolate import PchipInterpolator

from config.settings import get_settings
from estimators.elliptical_core import CharGenerator, make_generator, symmetric_sqrt
from utils.bivariate_normal import bvn_cdf
from utils.errors import ArgumentError, ConvergenceError, DomainError, UnsupportedOperationError

logger = logging.getLogger(__name__)

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class KernelSpec:
    """Spherical kernel with identity covariance and its univariate margin"""

    name: str
    generator: CharGenerator
    marginal_cdf: Callable[[np.ndarray], np.ndarray]
    marginal_pdf: Callable[[np.ndarray], np.ndarray]
    radial_density: Callable[[np.ndarray, int], np.ndarray]
    mu2: float = 1.0
    extra_uniforms: int = 0

    def density(self, sq_norm: np.ndarray, d: int) -> np.ndarray:
        """k(z) as a function of ||z||^2"""
        return self.radial_density(sq_norm, d)

    def noise_from_uniforms(self, block: np.ndarray, d: int) -> np.ndarray:
        """
        Kernel draws from a block of open uniforms

        The first d columns give standard normal scores; the Laplace kernel uses
        one more column for its exponential mixing weight.
        """
        normal = special.ndtri(block[:, :d])
        if self.name == "laplace":
            weight = -np.log(block[:, d])
            return np.sqrt(weight)[:, None] * normal
        return normal


def _gauss_density(q, d):
    return (2 * math.pi) ** (-d / 2) * np.exp(-np.asarray(q) / 2)


def _laplace_density(q, d):
    q = np.asarray(q, dtype=float)
    v = 1 - d / 2
    r = np.sqrt(q)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 2 / (2 * math.pi) ** (d / 2) * np.power(q / 2, v / 2) * special.kv(v, _SQRT2 * r)
    return np.where(q > 0, out, np.inf if d >= 2 else 1 / _SQRT2)


def _laplace_cdf(x):
    x = np.asarray(x, dtype=float)
    return np.where(x < 0, 0.5 * np.exp(_SQRT2 * np.minimum(x, 0)), 1 - 0.5 * np.exp(-_SQRT2 * np.maximum(x, 0)))


def _laplace_pdf(x):
    return np.exp(-_SQRT2 * np.abs(np.asarray(x, dtype=float))) / _SQRT2


KERNELS: Dict[str, KernelSpec] = {
    "gauss": KernelSpec(
        name="gauss",
        generator=make_generator("gauss"),
        marginal_cdf=special.ndtr,
        marginal_pdf=lambda x: np.exp(-np.asarray(x) ** 2 / 2) / math.sqrt(2 * math.pi),
        radial_density=_gauss_density,
    ),
    "laplace": KernelSpec(
        name="laplace",
        generator=make_generator("laplace"),
        marginal_cdf=_laplace_cdf,
        marginal_pdf=_laplace_pdf,
        radial_density=_laplace_density,
        extra_uniforms=1,
    ),
}


def get_kernel(kernel) -> KernelSpec:
    if isinstance(kernel, KernelSpec):
        return kernel
    try:
        return KERNELS[kernel]
    except KeyError:
        raise UnsupportedOperationError(f"unknown kernel {kernel!r}") from None


def check_bandwidth(H, d: int) -> np.ndarray:
    """Validate a d x d symmetric positive definite bandwidth matrix"""
    H = np.atleast_2d(np.asarray(H, dtype=float))
    if H.shape != (d, d):
        raise ArgumentError(f"bandwidth must be {d} x {d}, got {H.shape}")
    if not np.allclose(H, H.T, rtol=0, atol=1e-12 * max(1.0, np.abs(H).max())):
        raise ArgumentError("bandwidth must be symmetric")
    if np.any(np.linalg.eigvalsh(H) <= 0):
        raise ArgumentError("bandwidth must be positive definite")
    return 0.5 * (H + H.T)


@dataclass
class SmoothedModel:
    """Fitted conditional KDE; immutable apart from the lazily built quantile tables"""

    data: np.ndarray
    kernel: KernelSpec
    H: np.ndarray
    H_sqrt: np.ndarray
    h: np.ndarray
    _tables: Dict[int, PchipInterpolator] = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


def fit_model(data, H, kernel="gauss") -> SmoothedModel:
    """
    Build the smoothed model of a sample

    Args:
        data: n x d sample (a 1-D array is read as one column)
        H: d x d bandwidth matrix (a scalar is accepted for d = 1)
        kernel: Kernel name or KernelSpec

    Returns:
        SmoothedModel
    """
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    if data.shape[0] < 1:
        raise ArgumentError("data must contain at least one row")
    H = check_bandwidth(H, data.shape[1])
    return SmoothedModel(
        data=data,
        kernel=get_kernel(kernel),
        H=H,
        H_sqrt=symmetric_sqrt(H),
        h=np.sqrt(np.diag(H)),
    )


def _points(m: SmoothedModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if m.dim == 1 and x.ndim <= 1:
        return x.reshape(-1, 1)
    return np.atleast_2d(x)


def kde_density(m: SmoothedModel, x, chunk: int = 4096):
    """(1/n) sum det(H)^-1/2 k(H^-1/2 (x - x_i)) at one or many points"""
    single = np.ndim(x) <= (0 if m.dim == 1 else 1)
    pts = _points(m, x)
    inv_sqrt = np.linalg.inv(m.H_sqrt)
    scale = 1 / math.sqrt(np.linalg.det(m.H))
    out = np.empty(pts.shape[0])
    for start in range(0, pts.shape[0], chunk):
        diff = pts[start:start + chunk, None, :] - m.data[None, :, :]
        z = diff @ inv_sqrt.T
        q = np.sum(z * z, axis=-1)
        out[start:start + chunk] = scale * m.kernel.density(q, m.dim).mean(axis=1)
    return float(out[0]) if single else out


def component_cdfs(m: SmoothedModel, points) -> np.ndarray:
    """
    Matrix of K_H(x_k - x_i) with shape (len(points), n)

    Supported: any kernel at d = 1, the Gaussian kernel with diagonal H in any
    dimension and with full H at d = 2.
    """
    pts = _points(m, points)
    d = m.dim
    diagonal = np.allclose(m.H, np.diag(np.diag(m.H)))
    if d > 1 and m.kernel.name != "gauss":
        raise UnsupportedOperationError(f"joint CDF of the {m.kernel.name} kernel needs d = 1")
    if d > 2 and not diagonal:
        raise UnsupportedOperationError("joint Gaussian CDF with full H is implemented for d <= 2")

    diff = (pts[:, None, :] - m.data[None, :, :]) / m.h
    if d == 1 or diagonal:
        with np.errstate(invalid="ignore"):
            values = np.prod(m.kernel.marginal_cdf(diff), axis=-1)
    else:
        r = m.H[0, 1] / (m.h[0] * m.h[1])
        values = bvn_cdf(diff[..., 0], diff[..., 1], r)
    return np.nan_to_num(values, nan=1.0)


def kde_cdf(m: SmoothedModel, x):
    """Mixture CDF (1/n) sum K_H(x - x_i); monotone in every coordinate"""
    single = np.ndim(x) <= (0 if m.dim == 1 else 1)
    pts = _points(m, x)
    chunk = max(1, 200_000 // m.n)
    out = np.empty(pts.shape[0])
    for start in range(0, pts.shape[0], chunk):
        out[start:start + chunk] = component_cdfs(m, pts[start:start + chunk]).mean(axis=1)
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if single else out


def _check_index(m: SmoothedModel, j: int) -> None:
    if not 0 <= j < m.dim:
        raise ArgumentError(f"coordinate index {j} outside 0..{m.dim - 1}")


def marginal_cdf(m: SmoothedModel, j: int, x, chunk: int = 8192):
    """(1/n) sum F((x - x_ij) / sqrt(H_jj)) for coordinate j (0-based)"""
    _check_index(m, j)
    x = np.asarray(x, dtype=float)
    flat = np.atleast_1d(x).ravel()
    column = m.data[:, j]
    out = np.empty(flat.shape[0])
    for start in range(0, flat.shape[0], chunk):
        z = (flat[start:start + chunk, None] - column[None, :]) / m.h[j]
        out[start:start + chunk] = m.kernel.marginal_cdf(z).mean(axis=1)
    return float(out[0]) if x.ndim == 0 else out.reshape(x.shape)


def marginal_pdf(m: SmoothedModel, j: int, x):
    _check_index(m, j)
    x = np.asarray(x, dtype=float)
    z = (np.atleast_1d(x).ravel()[:, None] - m.data[None, :, j]) / m.h[j]
    out = m.kernel.marginal_pdf(z).mean(axis=1) / m.h[j]
    return float(out[0]) if x.ndim == 0 else out.reshape(x.shape)


def _bracket(m: SmoothedModel, j: int, p: float, lo: float, hi: float):
    """Expand [lo, hi] geometrically until it brackets F = p"""
    f = lambda x: marginal_cdf(m, j, x) - p
    width = hi - lo
    for step in range(get_settings().bracket_doublings):
        flo, fhi = f(lo), f(hi)
        if flo <= 0 <= fhi:
            return lo, hi
        width *= 2
        if flo > 0:
            lo -= width
        if fhi < 0:
            hi += width
        logger.debug("quantile bracket expanded (j=%d, p=%g, step=%d)", j, p, step)
    raise ConvergenceError(f"could not bracket quantile p={p} of coordinate {j}")


def _solve_quantile(m: SmoothedModel, j: int, p: float, lo: float, hi: float) -> float:
    settings = get_settings()
    lo, hi = _bracket(m, j, p, lo, hi)

    def excess(x):
        return marginal_cdf(m, j, x) - p

    x = optimize.brentq(excess, lo, hi, xtol=settings.quantile_xtol, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(excess(x)) <= settings.quantile_ptol:
        return x
    # steep margin: shrink the x tolerance by the local density
    xtol = max(0.5 * settings.quantile_ptol / max(marginal_pdf(m, j, x), 1e-300), np.finfo(float).tiny)
    lo, hi = _bracket(m, j, p, x - settings.quantile_xtol, x + settings.quantile_xtol)
    x = optimize.brentq(excess, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500)
    residual = abs(excess(x))
    if residual > settings.quantile_ptol:
        raise ConvergenceError(f"quantile p={p} of coordinate {j} reached only {residual:.3g} in p")
    return x


def _chebyshev_nodes(count: int) -> np.ndarray:
    k = np.arange(count)
    return 0.5 * (1 - np.cos(np.pi * (k + 0.5) / count))


def quantile_table(m: SmoothedModel, j: int) -> PchipInterpolator:
    """Monotone interpolant p -> x on Chebyshev p-nodes, built once per coordinate"""
    table = m._tables.get(j)
    if table is not None:
        return table
    with m._lock:
        table = m._tables.get(j)
        if table is None:
            nodes = _chebyshev_nodes(get_settings().quantile_nodes)
            lo0 = m.data[:, j].min() - 10 * m.h[j]
            hi0 = m.data[:, j].max() + 10 * m.h[j]
            xs = np.array([_solve_quantile(m, j, float(p), lo0, hi0) for p in nodes])
            table = PchipInterpolator(nodes, np.maximum.accumulate(xs))
            m._tables[j] = table
            logger.debug("built quantile table for coordinate %d (%d nodes)", j, nodes.size)
    return table


def marginal_quantile(m: SmoothedModel, j: int, p, use_table: bool = True):
    """
    x with marginal_cdf(m, j, x) = p, to 1e-10 in p

    The root is bracketed from [min - 10h, max + 10h] around the sample quantile,
    or from the interpolation table when it is available.

    Raises:
        DomainError: if p is outside (0, 1)
        ConvergenceError: if bracketing fails
    """
    _check_index(m, j)
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr <= 0) or np.any(p_arr >= 1) or np.any(np.isnan(p_arr)):
        raise DomainError("p must lie in (0, 1)")
    column = m.data[:, j]
    hj = m.h[j]
    table = quantile_table(m, j) if use_table else None
    nodes_lo = nodes_hi = None
    if table is not None:
        nodes_lo, nodes_hi = table.x[0], table.x[-1]

    results = []
    for pk in np.atleast_1d(p_arr).ravel():
        pk = float(pk)
        if table is not None and nodes_lo <= pk <= nodes_hi:
            guess = float(table(pk))
            lo, hi = guess - 0.05 * hj, guess + 0.05 * hj
        else:
            lo, hi = column.min() - 10 * hj, column.max() + 10 * hj
            # The sample quantile splits the initial bracket
            start = float(np.quantile(column, pk))
            if marginal_cdf(m, j, start) >= pk:
                hi = start
            else:
                lo = start
        results.append(_solve_quantile(m, j, pk, lo, hi))
    out = np.asarray(results)
    return float(out[0]) if p_arr.ndim == 0 else out.reshape(p_arr.shape)


def smoothed_copula_eval(m: SmoothedModel, u):
    """
    Smoothed copula kde_cdf(F_1^-1(u_1), ..., F_d^-1(u_d)) with one H throughout

    Coordinates at 0 or 1 map to -inf or +inf.
    """
    u = np.asarray(u, dtype=float)
    single = u.ndim == 1
    pts = np.atleast_2d(u)
    if np.any(pts < 0) or np.any(pts > 1):
        raise DomainError("copula arguments must lie in [0, 1]")
    x = np.empty_like(pts)
    for j in range(m.dim):
        col = pts[:, j]
        xj = np.full(col.shape, np.inf)
        xj[col == 0] = -np.inf
        inner = (col > 0) & (col < 1)
        if inner.any():
            xj[inner] = marginal_quantile(m, j, col[inner])
        x[:, j] = xj
    values = np.atleast_1d(kde_cdf(m, x))
    values[np.any(pts == 0, axis=1)] = 0.0
    return float(values[0]) if single else values
