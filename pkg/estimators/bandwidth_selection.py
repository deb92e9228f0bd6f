"""
Bandwidth matrix selection

Sphering reduces the search to a scalar: H = h * Sigma_hat. The weighted
cross-validation criterion integrates against w(x) = exp(-||x - c||^2), which
is exactly the Gauss-Hermite weight after the shift x = c + t.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

import numpy as np
import pandas as pd
from scipy.special import ndtr

from config.settings import get_settings
from estimators.elliptical_core import symmetric_sqrt
from estimators.kernel_smoothing import check_bandwidth, component_cdfs, fit_model, get_kernel
from models.schemas import CVResult
from utils.bivariate_normal import bvn_cdf_general
from utils.errors import ArgumentError, UnsupportedOperationError
from utils.quadrature import QuadratureRule, gauss_hermite_rule
from utils.rng import RandomStream, derive_stream, make_stream

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WeightFunction:
    """w(x) = exp(-||x - center||^2)"""

    center: np.ndarray

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def __call__(self, x) -> np.ndarray:
        diff = np.atleast_2d(x) - self.center
        return np.exp(-np.sum(diff * diff, axis=-1))

    def total_mass(self) -> float:
        return math.pi ** (self.dim / 2)


def make_weight(center) -> WeightFunction:
    return WeightFunction(np.atleast_1d(np.asarray(center, dtype=float)))


class TrueModel(Protocol):
    """Sampler with an exact CDF, used as an oracle"""

    dim: int

    def sample(self, n: int, rng: RandomStream) -> np.ndarray: ...

    def cdf(self, x: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class NormalModel:
    """Normal oracle in one or two dimensions"""

    mean: np.ndarray
    cov: np.ndarray

    @classmethod
    def create(cls, mean, cov) -> "NormalModel":
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        if mean.shape[0] > 2:
            raise UnsupportedOperationError("normal oracle CDF is implemented for d <= 2")
        return cls(mean, cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def sample(self, n: int, rng: RandomStream) -> np.ndarray:
        z = rng.standard_normal((n, self.dim))
        return self.mean + z @ symmetric_sqrt(self.cov).T

    def cdf(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.dim == 1:
            return ndtr((x[:, 0] - self.mean[0]) / math.sqrt(self.cov[0, 0]))
        return bvn_cdf_general(x, self.mean, self.cov)


@dataclass(frozen=True)
class PointMassModel:
    """Degenerate oracle X = x0"""

    x0: np.ndarray

    @property
    def dim(self) -> int:
        return self.x0.shape[0]

    def sample(self, n: int, rng: RandomStream) -> np.ndarray:
        return np.tile(self.x0, (n, 1))

    def cdf(self, x) -> np.ndarray:
        return np.all(self.x0 <= np.atleast_2d(x), axis=-1).astype(float)


def study_model() -> NormalModel:
    """Bivariate normal of the cross-validation study"""
    return NormalModel.create([-1.0, 1.0], [[1.0, 1.05], [1.05, 1.96]])


def silverman_h(d: int, n: int) -> float:
    """h(d, n) = (4 / (n (d + 2)))^(2 / (d + 4)); use as H = h * Sigma_hat"""
    if d < 1 or n < 2:
        raise ArgumentError("silverman_h requires d >= 1 and n >= 2")
    return (4 / (n * (d + 2))) ** (2 / (d + 4))


def sample_covariance(data) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    return np.atleast_2d(np.cov(data, rowvar=False))


def _defaults(data: np.ndarray, w: Optional[WeightFunction], q: Optional[QuadratureRule]):
    if w is None:
        w = make_weight(data.mean(axis=0))
    if q is None:
        q = gauss_hermite_rule(get_settings().gh_order, data.shape[1])
    if w.dim != data.shape[1] or q.dim != data.shape[1]:
        raise ArgumentError("weight and quadrature dimension must match the data")
    return w, q


def _indicators(data: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """1{X_i <= x_k} with shape (n, K)"""
    return np.all(data[:, None, :] <= nodes[None, :, :], axis=-1).astype(float)


def _cv_value(data: np.ndarray, H: np.ndarray, nodes: np.ndarray, weights: np.ndarray, indicators: np.ndarray, kernel) -> float:
    n = data.shape[0]
    model = fit_model(data, H, kernel)
    components = component_cdfs(model, nodes).T
    loo = (components.sum(axis=0)[None, :] - components) / (n - 1)
    return float(np.mean(((indicators - loo) ** 2) @ weights))


def cv_objective(data, H, w: Optional[WeightFunction] = None, q: Optional[QuadratureRule] = None, kernel="gauss") -> float:
    """
    Weighted leave-one-out criterion (1/n) sum_i int (1{X_i <= x} - F_-i(x))^2 w(x) dx

    Raises:
        ArgumentError: for n < 3 or a bandwidth that is not SPD
    """
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    if data.shape[0] < 3:
        raise ArgumentError("cross-validation needs n >= 3")
    H = check_bandwidth(H, data.shape[1])
    w, q = _defaults(data, w, q)
    nodes = q.shifted(w.center)
    return _cv_value(data, H, nodes, q.weights, _indicators(data, nodes), kernel)


def _cv_curve(data: np.ndarray, sigma: np.ndarray, h_grid: np.ndarray, w: WeightFunction, q: QuadratureRule, kernel) -> np.ndarray:
    nodes = q.shifted(w.center)
    indicators = _indicators(data, nodes)
    return np.array([_cv_value(data, h * sigma, nodes, q.weights, indicators, kernel) for h in h_grid])


def _check_grid(h_grid) -> np.ndarray:
    grid = np.asarray(h_grid if h_grid is not None else get_settings().h_grid(), dtype=float)
    if grid.size == 0:
        raise ArgumentError("h_grid must be nonempty")
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ArgumentError("h_grid must be positive and ascending")
    return grid


def select_bandwidth_cv(
    data,
    h_grid: Optional[Sequence[float]] = None,
    w: Optional[WeightFunction] = None,
    q: Optional[QuadratureRule] = None,
    kernel="gauss",
    bootstrap_reps: int = 0,
    rng: Optional[RandomStream] = None,
    threads: Optional[int] = None,
) -> CVResult:
    """
    Minimize the CV criterion of H = h * Sigma_hat over a grid

    With bootstrap_reps > 0 the criterion is averaged over resamples of the data
    before minimizing; resamples keep the weight center and Sigma_hat of the
    original sample.

    Args:
        data: n x d sample
        h_grid: Ascending positive grid (settings default 0.01..2.5)
        w: Weight function (default centered at the sample mean)
        q: Quadrature rule (default Gauss-Hermite of the configured order)
        kernel: Kernel name
        bootstrap_reps: Number of resamples to average, 0 for none
        rng: Random stream for the resamples
        threads: Worker threads for the resamples

    Returns:
        CVResult
    """
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    n = data.shape[0]
    if n < 3:
        raise ArgumentError("cross-validation needs n >= 3")
    grid = _check_grid(h_grid)
    if bootstrap_reps < 0:
        raise ArgumentError("bootstrap_reps must be nonnegative")
    w, q = _defaults(data, w, q)
    get_kernel(kernel)
    sigma = sample_covariance(data)

    if bootstrap_reps == 0:
        values = _cv_curve(data, sigma, grid, w, q, kernel)
    else:
        rng = make_stream(rng)
        resamples = [data[rng.integers(0, n, size=n)] for _ in range(bootstrap_reps)]
        workers = threads or get_settings().threads
        with ThreadPoolExecutor(max_workers=workers) as pool:
            curves = list(pool.map(lambda sample: _cv_curve(sample, sigma, grid, w, q, kernel), resamples))
        values = np.mean(curves, axis=0)

    best = int(np.argmin(values))
    h_star = float(grid[best])
    boundary = best in (0, grid.size - 1)
    if boundary:
        logger.warning("CV minimizer h=%g sits on the grid boundary", h_star)
    logger.info("selected h=%g (bootstrap_reps=%d)", h_star, bootstrap_reps)
    return CVResult(
        h_grid=grid.tolist(),
        cv_values=np.asarray(values, dtype=float).tolist(),
        h_star=h_star,
        H_star=(h_star * sigma).tolist(),
        sigma_hat=sigma.tolist(),
        bootstrap_reps=bootstrap_reps,
        boundary_minimizer=boundary,
    )


def _mean_se(values) -> tuple:
    values = np.asarray(values, dtype=float)
    se = values.std(ddof=1) / math.sqrt(values.size) if values.size > 1 else float("nan")
    return float(values.mean()), float(se)


def _ise(model: TrueModel, sample: np.ndarray, H: np.ndarray, nodes: np.ndarray, weights: np.ndarray, kernel) -> float:
    fitted = fit_model(sample, H, kernel)
    estimate = component_cdfs(fitted, nodes).mean(axis=1)
    return float(((estimate - model.cdf(nodes)) ** 2) @ weights)


def mise_mc(
    true_model: TrueModel,
    n: int,
    H,
    w: WeightFunction,
    q: QuadratureRule,
    reps: int,
    rng: Optional[RandomStream] = None,
    kernel="gauss",
    return_se: bool = False,
):
    """
    Monte Carlo weighted MISE: mean over reps of int (F_n - F_X)^2 w

    Returns:
        The estimate, or (estimate, standard error) when return_se is set
    """
    if reps < 1 or n < 1:
        raise ArgumentError("reps and n must be positive")
    rng = make_stream(rng)
    H = check_bandwidth(H, true_model.dim)
    nodes = q.shifted(w.center)
    values = [_ise(true_model, true_model.sample(n, rng), H, nodes, q.weights, kernel) for _ in range(reps)]
    mean, se = _mean_se(values)
    return (mean, se) if return_se else mean


def d_constant_mc(
    true_model: TrueModel,
    w: WeightFunction,
    q: QuadratureRule,
    reps: int,
    rng: Optional[RandomStream] = None,
    return_se: bool = False,
):
    """Monte Carlo estimate of E int (1{X <= x} - F_X(x))^2 w(x) dx"""
    if reps < 1:
        raise ArgumentError("reps must be positive")
    rng = make_stream(rng)
    nodes = q.shifted(w.center)
    truth = true_model.cdf(nodes)
    draws = true_model.sample(reps, rng)
    values = ((_indicators(draws, nodes) - truth[None, :]) ** 2) @ q.weights
    mean, se = _mean_se(values)
    return (mean, se) if return_se else mean


def d_constant_exact(true_model: TrueModel, w: WeightFunction, q: QuadratureRule) -> float:
    """int F_X (1 - F_X) w by quadrature; the expectation of the indicator variance"""
    nodes = q.shifted(w.center)
    truth = true_model.cdf(nodes)
    return float((truth * (1 - truth)) @ q.weights)


def averaged_cv_curve(
    true_model: TrueModel,
    n: int,
    h_grid: Sequence[float],
    R: int,
    w: WeightFunction,
    q: QuadratureRule,
    rng: Optional[RandomStream] = None,
    H_base=None,
    kernel="gauss",
) -> pd.DataFrame:
    """
    Mean and standard error of the CV criterion over R oracle samples

    H = h * H_base with H_base defaulting to the oracle covariance, so the
    bandwidth is fixed across samples.
    """
    rng = make_stream(rng)
    grid = _check_grid(h_grid)
    base = np.atleast_2d(true_model.cov if H_base is None else np.asarray(H_base, dtype=float))
    curves = np.array([_cv_curve(true_model.sample(n, rng), base, grid, w, q, kernel) for _ in range(R)])
    se = curves.std(axis=0, ddof=1) / math.sqrt(R) if R > 1 else np.full(grid.size, np.nan)
    return pd.DataFrame({"h": grid, "cv_mean": curves.mean(axis=0), "cv_se": se})


def cv_identity_check(
    true_model: TrueModel,
    n: int,
    h_values: Sequence[float],
    R: int,
    mise_reps: int,
    d_reps: int = 10_000,
    w: Optional[WeightFunction] = None,
    q: Optional[QuadratureRule] = None,
    seed: int = 0,
) -> pd.DataFrame:
    """
    Compare the averaged CV criterion at n with MISE at n - 1 plus the constant D

    Returns:
        DataFrame with one row per h and a `within_3se` flag
    """
    w = w or make_weight(true_model.mean)
    q = q or gauss_hermite_rule(get_settings().gh_order, true_model.dim)
    d_hat, d_se = d_constant_mc(true_model, w, q, d_reps, derive_stream(seed, 0), return_se=True)
    cv = averaged_cv_curve(true_model, n, h_values, R, w, q, derive_stream(seed, 1))
    rows = []
    for k, h in enumerate(cv["h"]):
        H = h * true_model.cov
        mise, mise_se = mise_mc(true_model, n - 1, H, w, q, mise_reps, derive_stream(seed, 2, k), return_se=True)
        combined = math.sqrt(cv["cv_se"][k] ** 2 + mise_se ** 2 + d_se ** 2)
        gap = cv["cv_mean"][k] - mise - d_hat
        rows.append({
            "h": h,
            "cv_mean": cv["cv_mean"][k],
            "cv_se": cv["cv_se"][k],
            "mise": mise,
            "mise_se": mise_se,
            "d_hat": d_hat,
            "d_se": d_se,
            "gap": gap,
            "combined_se": combined,
            "within_3se": abs(gap) <= 3 * combined,
        })
    return pd.DataFrame(rows)
