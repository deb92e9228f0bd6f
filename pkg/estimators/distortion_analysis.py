"""
Dependence distortion diagnostics for elliptical smoothing
"""
import logging
import math
from typing import Iterable, Optional, Tuple

import numpy as np
import pandas as pd

from estimators.copula_functionals import sample_tau
from estimators.elliptical_core import (
    CharGenerator,
    EllipticalSpec,
    eval_generator,
    make_generator,
    product_generator,
    sample_elliptical,
)
from models.schemas import CorrelationReport, DistortionReport
from utils.errors import ArgumentError, DomainError, UnsupportedOperationError
from utils.rng import RandomStream, derive_stream, make_stream, spawn_seed

logger = logging.getLogger(__name__)

RATE_EXPONENTS = tuple(range(4, 13))
TAU_BATCHES = 50


def fit_rate_exponent(gy: CharGenerator, u: float = 1.0, ks: Iterable[int] = RATE_EXPONENTS) -> float:
    """Least-squares slope of log(1 - psi(c u)) against log c over c = 2^-k"""
    c = 2.0 ** -np.asarray(list(ks), dtype=float)
    rel = 1.0 - eval_generator(gy, c * u)
    if np.any(rel <= 0):
        raise DomainError("relative error vanishes on the fitting grid")
    slope, _ = np.polyfit(np.log(c), np.log(rel), 1)
    return float(slope)


def relative_error_curve(
    gy,
    c: float,
    u_grid,
    sigma=None,
    t=None,
    with_rate: bool = True,
) -> DistortionReport:
    """
    Relative error 1 - psi_Y(c u) of smoothing with kernel generator gy

    Args:
        gy: Kernel generator (or its name)
        c: Bandwidth scale, H = c * Sigma
        u_grid: Nonnegative arguments u
        sigma: Optional dispersion matrix; with t, gives the bound on |phi_X - phi_Z|
        t: Optional (k, d) frequencies for the bound
        with_rate: Also fit the small-c rate exponent at u = 1

    Returns:
        DistortionReport
    """
    if c <= 0:
        raise DomainError("c must be positive")
    gy = make_generator(gy)
    u_grid = np.asarray(u_grid, dtype=float)
    rel = 1.0 - eval_generator(gy, c * u_grid)

    abs_bound = None
    if sigma is not None and t is not None:
        sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
        t = np.atleast_2d(np.asarray(t, dtype=float))
        quad = np.einsum("ki,ij,kj->k", t, sigma, t)
        abs_bound = (1.0 - eval_generator(gy, c * quad)).tolist()

    rate = fit_rate_exponent(gy) if with_rate else None
    return DistortionReport(
        generator=gy.name,
        c=c,
        u_grid=u_grid.tolist(),
        rel_error=np.atleast_1d(rel).tolist(),
        abs_bound=abs_bound,
        rate_exponent=rate,
    )


def distortion_frame(gx, gy, c: float, u_grid) -> pd.DataFrame:
    """Generators of the data and of the smoothed data side by side"""
    gx, gy = make_generator(gx), make_generator(gy)
    gz = product_generator(gx, gy, c)
    u_grid = np.asarray(u_grid, dtype=float)
    psi_x = eval_generator(gx, u_grid)
    psi_z = eval_generator(gz, u_grid)
    return pd.DataFrame(
        {
            "u": u_grid,
            "psi_x": psi_x,
            "psi_z": psi_z,
            "rel_error": 1.0 - eval_generator(gy, c * u_grid),
            "abs_diff": np.abs(psi_x - psi_z),
        }
    )


def _check_positive(**values: float) -> None:
    for name, value in values.items():
        if not value > 0:
            raise DomainError(f"{name} must be positive, got {value}")


def laplace_default_m(sigma2: float) -> float:
    """24 sup f_X for a centered Laplace law with variance sigma2"""
    _check_positive(sigma2=sigma2)
    return 24.0 / math.sqrt(2.0 * sigma2)


def first_order_residual(T: float, c: float, sigma2: float, M: float) -> float:
    """Relative residual of c s2 T^3 - M c s2 T^2 / 2 - M = 0"""
    cs = c * sigma2
    value = cs * T ** 3 - M * cs * T ** 2 / 2 - M
    return abs(value) / (cs * T ** 3 + M)


def laplace_bound_at(T: float, c: float, sigma2: float, M: float) -> float:
    """Uniform-distance bound of Laplace smoothing at cutoff T"""
    return math.log(c * sigma2 * T ** 2 / 2 + 1) / math.pi + M / (math.pi * T)


def laplace_uniform_bound(c: float, sigma2: float, M: Optional[float] = None) -> Tuple[float, float]:
    """
    Minimal bound on sup |F_X - F_Z| for univariate Laplace smoothing

    Args:
        c: Bandwidth scale
        sigma2: Variance of X
        M: Density constant; defaults to 24 sup f_X for a Laplace X

    Returns:
        (T_star, bound at T_star)
    """
    if M is None:
        M = laplace_default_m(sigma2)
    _check_positive(c=c, sigma2=sigma2, M=M)
    s2, s4, s6, s8, s10 = (sigma2 ** k for k in (1, 2, 3, 4, 5))
    a = (
        c ** 3 * s6 * M ** 3
        + 108 * c ** 2 * s4 * M
        + 6 * math.sqrt(6) * math.sqrt(c ** 5 * s10 * M ** 4 + 54 * c ** 4 * s8 * M ** 2)
    )
    root = a ** (1.0 / 3.0)
    t_star = (c * s2 * M ** 2 / root + root / (c * s2) + M) / 6
    bound = laplace_bound_at(t_star, c, sigma2, M)
    logger.debug("laplace bound c=%g: T*=%.6g bound=%.6g", c, t_star, bound)
    return t_star, bound


def _tau_batches(x: np.ndarray, z: np.ndarray, batches: int) -> Tuple[float, float]:
    """Mean and standard error of batchwise tau(x) - tau(z)"""
    diffs = np.array(
        [sample_tau(bx) - sample_tau(bz) for bx, bz in zip(np.array_split(x, batches), np.array_split(z, batches))]
    )
    return float(diffs.mean()), float(diffs.std(ddof=1) / math.sqrt(batches))


def correlation_preservation_check(
    spec: EllipticalSpec,
    kernel_gen,
    c: float,
    n_mc: int,
    rng: Optional[RandomStream] = None,
) -> CorrelationReport:
    """
    Monte Carlo check that smoothing with H = c Sigma keeps correlation and Kendall's tau

    Both generators need finite second moments. The covariance inflation is
    compared with 1 + c psi_Y'(0) / psi_X'(0).
    """
    kernel_gen = make_generator(kernel_gen)
    if not (spec.generator.finite_variance and kernel_gen.finite_variance):
        raise UnsupportedOperationError("correlation check needs finite-variance generators")
    if c < 0:
        raise DomainError("c must be nonnegative")
    if n_mc < 20:
        raise ArgumentError("n_mc must be at least 20")

    seed = spawn_seed(make_stream(rng))
    x = sample_elliptical(spec, n_mc, derive_stream(seed, 0))
    if c == 0:
        z = x
    else:
        noise = EllipticalSpec(mu=np.zeros(spec.dim), sigma=c * spec.sigma, generator=kernel_gen)
        z = x + sample_elliptical(noise, n_mc, derive_stream(seed, 1))

    corr_x, corr_z = np.corrcoef(x, rowvar=False), np.corrcoef(z, rowvar=False)
    inflation = float(np.trace(np.cov(z, rowvar=False)) / np.trace(np.cov(x, rowvar=False)))
    expected = 1.0 + c * kernel_gen.deriv_at_zero / spec.generator.deriv_at_zero

    tau_x, tau_z = sample_tau(x[:, :2]), sample_tau(z[:, :2])
    batches = min(TAU_BATCHES, n_mc // 10)
    _, se = _tau_batches(x[:, :2], z[:, :2], batches)
    diff = tau_x - tau_z
    return CorrelationReport(
        c=c,
        n_mc=n_mc,
        corr_x=corr_x.tolist(),
        corr_z=corr_z.tolist(),
        max_corr_gap=float(np.max(np.abs(corr_x - corr_z))),
        inflation_observed=inflation,
        inflation_expected=expected,
        tau_x=tau_x,
        tau_z=tau_z,
        tau_diff=diff,
        tau_diff_se=se,
        tau_within_3se=bool(abs(diff) <= 3 * se) if se > 0 else diff == 0,
    )
