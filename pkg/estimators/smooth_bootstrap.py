"""
Smooth bootstrap sampling from the conditional copula

Each draw picks a data row uniformly, perturbs it with kernel noise scaled by
H^1/2 and maps every coordinate through its own mixture margin, so the output
margins are exactly uniform.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional

import numpy as np
from scipy import special

from config.settings import get_settings
from estimators.bandwidth_selection import sample_covariance, select_bandwidth_cv, silverman_h
from estimators.copula_functionals import sample_rho_s, sample_tau
from estimators.copula_models import pseudo_observations
from estimators.kernel_smoothing import SmoothedModel, check_bandwidth, fit_model, marginal_cdf
from models.schemas import BootstrapConfig
from utils.errors import ArgumentError, DomainError
from utils.quadrature import gauss_hermite_rule
from utils.rng import RandomStream, derive_stream, make_stream, open_uniforms, spawn_seed

logger = logging.getLogger(__name__)

FUNCTIONALS = {"tau": sample_tau, "rho_s": sample_rho_s}

_UPPER = 1.0 - 2.0 ** -53


def normal_scores(data_u) -> np.ndarray:
    """Standard normal quantiles of entries in (0, 1)"""
    data_u = np.asarray(data_u, dtype=float)
    if np.any(data_u <= 0) or np.any(data_u >= 1):
        raise DomainError("normal scores need entries strictly inside (0, 1)")
    return special.ndtri(data_u)


def prepare_data(data, transform: str) -> np.ndarray:
    """
    Map input rows to the space where the kernel estimate is built

    Raw data (entries outside [0, 1]) are rank-transformed with denominator n + 1
    before normal scores; entries exactly at 0 or 1 are rejected.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    if transform == "none":
        return data
    if np.any(data < 0) or np.any(data > 1):
        data = pseudo_observations(data)
    return normal_scores(data)


def dispersion_matrix(x: np.ndarray) -> np.ndarray:
    """
    Sample covariance, or its diagonal when the sample cannot support a full matrix

    With n <= d the covariance is singular; the per-coordinate variances keep the
    bandwidth positive definite.
    """
    sigma = sample_covariance(x)
    eig = np.linalg.eigvalsh(sigma)
    if eig.min() > 1e-10 * max(eig.max(), 1e-300):
        return sigma
    variances = np.diag(sigma)
    if np.any(variances <= 0):
        raise ArgumentError("a coordinate of the sample is constant")
    logger.warning("sample covariance is singular (n=%d, d=%d); using its diagonal", *x.shape)
    return np.diag(variances)


def resolve_bandwidth(x: np.ndarray, cfg: BootstrapConfig, rng: Optional[RandomStream] = None) -> np.ndarray:
    """Bandwidth matrix of a run: Silverman, cross-validated or fixed"""
    n, d = x.shape
    if cfg.bandwidth_rule == "fixed":
        return check_bandwidth(cfg.H, d)
    if cfg.bandwidth_rule == "silverman":
        return silverman_h(d, n) * dispersion_matrix(x)
    q = gauss_hermite_rule(cfg.gh_order or get_settings().gh_order, d)
    result = select_bandwidth_cv(
        x,
        h_grid=cfg.h_grid,
        q=q,
        kernel=cfg.kernel,
        bootstrap_reps=cfg.cv_bootstrap_reps,
        rng=make_stream(rng if rng is not None else cfg.seed),
    )
    return np.asarray(result.H_star)


class SmoothBootstrapSampler:
    """Fitted smooth bootstrap for one data set"""

    def __init__(self, data_u, cfg: BootstrapConfig, rng: Optional[RandomStream] = None):
        """
        Args:
            data_u: n x d sample, usually pseudo-observations in (0, 1)
            cfg: Bootstrap configuration
            rng: Stream used only when the bandwidth rule needs randomness
        """
        data_u = np.asarray(data_u, dtype=float)
        if data_u.ndim == 1:
            data_u = data_u[:, None]
        if data_u.shape[0] < 2:
            raise ArgumentError("smooth bootstrap needs n >= 2")
        self.cfg = cfg
        self.x = prepare_data(data_u, cfg.transform)
        self.H = resolve_bandwidth(self.x, cfg, rng)
        self.model: SmoothedModel = fit_model(self.x, self.H, cfg.kernel)
        logger.debug("smooth bootstrap fitted: n=%d d=%d rule=%s", self.n, self.dim, cfg.bandwidth_rule)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @property
    def block_width(self) -> int:
        """Uniform columns per draw: index, then the kernel noise"""
        return 1 + self.dim + self.model.kernel.extra_uniforms

    def latent_from_uniforms(self, block: np.ndarray) -> np.ndarray:
        """z = x_i + H^1/2 y from a block of open uniforms"""
        idx = np.minimum((block[:, 0] * self.n).astype(int), self.n - 1)
        noise = self.model.kernel.noise_from_uniforms(block[:, 1:], self.dim)
        return self.x[idx] + noise @ self.model.H_sqrt.T

    def draw_latent(self, m: int, rng: RandomStream) -> np.ndarray:
        return self.latent_from_uniforms(open_uniforms(rng, (m, self.block_width)))

    def to_copula_scale(self, z: np.ndarray) -> np.ndarray:
        out = np.column_stack([marginal_cdf(self.model, j, z[:, j]) for j in range(self.dim)])
        return np.clip(out, 2.0 ** -54, _UPPER)

    def sample(self, m: Optional[int] = None, rng: Optional[RandomStream] = None) -> np.ndarray:
        """m rows from the smoothed copula"""
        m = m or self.cfg.m
        rng = make_stream(rng if rng is not None else self.cfg.seed)
        return self.to_copula_scale(self.draw_latent(m, rng))


def smooth_bootstrap_copula_sample(data_u, cfg: BootstrapConfig, rng: Optional[RandomStream] = None) -> np.ndarray:
    """
    Smooth bootstrap sample of size cfg.m from the conditional copula

    Args:
        data_u: n x d sample in (0, 1)
        cfg: Bootstrap configuration
        rng: Random stream; defaults to one seeded with cfg.seed

    Returns:
        m x d array in (0, 1)
    """
    rng = make_stream(rng if rng is not None else cfg.seed)
    sampler = SmoothBootstrapSampler(data_u, cfg, rng)
    return sampler.sample(cfg.m, rng)


def plain_bootstrap(data, m: int, rng: Optional[RandomStream] = None) -> np.ndarray:
    """m rows drawn uniformly with replacement"""
    data = np.asarray(data)
    if data.shape[0] < 1:
        raise ArgumentError("plain bootstrap needs n >= 1")
    rng = make_stream(rng)
    return data[rng.integers(0, data.shape[0], size=m)]


def functional_distribution(
    data_u,
    cfg: BootstrapConfig,
    functional: str,
    rng: Optional[RandomStream] = None,
    threads: Optional[int] = None,
) -> List[float]:
    """
    B replicate values of a dependence functional over smooth bootstrap samples

    Replicate b uses the stream derived from (seed, b), so the values do not
    depend on scheduling.
    """
    if functional not in FUNCTIONALS:
        raise ArgumentError(f"unsupported functional {functional!r}; expected one of {sorted(FUNCTIONALS)}")
    statistic = FUNCTIONALS[functional]
    base_seed = cfg.seed if rng is None else spawn_seed(rng)
    sampler = SmoothBootstrapSampler(data_u, cfg, derive_stream(base_seed, 0))

    def replicate(b: int) -> float:
        return statistic(sampler.sample(cfg.m, derive_stream(base_seed, 1, b)))

    workers = threads or get_settings().threads
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(replicate, range(cfg.B)))
