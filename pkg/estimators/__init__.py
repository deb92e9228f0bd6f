"""
Estimators for the smooth copula bootstrap
Kernel smoothing, bandwidth selection, resampling and dependence functionals
"""

from .copula_functionals import (
    empirical_diagonal,
    estimate_level_boundary,
    hausdorff_distance,
    sample_rho_s,
    sample_tau,
)
from .smooth_bootstrap import (
    SmoothBootstrapSampler,
    functional_distribution,
    plain_bootstrap,
    smooth_bootstrap_copula_sample,
)

__all__ = [
    "SmoothBootstrapSampler",
    "empirical_diagonal",
    "estimate_level_boundary",
    "functional_distribution",
    "hausdorff_distance",
    "plain_bootstrap",
    "sample_rho_s",
    "sample_tau",
    "smooth_bootstrap_copula_sample",
]
