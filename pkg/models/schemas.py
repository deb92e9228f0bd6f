"""
Pydantic data models for specifications, configurations and results
"""
import math
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

GENERATOR_FAMILIES = ("gauss", "laplace", "cauchy", "student_t", "stable")
COPULA_FAMILIES = ("clayton", "gumbel", "joe", "gaussian", "student_t", "independence")

_COPULA_ALIASES = {"t": "student_t", "indep": "independence", "normal": "gaussian"}


class GeneratorSpec(BaseModel):
    """Named characteristic generator, e.g. "student_t:3" or "stable:1.5" """

    family: Literal["gauss", "laplace", "cauchy", "student_t", "stable"]
    param: Optional[float] = None

    @model_validator(mode="after")
    def check_param(self):
        if self.family == "student_t":
            if self.param is None or self.param <= 0:
                raise ValueError("student_t requires nu > 0")
        elif self.family == "stable":
            if self.param is None or not 0 < self.param <= 2:
                raise ValueError("stable requires alpha in (0, 2]")
        elif self.param is not None:
            raise ValueError(f"{self.family} takes no parameter")
        return self

    @classmethod
    def parse(cls, text: str) -> "GeneratorSpec":
        name, _, arg = text.strip().partition(":")
        name = name.strip().lower()
        if name == "t":
            name = "student_t"
        return cls(family=name, param=float(arg) if arg else None)

    @property
    def label(self) -> str:
        return self.family if self.param is None else f"{self.family}:{self.param:g}"


class CopulaSpec(BaseModel):
    """Parametric copula family with its parameters"""

    family: Literal["clayton", "gumbel", "joe", "gaussian", "student_t", "independence"]
    theta: Optional[float] = None
    rho: Optional[float] = None
    nu: Optional[float] = None
    dim: int = Field(2, ge=2)

    @model_validator(mode="after")
    def check_params(self):
        family = self.family
        if family == "clayton":
            if self.theta is None or self.theta == 0:
                raise ValueError("clayton requires theta != 0")
            if self.theta < 0 and (self.dim != 2 or self.theta <= -1):
                raise ValueError("negative clayton theta requires dim=2 and theta > -1")
        elif family in ("gumbel", "joe"):
            if self.theta is None or self.theta < 1:
                raise ValueError(f"{family} requires theta >= 1")
        elif family in ("gaussian", "student_t"):
            if self.rho is None or not -1 < self.rho < 1:
                raise ValueError("elliptical copulas require |rho| < 1")
            if family == "student_t" and (self.nu is None or self.nu <= 0):
                raise ValueError("student_t copula requires nu > 0")
        return self

    @classmethod
    def parse(cls, text: str, dim: int = 2) -> "CopulaSpec":
        """Parse "clayton:2", "gumbel:1.5", "joe:2", "gaussian:0.5", "t:0.5,4" or "indep" """
        name, _, arg = text.strip().partition(":")
        name = _COPULA_ALIASES.get(name.strip().lower(), name.strip().lower())
        values = [float(v) for v in arg.split(",") if v.strip()] if arg else []
        if name in ("clayton", "gumbel", "joe"):
            return cls(family=name, theta=values[0] if values else None, dim=dim)
        if name == "gaussian":
            return cls(family=name, rho=values[0] if values else None, dim=dim)
        if name == "student_t":
            if len(values) != 2:
                raise ValueError("t copula expects 't:rho,nu'")
            return cls(family=name, rho=values[0], nu=values[1], dim=dim)
        return cls(family=name, dim=dim)

    @property
    def is_archimedean(self) -> bool:
        return self.family in ("clayton", "gumbel", "joe")

    @property
    def is_elliptical(self) -> bool:
        return self.family in ("gaussian", "student_t")

    @property
    def label(self) -> str:
        if self.is_archimedean:
            return f"{self.family}:{self.theta:g}"
        if self.family == "gaussian":
            return f"gaussian:{self.rho:g}"
        if self.family == "student_t":
            return f"t:{self.rho:g},{self.nu:g}"
        return "indep"

    @property
    def main_param(self) -> float:
        if self.is_archimedean:
            return float(self.theta)
        if self.is_elliptical:
            return float(self.rho)
        return 0.0


class BootstrapConfig(BaseModel):
    """Settings of a smooth bootstrap run"""

    m: int = Field(..., ge=1)
    B: int = Field(1, ge=1)
    kernel: Literal["gauss", "laplace"] = "gauss"
    bandwidth_rule: Literal["silverman", "cv", "fixed"] = "silverman"
    H: Optional[List[List[float]]] = None
    transform: Literal["none", "normal_scores"] = "normal_scores"
    seed: int = 0

    # Cross-validation options, used when bandwidth_rule == "cv"
    h_grid: Optional[List[float]] = None
    gh_order: Optional[int] = None
    cv_bootstrap_reps: int = Field(0, ge=0)

    @model_validator(mode="after")
    def check_fixed(self):
        if self.bandwidth_rule == "fixed" and self.H is None:
            raise ValueError("bandwidth_rule 'fixed' requires H")
        return self


class CVResult(BaseModel):
    """Outcome of a grid search over h with H = h * Sigma_hat"""

    h_grid: List[float]
    cv_values: List[float]
    h_star: float
    H_star: List[List[float]]
    sigma_hat: List[List[float]]
    bootstrap_reps: int = 0
    boundary_minimizer: bool = False

    def to_output(self) -> dict:
        """JSON layout with H_star flattened row-major"""
        return {
            "h_grid": self.h_grid,
            "cv_values": self.cv_values,
            "h_star": self.h_star,
            "H_star": [x for row in self.H_star for x in row],
            "sigma_hat": self.sigma_hat,
            "bootstrap_reps": self.bootstrap_reps,
            "boundary_minimizer": self.boundary_minimizer,
        }


class DistortionReport(BaseModel):
    """Relative-error curve of a smoothing generator"""

    generator: str
    c: float
    u_grid: List[float]
    rel_error: List[float]
    abs_bound: Optional[List[float]] = None
    rate_exponent: Optional[float] = None

    @field_validator("rel_error")
    @classmethod
    def check_range(cls, values):
        if any(v < -1e-12 or v > 2 + 1e-12 for v in values):
            raise ValueError("relative error outside [0, 2]")
        return values


class CorrelationReport(BaseModel):
    """Monte Carlo check that kernel smoothing keeps elliptical correlation"""

    c: float
    n_mc: int
    corr_x: List[List[float]]
    corr_z: List[List[float]]
    max_corr_gap: float
    inflation_observed: float
    inflation_expected: float
    tau_x: float
    tau_z: float
    tau_diff: float
    tau_diff_se: float
    tau_within_3se: bool


class DiagonalCurve(BaseModel):
    """Copula diagonal values on a grid"""

    u_grid: List[float]
    values: List[float]

    @model_validator(mode="after")
    def check_curve(self):
        if len(self.u_grid) != len(self.values):
            raise ValueError("u_grid and values differ in length")
        values = np.asarray(self.values)
        if np.any(np.diff(values) < -1e-12):
            raise ValueError("diagonal values must be nondecreasing")
        if np.any(values < -1e-12) or np.any(values > 1 + 1e-12):
            raise ValueError("diagonal values must lie in [0, 1]")
        return self


class PolygonChain(BaseModel):
    """Ordered vertices in the unit square"""

    vertices: List[Tuple[float, float]]
    closed: bool = False

    @field_validator("vertices")
    @classmethod
    def check_vertices(cls, vertices):
        if len(vertices) < 2:
            raise ValueError("a polygon chain needs at least 2 vertices")
        tol = 1e-12
        if any(not (-tol <= x <= 1 + tol and -tol <= y <= 1 + tol) for x, y in vertices):
            raise ValueError("vertices must lie in [0, 1]^2")
        return vertices

    @classmethod
    def from_array(cls, vertices) -> "PolygonChain":
        vertices = np.clip(np.asarray(vertices, dtype=float), 0.0, 1.0)
        return cls(vertices=[(float(x), float(y)) for x, y in vertices])

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)


class ExperimentConfig(BaseModel):
    """Flat configuration of one simulation experiment"""

    experiment: Literal["levelset_hausdorff", "depmeasure_mse", "diagonal"]
    copula: Optional[str] = None
    copulas: Optional[List[str]] = None
    tau_targets: Optional[List[float]] = None
    dim: int = Field(2, ge=2)
    n_list: List[int]
    m: int = Field(2000, ge=1)
    t_list: Optional[List[float]] = None
    stats: List[Literal["tau", "rho_s"]] = ["tau", "rho_s"]
    M_reps: int = Field(200, ge=1)
    seed: int = 0
    bandwidth: Literal["silverman", "cv"] = "silverman"
    grid_n: Optional[int] = None
    u_points: int = Field(99, ge=2)
    threads: Optional[int] = None

    @field_validator("n_list")
    @classmethod
    def check_n(cls, n_list):
        if not n_list or any(n < 5 for n in n_list):
            raise ValueError("n_list must be nonempty with every n >= 5")
        return n_list

    @field_validator("t_list")
    @classmethod
    def check_levels(cls, t_list):
        if t_list is not None and any(not 0 < t < 1 for t in t_list):
            raise ValueError("levels must lie in (0, 1)")
        return t_list

    @model_validator(mode="after")
    def check_family(self):
        if self.experiment == "levelset_hausdorff":
            if not self.tau_targets and not self.copula:
                raise ValueError("levelset experiment needs tau_targets or a clayton copula")
            if not self.t_list:
                raise ValueError("levelset experiment needs t_list")
        elif not (self.copula or self.copulas):
            raise ValueError(f"{self.experiment} needs copula or copulas")
        return self

    def copula_specs(self) -> List[CopulaSpec]:
        names = list(self.copulas or []) + ([self.copula] if self.copula else [])
        return [CopulaSpec.parse(name, dim=self.dim) for name in names]


def clayton_theta_from_tau(tau: float) -> float:
    """Clayton parameter with Kendall's tau equal to `tau`; 0 means independence"""
    if not -1 < tau < 1:
        raise ValueError("tau must lie in (-1, 1)")
    if math.isclose(tau, 0.0, abs_tol=1e-15):
        return 0.0
    return 2 * tau / (1 - tau)
