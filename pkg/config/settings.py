"""
Runtime settings loaded from the environment and an optional .env file
"""
from functools import lru_cache

import numpy as np
from dotenv import load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load environment variables from .env file
load_dotenv()


class Settings(BaseSettings):
    """Numerical defaults; every field can be overridden with SMOOTHBOOT_<NAME>"""

    model_config = SettingsConfigDict(env_prefix="SMOOTHBOOT_", env_file=".env", extra="ignore")

    log_level: str = "INFO"

    # Quadrature and contouring
    gh_order: int = Field(25, ge=1)
    contour_grid: int = Field(200, ge=2)
    truth_points: int = Field(2000, ge=2)

    # Quantile inversion
    quantile_nodes: int = Field(512, ge=8)
    quantile_xtol: float = 1e-13
    quantile_ptol: float = 1e-10
    bracket_doublings: int = 60

    # Generator evaluation
    generator_cache: bool = True
    cache_granularity: float = 1e-12
    student_t_quad_tol: float = 1e-9
    laplace_radial_table: int = Field(4096, ge=64)

    # Cross-validation bandwidth grid
    h_grid_start: float = 0.01
    h_grid_stop: float = 2.5
    h_grid_step: float = 0.01

    # Execution
    threads: int = Field(1, ge=1)
    default_seed: int = 20240101

    # HTTP service
    api_host: str = "0.0.0.0"
    api_port: int = 8000

    def h_grid(self) -> np.ndarray:
        """Default bandwidth grid, endpoints included"""
        count = int(round((self.h_grid_stop - self.h_grid_start) / self.h_grid_step)) + 1
        return np.round(self.h_grid_start + self.h_grid_step * np.arange(count), 12)


@lru_cache
def get_settings() -> Settings:
    return Settings()
