"""
FastAPI backend for the smooth copula bootstrap
Provides REST API endpoints for bandwidth selection, smooth bootstrap sampling,
dependence measures, distortion curves and parametric copulas
"""
import sys
import os

# Add the parent directory to Python path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import logging
from datetime import datetime
from typing import Dict, List, Literal, Optional

import numpy as np
import uvicorn
from fastapi import APIRouter, FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field, ValidationError

from config.settings import get_settings
from estimators.bandwidth_selection import select_bandwidth_cv, silverman_h
from estimators.copula_functionals import sample_rho_s, sample_tau
from estimators.copula_models import sample_copula, true_rho_s, true_tau
from estimators.distortion_analysis import relative_error_curve
from estimators.smooth_bootstrap import smooth_bootstrap_copula_sample
from models.schemas import BootstrapConfig, CopulaSpec, CVResult, DistortionReport
from utils.errors import SmoothBootError, UnsupportedOperationError
from utils.logging_config import setup_logging
from utils.quadrature import gauss_hermite_rule
from utils.rng import make_stream

logger = logging.getLogger(__name__)

API_VERSION = "0.1.0"

app = FastAPI(
    title="Smooth Copula Bootstrap API",
    description="Kernel-smoothed copula resampling, bandwidth cross-validation and dependence diagnostics",
    version=API_VERSION,
    docs_url="/docs",
    redoc_url="/redoc",
)

# CORS middleware for browser clients
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


# Pydantic models for API requests/responses
class SilvermanRequest(BaseModel):
    d: int = Field(..., ge=1)
    n: int = Field(..., ge=2)


class CVRequest(BaseModel):
    data: List[List[float]]
    h_grid: Optional[List[float]] = None
    gh_order: Optional[int] = Field(None, ge=1)
    bootstrap_reps: int = Field(0, ge=0)
    seed: int = 0


class BootstrapRequest(BaseModel):
    data: List[List[float]]
    m: int = Field(..., ge=1)
    bandwidth: Literal["silverman", "cv"] = "silverman"
    kernel: Literal["gauss", "laplace"] = "gauss"
    seed: int = 0


class DepMeasureRequest(BaseModel):
    data: List[List[float]]
    stat: Literal["tau", "rho_s"] = "tau"


class DistortionRequest(BaseModel):
    gy: str
    c: float = Field(..., gt=0)
    u_grid: List[float]


class CopulaRequest(BaseModel):
    copula: str
    dim: int = Field(2, ge=2)


class CopulaSampleRequest(CopulaRequest):
    n: int = Field(..., ge=1, le=1_000_000)
    seed: int = 0


class HealthCheck(BaseModel):
    status: str
    timestamp: datetime
    services: Dict[str, str]


@app.on_event("startup")
async def startup_event():
    """Configure logging and warm the default quadrature rule"""
    setup_logging()
    settings = get_settings()
    gauss_hermite_rule(settings.gh_order, 2)
    logger.info("smooth copula bootstrap API ready (gh_order=%d)", settings.gh_order)


def _fail(e: Exception) -> HTTPException:
    if isinstance(e, UnsupportedOperationError):
        return HTTPException(status_code=422, detail=str(e))
    if isinstance(e, (SmoothBootError, ValidationError, ValueError)):
        return HTTPException(status_code=400, detail=str(e))
    logger.exception("unexpected error")
    return HTTPException(status_code=500, detail=f"Internal error: {e}")


def _copula(request: CopulaRequest) -> CopulaSpec:
    try:
        return CopulaSpec.parse(request.copula, dim=request.dim)
    except (ValidationError, ValueError) as e:
        raise HTTPException(status_code=400, detail=f"Invalid copula {request.copula!r}: {e}")


# Create an API router
router = APIRouter()


@router.get("/", response_model=Dict[str, str])
async def root():
    """Root endpoint"""
    return {"message": "Smooth Copula Bootstrap API", "version": API_VERSION, "status": "running"}


@router.get("/health", response_model=HealthCheck)
async def health_check():
    """Health check endpoint"""
    services = {
        "estimators": "ready",
        "quadrature": "ready" if gauss_hermite_rule.cache_info().currsize else "cold",
    }
    return HealthCheck(status="healthy", timestamp=datetime.now(), services=services)


@router.post("/bandwidth/silverman", response_model=Dict[str, float])
async def bandwidth_silverman(request: SilvermanRequest):
    return {"h": silverman_h(request.d, request.n)}


@router.post("/bandwidth/cv", response_model=CVResult)
def bandwidth_cv(request: CVRequest):
    """
    Cross-validated bandwidth H = h * Sigma_hat
    """
    try:
        data = np.asarray(request.data, dtype=float)
        q = gauss_hermite_rule(request.gh_order or get_settings().gh_order, data.shape[1])
        return select_bandwidth_cv(
            data,
            h_grid=request.h_grid,
            q=q,
            bootstrap_reps=request.bootstrap_reps,
            rng=make_stream(request.seed),
        )
    except Exception as e:
        raise _fail(e)


@router.post("/bootstrap", response_model=Dict[str, List[List[float]]])
def bootstrap(request: BootstrapRequest):
    """
    Smooth bootstrap sample of the copula of the submitted data
    """
    try:
        cfg = BootstrapConfig(m=request.m, kernel=request.kernel, bandwidth_rule=request.bandwidth, seed=request.seed)
        samples = smooth_bootstrap_copula_sample(request.data, cfg)
        return {"samples": samples.tolist()}
    except Exception as e:
        raise _fail(e)


@router.post("/depmeasure", response_model=Dict[str, float])
def depmeasure(request: DepMeasureRequest):
    try:
        statistic = sample_tau if request.stat == "tau" else sample_rho_s
        return {"value": statistic(request.data)}
    except Exception as e:
        raise _fail(e)


@router.post("/distortion", response_model=DistortionReport)
def distortion(request: DistortionRequest):
    try:
        return relative_error_curve(request.gy, request.c, request.u_grid)
    except Exception as e:
        raise _fail(e)


@router.post("/copula/truth", response_model=Dict[str, float])
def copula_truth(request: CopulaRequest):
    """True Kendall's tau and Spearman's rho of a parametric copula"""
    spec = _copula(request)
    try:
        return {"tau": true_tau(spec), "rho_s": true_rho_s(spec)}
    except Exception as e:
        raise _fail(e)


@router.post("/copula/sample", response_model=Dict[str, List[List[float]]])
def copula_sample(request: CopulaSampleRequest):
    spec = _copula(request)
    try:
        return {"samples": sample_copula(spec, request.n, make_stream(request.seed)).tolist()}
    except Exception as e:
        raise _fail(e)


# Include the router
app.include_router(router)
app.include_router(router, prefix="/api")

if __name__ == "__main__":
    settings = get_settings()
    uvicorn.run("main:app", host=settings.api_host, port=settings.api_port, reload=True)
