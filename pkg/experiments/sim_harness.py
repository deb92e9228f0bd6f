"""
Simulation harness: raw versus smooth bootstrap estimates of copula functionals
"""
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from config.settings import get_settings
from estimators.copula_functionals import (
    empirical_diagonal,
    estimate_level_boundary,
    hausdorff_distance,
    sample_rho_s,
    sample_tau,
)
from estimators.copula_models import (
    clayton_level_boundary,
    pseudo_observations,
    sample_copula,
    true_diagonal,
    true_rho_s,
    true_tau,
)
from estimators.smooth_bootstrap import SmoothBootstrapSampler
from models.schemas import BootstrapConfig, CopulaSpec, ExperimentConfig, clayton_theta_from_tau
from utils.errors import ArgumentError, EmptyContourError, UndefinedCorrelationError
from utils.rng import derive_stream

logger = logging.getLogger(__name__)

COLUMNS = ["experiment", "family", "param", "stat", "n", "t", "method", "rep", "value"]
GROUP_KEYS = ["experiment", "family", "param", "stat", "n", "t", "method"]
METHODS = ("raw", "smooth")
STATISTICS: Dict[str, Callable[[np.ndarray], float]] = {"tau": sample_tau, "rho_s": sample_rho_s}
TRUTHS = {"tau": true_tau, "rho_s": true_rho_s}


@dataclass
class ExperimentResult:
    """Replicate table, missing-value counts and reference values of one run"""

    table: pd.DataFrame
    missing: pd.DataFrame
    truth: pd.DataFrame = field(default_factory=lambda: pd.DataFrame(columns=["family", "param", "stat", "truth"]))

    def summary(self) -> pd.DataFrame:
        return summarize(self.table, self.missing, self.truth)


def _bootstrap_config(cfg: ExperimentConfig) -> BootstrapConfig:
    return BootstrapConfig(m=cfg.m, bandwidth_rule=cfg.bandwidth, transform="normal_scores", seed=cfg.seed)


def _smooth_sample(data: np.ndarray, cfg: ExperimentConfig, *keys: int) -> np.ndarray:
    """Smooth bootstrap sample of size m from the pseudo-observations of data"""
    boot = _bootstrap_config(cfg)
    sampler = SmoothBootstrapSampler(pseudo_observations(data), boot, derive_stream(cfg.seed, *keys, 1))
    return sampler.sample(cfg.m, derive_stream(cfg.seed, *keys, 2))


def _run_reps(cfg: ExperimentConfig, replicate: Callable[[int], List[dict]]) -> List[dict]:
    """Run replications in parallel and return their rows in rep order"""
    threads = cfg.threads or get_settings().threads
    with ThreadPoolExecutor(max_workers=threads) as pool:
        chunks = list(pool.map(replicate, range(cfg.M_reps)))
    return [row for chunk in chunks for row in chunk]


def _row(cfg: ExperimentConfig, spec: CopulaSpec, stat: str, n: int, t: float, method: str, rep: int, value: float) -> dict:
    return {
        "experiment": cfg.experiment,
        "family": spec.family,
        "param": spec.main_param,
        "stat": stat,
        "n": n,
        "t": t,
        "method": method,
        "rep": rep,
        "value": value,
    }


def _finish(rows: List[dict]) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Split rows into the replicate table and per-cell missing counts"""
    frame = pd.DataFrame(rows, columns=COLUMNS)
    is_missing = frame["value"].isna()
    missing = (
        frame.assign(n_missing=is_missing.astype(int))
        .groupby(GROUP_KEYS, dropna=False, sort=False)["n_missing"]
        .sum()
        .reset_index()
    )
    total = int(is_missing.sum())
    if total:
        logger.warning("%d replications produced no value and are recorded as missing", total)
    table = frame.loc[~is_missing].reset_index(drop=True)
    table["n"] = table["n"].astype(int)
    table["rep"] = table["rep"].astype(int)
    return table, missing


def _levelset_specs(cfg: ExperimentConfig) -> List[CopulaSpec]:
    specs = []
    for tau in cfg.tau_targets or []:
        theta = clayton_theta_from_tau(tau)
        specs.append(CopulaSpec(family="independence") if theta == 0 else CopulaSpec(family="clayton", theta=theta))
    specs.extend(cfg.copula_specs())
    for spec in specs:
        if spec.family not in ("clayton", "independence") or spec.dim != 2:
            raise ArgumentError("the level-set experiment needs a bivariate clayton truth")
    return specs


def run_levelset_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """
    Hausdorff distance between true and estimated level-set boundaries

    For every truth, sample size and replication one sample is drawn; its raw
    empirical copula and a smooth bootstrap sample of size m are contoured at
    every level in t_list.
    """
    rows: List[dict] = []
    for s_idx, spec in enumerate(_levelset_specs(cfg)):
        theta = spec.theta if spec.family == "clayton" else 0.0
        truths = {t: clayton_level_boundary(theta, t) for t in cfg.t_list}
        for n in cfg.n_list:
            logger.info("levelset %s n=%d: %d replications", spec.label, n, cfg.M_reps)

            def replicate(rep: int, spec=spec, n=n, s_idx=s_idx, truths=truths) -> List[dict]:
                data = sample_copula(spec, n, derive_stream(cfg.seed, s_idx, n, rep, 0))
                samples = {"raw": data, "smooth": _smooth_sample(data, cfg, s_idx, n, rep)}
                out = []
                for t in cfg.t_list:
                    for method in METHODS:
                        try:
                            boundary = estimate_level_boundary(samples[method], t, cfg.grid_n)
                            value = hausdorff_distance(truths[t], boundary)
                        except EmptyContourError:
                            value = np.nan
                        out.append(_row(cfg, spec, "hausdorff", n, t, method, rep, value))
                return out

            rows.extend(_run_reps(cfg, replicate))
    table, missing = _finish(rows)
    return ExperimentResult(table=table, missing=missing, truth=_zero_truth(table))


def run_depmeasure_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Replicate estimates of Kendall's tau and Spearman's rho from raw and smooth samples"""
    rows: List[dict] = []
    truth_rows = []
    for s_idx, spec in enumerate(cfg.copula_specs()):
        if spec.dim != 2:
            raise ArgumentError("dependence measures are bivariate")
        for stat in cfg.stats:
            truth_rows.append({"family": spec.family, "param": spec.main_param, "stat": stat, "truth": TRUTHS[stat](spec)})
        for n in cfg.n_list:
            logger.info("depmeasure %s n=%d: %d replications", spec.label, n, cfg.M_reps)

            def replicate(rep: int, spec=spec, n=n, s_idx=s_idx) -> List[dict]:
                data = sample_copula(spec, n, derive_stream(cfg.seed, s_idx, n, rep, 0))
                samples = {"raw": data, "smooth": _smooth_sample(data, cfg, s_idx, n, rep)}
                out = []
                for stat in cfg.stats:
                    for method in METHODS:
                        try:
                            value = STATISTICS[stat](samples[method])
                        except UndefinedCorrelationError:
                            value = np.nan
                        out.append(_row(cfg, spec, stat, n, np.nan, method, rep, value))
                return out

            rows.extend(_run_reps(cfg, replicate))
    table, missing = _finish(rows)
    return ExperimentResult(table=table, missing=missing, truth=pd.DataFrame(truth_rows))


def diagonal_grid(points: int) -> np.ndarray:
    """Interior grid of the unit interval"""
    return np.linspace(0.0, 1.0, points + 2)[1:-1]


def run_diagonal_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Sup distance between the true copula diagonal and its raw and smooth estimates"""
    rows: List[dict] = []
    u_grid = diagonal_grid(cfg.u_points)
    for s_idx, spec in enumerate(cfg.copula_specs()):
        delta = true_diagonal(spec, u_grid)
        for n in cfg.n_list:
            logger.info("diagonal %s d=%d n=%d: %d replications", spec.label, spec.dim, n, cfg.M_reps)

            def replicate(rep: int, spec=spec, n=n, s_idx=s_idx, delta=delta) -> List[dict]:
                data = sample_copula(spec, n, derive_stream(cfg.seed, s_idx, n, rep, 0))
                samples = {"raw": data, "smooth": _smooth_sample(data, cfg, s_idx, n, rep)}
                out = []
                for method in METHODS:
                    curve = empirical_diagonal(samples[method], u_grid)
                    value = float(np.max(np.abs(np.asarray(curve.values) - delta)))
                    out.append(_row(cfg, spec, "sup_gap", n, np.nan, method, rep, value))
                return out

            rows.extend(_run_reps(cfg, replicate))
    table, missing = _finish(rows)
    return ExperimentResult(table=table, missing=missing, truth=_zero_truth(table))


def _zero_truth(table: pd.DataFrame) -> pd.DataFrame:
    """Distances are compared against zero"""
    keys = table[["family", "param", "stat"]].drop_duplicates()
    return keys.assign(truth=0.0).reset_index(drop=True)


def summarize(table: pd.DataFrame, missing: Optional[pd.DataFrame] = None, truth: Optional[pd.DataFrame] = None) -> pd.DataFrame:
    """
    Per-cell summary: count, missing, median, quartiles, mean, bias and MSE

    Args:
        table: Long-form replicate table
        missing: Missing counts per cell
        truth: Reference values per (family, param, stat)
    """
    frame = table
    if truth is not None and not truth.empty:
        frame = frame.merge(truth, on=["family", "param", "stat"], how="left")
    else:
        frame = frame.assign(truth=np.nan)
    frame = frame.assign(error=frame["value"] - frame["truth"])
    grouped = frame.groupby(GROUP_KEYS, dropna=False, sort=False)
    summary = grouped.agg(
        count=("value", "size"),
        median=("value", "median"),
        q25=("value", lambda v: v.quantile(0.25)),
        q75=("value", lambda v: v.quantile(0.75)),
        mean=("value", "mean"),
        bias=("error", "mean"),
        mse=("error", lambda e: float(np.mean(np.square(e)))),
    ).reset_index()
    if missing is not None and not missing.empty:
        summary = summary.merge(missing, on=GROUP_KEYS, how="outer")
        summary["count"] = summary["count"].fillna(0).astype(int)
    else:
        summary["n_missing"] = 0
    return summary


RUNNERS: Dict[str, Callable[[ExperimentConfig], ExperimentResult]] = {
    "levelset_hausdorff": run_levelset_experiment,
    "depmeasure_mse": run_depmeasure_experiment,
    "diagonal": run_diagonal_experiment,
}


def load_config(path) -> ExperimentConfig:
    """Read a flat TOML experiment file"""
    with open(path, "rb") as handle:
        data = tomllib.load(handle)
    return ExperimentConfig(**data)


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    logger.info("starting %s experiment (seed=%d)", cfg.experiment, cfg.seed)
    result = RUNNERS[cfg.experiment](cfg)
    logger.info("finished %s experiment: %d rows", cfg.experiment, len(result.table))
    return result


def write_results(result: ExperimentResult, out) -> Tuple[Path, Path]:
    """Write the replicate table to `out` and the summary next to it"""
    out = Path(out)
    summary_path = out.with_name(f"{out.stem}_summary{out.suffix or '.csv'}")
    result.table.to_csv(out, index=False)
    result.summary().to_csv(summary_path, index=False)
    return out, summary_path
