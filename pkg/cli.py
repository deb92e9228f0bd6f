#!/usr/bin/env python3
"""
Command-line entry point for the smooth copula bootstrap
"""
import json
import logging
import sys
from argparse import ArgumentParser, ArgumentTypeError, Namespace
from typing import List, Optional

import numpy as np
from dotenv import load_dotenv
from pydantic import ValidationError

from config.settings import get_settings
from estimators.bandwidth_selection import sample_covariance, select_bandwidth_cv, silverman_h
from estimators.copula_functionals import estimate_level_boundary, hausdorff_distance, sample_rho_s, sample_tau
from estimators.copula_models import clayton_level_boundary, sample_copula, true_rho_s, true_tau
from estimators.distortion_analysis import distortion_frame, fit_rate_exponent
from estimators.elliptical_core import make_generator
from estimators.smooth_bootstrap import SmoothBootstrapSampler, prepare_data
from experiments.sim_harness import load_config, run_experiment, write_results
from models.schemas import BootstrapConfig, CopulaSpec
from utils.data_io import read_sample_csv, write_polygon_csv, write_sample_csv
from utils.errors import SmoothBootError, UnsupportedOperationError
from utils.logging_config import setup_logging
from utils.quadrature import gauss_hermite_rule
from utils.rng import derive_stream, make_stream

load_dotenv()

logger = logging.getLogger(__name__)


def parse_grid(text: str) -> List[float]:
    """Parse "a:b:step" (inclusive of b) or a comma-separated list"""
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            return np.round(start + step * np.arange(count), 12).tolist()
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ArgumentTypeError(f"invalid grid {text!r}; expected a:b:step") from None


def _emit_json(payload: dict, out: Optional[str]) -> None:
    text = json.dumps(payload, indent=2)
    if out:
        with open(out, "w") as handle:
            handle.write(text + "\n")
    else:
        print(text)


def cmd_bandwidth(args: Namespace) -> None:
    data = prepare_data(read_sample_csv(args.data), args.transform)
    n, d = data.shape
    if args.method == "silverman":
        h = silverman_h(d, n)
        sigma = sample_covariance(data)
        payload = {"h_star": h, "H_star": (h * sigma).ravel().tolist(), "sigma_hat": sigma.tolist()}
    else:
        result = select_bandwidth_cv(
            data,
            h_grid=args.grid,
            q=gauss_hermite_rule(args.gh_order, d),
            bootstrap_reps=args.bootstrap_reps,
            rng=make_stream(args.seed),
        )
        payload = result.to_output()
    _emit_json(payload, args.out)


def cmd_bootstrap(args: Namespace) -> None:
    cfg = BootstrapConfig(
        m=args.m,
        B=args.B,
        kernel=args.kernel,
        bandwidth_rule=args.bandwidth,
        transform=args.transform,
        seed=args.seed,
    )
    data = read_sample_csv(args.input)
    sampler = SmoothBootstrapSampler(data, cfg, derive_stream(cfg.seed, 0))
    samples = [sampler.sample(cfg.m, derive_stream(cfg.seed, 1, b)) for b in range(cfg.B)]
    write_sample_csv(args.out, np.vstack(samples))
    logger.info("wrote %d x %d smooth bootstrap rows to %s", cfg.B * cfg.m, sampler.dim, args.out)


def cmd_levelset(args: Namespace) -> None:
    data = read_sample_csv(args.input)
    chain = estimate_level_boundary(data, args.t, args.grid)
    if args.out:
        write_polygon_csv(args.out, chain.array)
    payload = {"t": args.t, "vertices": len(chain.vertices)}
    if args.truth:
        spec = CopulaSpec.parse(args.truth)
        if spec.family == "clayton":
            truth = clayton_level_boundary(spec.theta, args.t)
        elif spec.family == "independence":
            truth = clayton_level_boundary(0.0, args.t)
        else:
            raise UnsupportedOperationError("true level sets are available for clayton and independence")
        payload["hausdorff"] = hausdorff_distance(truth, chain)
    _emit_json(payload, None)


def cmd_depmeasure(args: Namespace) -> None:
    data = read_sample_csv(args.input)
    value = sample_tau(data) if args.stat == "tau" else sample_rho_s(data)
    _emit_json({"stat": args.stat, "value": value}, None)


def cmd_distortion(args: Namespace) -> None:
    frame = distortion_frame(args.gx, args.gy, args.c, args.u_grid)
    frame.to_csv(args.out, index=False)
    rate = fit_rate_exponent(make_generator(args.gy))
    logger.info("wrote %d rows to %s; kernel rate exponent %.4f", len(frame), args.out, rate)


def cmd_simulate(args: Namespace) -> None:
    cfg = load_config(args.config)
    if args.threads:
        cfg = cfg.model_copy(update={"threads": args.threads})
    result = run_experiment(cfg)
    table_path, summary_path = write_results(result, args.out)
    logger.info("results in %s, summary in %s", table_path, summary_path)


def cmd_sample(args: Namespace) -> None:
    spec = CopulaSpec.parse(args.copula, dim=args.dim)
    write_sample_csv(args.out, sample_copula(spec, args.n, make_stream(args.seed)))


def cmd_truth(args: Namespace) -> None:
    spec = CopulaSpec.parse(args.copula)
    _emit_json({"copula": spec.label, "tau": true_tau(spec), "rho_s": true_rho_s(spec)}, None)


def build_parser() -> ArgumentParser:
    settings = get_settings()
    parser = ArgumentParser(prog="smoothboot", description="Smooth bootstrap for copula functionals")
    parser.add_argument("--log-level", default=None, help="Logging level (default from settings)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bandwidth", help="Select H = h * Sigma_hat")
    p.add_argument("--method", choices=["cv", "silverman"], default="cv")
    p.add_argument("--grid", type=parse_grid, default=None)
    p.add_argument("--gh-order", type=int, default=settings.gh_order)
    p.add_argument("--bootstrap-reps", type=int, default=0)
    p.add_argument("--transform", choices=["none", "normal_scores"], default="none")
    p.add_argument("--seed", type=int, default=settings.default_seed)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bandwidth)

    p = sub.add_parser("bootstrap", help="Draw smooth bootstrap samples of the copula")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--B", type=int, default=1)
    p.add_argument("--kernel", choices=["gauss", "laplace"], default="gauss")
    p.add_argument("--bandwidth", choices=["silverman", "cv"], default="silverman")
    p.add_argument("--transform", choices=["none", "normal_scores"], default="normal_scores")
    p.add_argument("--seed", type=int, default=settings.default_seed)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("levelset", help="Estimate the boundary of a copula level set")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--grid", type=int, default=settings.contour_grid)
    p.add_argument("--truth", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_levelset)

    p = sub.add_parser("depmeasure", help="Kendall's tau or Spearman's rho of a sample")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--stat", choices=["tau", "rho"], default="tau")
    p.set_defaults(func=cmd_depmeasure)

    p = sub.add_parser("distortion", help="Generator distortion of kernel smoothing")
    p.add_argument("--gx", default="gauss")
    p.add_argument("--gy", default="gauss")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--u-grid", type=parse_grid, default=parse_grid("0:10:0.1"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_distortion)

    p = sub.add_parser("simulate", help="Run a simulation experiment from a TOML file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sample", help="Sample from a parametric copula")
    p.add_argument("--copula", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--seed", type=int, default=settings.default_seed)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("truth", help="True Kendall's tau and Spearman's rho of a copula")
    p.add_argument("--copula", required=True)
    p.set_defaults(func=cmd_truth)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        args.func(args)
    except (SmoothBootError, ValidationError, OSError, ValueError) as e:
        logger.error("%s failed: %s", args.command, e)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
