import time
import sys
import os
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import numpy as np

from estimators.copula_functionals import hausdorff_bruteforce, hausdorff_distance, sample_tau
from estimators.copula_models import pseudo_observations, sample_copula
from estimators.elliptical_core import closure_defect, make_generator
from estimators.kernel_smoothing import fit_model, marginal_quantile
from estimators.smooth_bootstrap import smooth_bootstrap_copula_sample
from models.schemas import BootstrapConfig, CopulaSpec
from utils.rng import derive_stream

SEED = 20240101


def closure_grid():
    grid = np.round(np.arange(0.1, 20.0 + 1e-9, 0.1), 10)
    for c in (0.1, 1.0, 10.0):
        closure_defect(make_generator("gauss"), c, grid)


def bootstrap_margins():
    data = pseudo_observations(sample_copula(CopulaSpec.parse("clayton:2"), 25, derive_stream(SEED, 1)))
    smooth_bootstrap_copula_sample(data, BootstrapConfig(m=10_000), derive_stream(SEED, 2))


def hausdorff_pairs():
    rng = derive_stream(SEED, 3)
    for _ in range(100):
        a, b = rng.random((20, 2)), rng.random((20, 2))
        hausdorff_distance(a, b, rng=rng)
        hausdorff_bruteforce(a, b)


def quantile_roundtrip():
    levels = [0.001, 0.01, 0.5, 0.99, 0.999]
    for k in range(50):
        rng = derive_stream(SEED, 4, k)
        model = fit_model(rng.normal(size=(30, 1)), rng.uniform(0.01, 1.0))
        marginal_quantile(model, 0, levels, use_table=False)


def kendall_large():
    data = sample_copula(CopulaSpec.parse("gumbel:2"), 1_000_000, derive_stream(SEED, 5))
    sample_tau(data)


def performance_test():
    """Wall-clock time of the fast acceptance workloads"""
    workloads = [
        ("generator closure", closure_grid),
        ("bootstrap margins (n=25, m=1e4)", bootstrap_margins),
        ("hausdorff pairs (100 x 20 vertices)", hausdorff_pairs),
        ("quantile roundtrip (50 models)", quantile_roundtrip),
        ("kendall tau (n=1e6)", kendall_large),
    ]

    total_time = 0
    for i, (name, workload) in enumerate(workloads):
        start_time = time.time()
        workload()
        end_time = time.time()
        latency = end_time - start_time
        total_time += latency
        print(f"Workload {i+1} {name}: {latency:.2f} seconds")

    print(f"\nTotal: {total_time:.2f} seconds")

if __name__ == "__main__":
    performance_test()
