"""
Random stream helpers

A RandomStream is a numpy Generator. Streams for workers and replications are
derived from a master seed and integer keys so results do not depend on
scheduling.
"""
from typing import Optional, Union

import numpy as np

RandomStream = np.random.Generator

# random() returns multiples of 2**-53 in [0, 1); an exact zero is replaced by half a step
_HALF_STEP = 2.0 ** -54


def make_stream(seed: Optional[Union[int, RandomStream]] = None) -> RandomStream:
    """Return a Generator for a seed, or pass an existing Generator through"""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def derive_stream(seed: int, *keys: int) -> RandomStream:
    """
    Deterministically derive an independent stream from a seed and keys

    Args:
        seed: Master seed
        keys: Integer path, e.g. (experiment_index, rep)

    Returns:
        Generator seeded by SeedSequence([seed, *keys])
    """
    entropy = [int(seed)] + [int(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def spawn_seed(rng: RandomStream) -> int:
    """Draw a fresh 63-bit seed from a stream"""
    return int(rng.integers(0, 2 ** 63 - 1))


def open_uniforms(rng: RandomStream, size) -> np.ndarray:
    """Uniform draws strictly inside (0, 1)"""
    u = rng.random(size)
    return np.where(u == 0.0, _HALF_STEP, u)
