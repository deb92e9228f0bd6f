"""
CSV input/output for sample matrices and polygon chains
"""
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

PathLike = Union[str, Path]


def read_sample_csv(path: PathLike) -> np.ndarray:
    """Read a numeric n x d sample; a header row is detected and skipped"""
    frame = pd.read_csv(path)
    if not all(_is_label(c) for c in frame.columns):
        frame = pd.read_csv(path, header=None)
    values = frame.to_numpy(dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    return values


def _is_label(column) -> bool:
    try:
        float(column)
    except (TypeError, ValueError):
        return True
    return False


def sample_frame(samples: np.ndarray) -> pd.DataFrame:
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    columns = [f"u{j + 1}" for j in range(samples.shape[1])]
    return pd.DataFrame(samples, columns=columns)


def write_sample_csv(path: PathLike, samples: np.ndarray) -> None:
    """Write a sample with header u1,...,ud"""
    sample_frame(samples).to_csv(path, index=False, float_format="%.17g")


def write_polygon_csv(path: PathLike, vertices: np.ndarray) -> None:
    frame = pd.DataFrame(np.asarray(vertices, dtype=float), columns=["u", "v"])
    frame.to_csv(path, index=False, float_format="%.17g")
