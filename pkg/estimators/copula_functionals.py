"""
Dependence functionals of a sample: rank correlations, level-set boundaries,
Hausdorff distances and the copula diagonal
"""
import logging
from typing import Optional, Union

import numpy as np
from scipy import stats

from config.settings import get_settings
from estimators.copula_models import EmpiricalCopula, empirical_copula_eval
from models.schemas import DiagonalCurve, PolygonChain
from utils.contour import marching_squares
from utils.errors import ArgumentError, DomainError, EmptyContourError, UndefinedCorrelationError
from utils.rng import RandomStream, make_stream

logger = logging.getLogger(__name__)

KENDALL_FAST_PATH = 5000
_PAIR_CHUNK = 512
HAUSDORFF_TOL = 1e-13

ChainLike = Union[PolygonChain, np.ndarray]


def _bivariate(data) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ArgumentError("expected an n x 2 sample")
    if data.shape[0] < 2:
        raise ArgumentError("rank correlation needs n >= 2")
    return data


def sample_rho_s(data) -> float:
    """Spearman's rho: Pearson correlation of the column ranks"""
    data = _bivariate(data)
    ranks = stats.rankdata(data, method="average", axis=0)
    if np.any(np.ptp(ranks, axis=0) == 0):
        raise UndefinedCorrelationError("Spearman's rho is undefined for a constant column")
    return float(np.corrcoef(ranks[:, 0], ranks[:, 1])[0, 1])


def _tie_pairs(x: np.ndarray) -> int:
    _, counts = np.unique(x, return_counts=True)
    return int(np.sum(counts * (counts - 1) // 2))


def _concordance_balance(x: np.ndarray, y: np.ndarray) -> int:
    """Concordant minus discordant pairs by direct counting"""
    n = x.size
    total = 0
    for start in range(0, n, _PAIR_CHUNK):
        stop = min(start + _PAIR_CHUNK, n)
        sx = np.sign(x[start:stop, None] - x[None, :]).astype(np.int8)
        sy = np.sign(y[start:stop, None] - y[None, :]).astype(np.int8)
        prod = (sx * sy).astype(np.int64)
        # keep j > i only
        rows = np.arange(start, stop)[:, None]
        prod[np.arange(n)[None, :] <= rows] = 0
        total += int(prod.sum())
    return total


def _concordance_balance_fast(x: np.ndarray, y: np.ndarray) -> int:
    n0 = x.size * (x.size - 1) // 2
    n1, n2 = _tie_pairs(x), _tie_pairs(y)
    if n0 == n1 or n0 == n2:
        return 0
    tau_b = stats.kendalltau(x, y, variant="b")[0]
    return int(round(tau_b * np.sqrt(float(n0 - n1) * float(n0 - n2))))


def sample_tau(data) -> float:
    """
    Kendall's tau-a: (concordant - discordant) / (n choose 2)

    Ties count as neither concordant nor discordant. Large samples go through
    the O(n log n) tau-b statistic and are converted back with the tie counts.
    """
    data = _bivariate(data)
    x, y = data[:, 0], data[:, 1]
    n = x.size
    if n > KENDALL_FAST_PATH:
        balance = _concordance_balance_fast(x, y)
    else:
        balance = _concordance_balance(x, y)
    return balance / (n * (n - 1) / 2)


def estimate_level_boundary(data_u, t: float, grid_n: Optional[int] = None) -> PolygonChain:
    """
    Level curve {C_n = t} of the empirical copula as an ordered chain

    Args:
        data_u: n x 2 sample; pseudo-observations are taken internally
        t: Level in (0, 1)
        grid_n: Grid points per axis

    Returns:
        PolygonChain running from (t, 1) to (1, t) with every coordinate >= t
    """
    if not 0 < t < 1:
        raise DomainError(f"level t must lie in (0, 1), got {t}")
    data_u = np.asarray(data_u, dtype=float)
    if data_u.ndim != 2 or data_u.shape[1] != 2:
        raise ArgumentError("level-set estimation is bivariate")
    grid_n = grid_n or get_settings().contour_grid
    ec = EmpiricalCopula.from_data(data_u)
    grid = np.linspace(0.0, 1.0, grid_n)
    values = ec.grid_values(grid)

    chains = marching_squares(values, grid, grid, t, center_fn=lambda cx, cy: empirical_copula_eval(ec, [cx, cy]))
    if not chains:
        raise EmptyContourError(f"no contour of the empirical copula at level {t}")
    if len(chains) > 1:
        logger.debug("level %.3f: %d contour pieces, keeping the longest", t, len(chains))
    chain = max(chains, key=len)

    chain = np.maximum(chain, t)
    if chain[0, 1] < chain[-1, 1]:
        chain = chain[::-1]
    vertices = [np.array([t, 1.0])] + list(chain) + [np.array([1.0, t])]
    return PolygonChain.from_array(np.vstack(vertices))


def _as_vertices(chain: ChainLike) -> np.ndarray:
    if isinstance(chain, PolygonChain):
        vertices = chain.array
    else:
        vertices = np.asarray(chain, dtype=float)
    if vertices.size == 0:
        raise ArgumentError("Hausdorff distance needs nonempty chains")
    return np.atleast_2d(vertices)


def densify(vertices: np.ndarray, spacing: float) -> np.ndarray:
    """Insert points so consecutive vertices are at most `spacing` apart"""
    if spacing <= 0:
        raise ArgumentError("densify spacing must be positive")
    out = [vertices[:1]]
    for p0, p1 in zip(vertices[:-1], vertices[1:]):
        pieces = max(1, int(np.ceil(np.linalg.norm(p1 - p0) / spacing)))
        s = np.arange(1, pieces + 1)[:, None] / pieces
        out.append(p0 + s * (p1 - p0))
    return np.vstack(out)


def _segments(vertices: np.ndarray):
    if len(vertices) == 1:
        return vertices, vertices
    return vertices[:-1], vertices[1:]


def point_segment_distances(points: np.ndarray, p0: np.ndarray, p1: np.ndarray) -> np.ndarray:
    """(k, s) matrix of distances from k points to s segments"""
    direction = p1 - p0
    length2 = np.einsum("ij,ij->i", direction, direction)
    rel = points[:, None, :] - p0[None, :, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.einsum("ksj,sj->ks", rel, direction) / length2[None, :]
    s = np.where(length2[None, :] > 0, np.clip(s, 0.0, 1.0), 0.0)
    closest = p0[None, :, :] + s[..., None] * direction[None, :, :]
    return np.linalg.norm(points[:, None, :] - closest, axis=-1)


def _nearest_upper_bounds(
    points: np.ndarray, p0: np.ndarray, p1: np.ndarray, rng: RandomStream, chunk: int = 64
) -> tuple[float, np.ndarray]:
    """
    Early-break scan of points against segments in random order

    Returns the exact maximum of the point-to-chain distances together with,
    per point, an upper bound on its distance (exact unless the scan broke off).
    """
    visit = rng.permutation(len(points))
    order = rng.permutation(len(p0))
    p0, p1 = p0[order], p1[order]
    upper = np.empty(len(points))
    cmax = 0.0
    for i in visit:
        cmin = np.inf
        for start in range(0, len(p0), chunk):
            d = point_segment_distances(points[i][None, :], p0[start:start + chunk], p1[start:start + chunk]).min()
            cmin = min(cmin, d)
            if cmin < cmax:
                break
        upper[i] = cmin
        if cmin > cmax:
            cmax = cmin
    return float(cmax), upper


def _refine_segments(
    starts: np.ndarray,
    ends: np.ndarray,
    f_start: np.ndarray,
    f_end: np.ndarray,
    p0: np.ndarray,
    p1: np.ndarray,
    lower: float,
    tol: float,
) -> float:
    """
    Raise `lower` to the sup over segment points of the distance to a chain

    The distance to a single segment is convex along a line, so an interval
    whose endpoints share a nearest segment cannot exceed its endpoint values.
    The chain distance is also 1-Lipschitz. Intervals whose bound stays within
    `tol` of `lower` are dropped and the rest are halved.
    """
    lengths = np.linalg.norm(ends - starts, axis=1)
    keep = (f_start + f_end + lengths) / 2 > lower + tol
    starts, ends = starts[keep], ends[keep]
    while len(starts):
        d_start = point_segment_distances(starts, p0, p1)
        d_end = point_segment_distances(ends, p0, p1)
        f_start, f_end = d_start.min(axis=1), d_end.min(axis=1)
        lower = max(lower, float(f_start.max()), float(f_end.max()))
        lengths = np.linalg.norm(ends - starts, axis=1)
        bound = np.minimum(np.maximum(d_start, d_end).min(axis=1), (f_start + f_end + lengths) / 2)
        keep = bound > lower + tol
        starts, ends = starts[keep], ends[keep]
        if not len(starts):
            break
        mids = (starts + ends) / 2
        lower = max(lower, float(point_segment_distances(mids, p0, p1).min(axis=1).max()))
        starts, ends = np.vstack([starts, mids]), np.vstack([mids, ends])
    return lower


def _directed_early_break(a: np.ndarray, b: np.ndarray, rng: RandomStream, tol: float) -> float:
    p0, p1 = _segments(b)
    lower, upper = _nearest_upper_bounds(a, p0, p1, rng)
    if len(a) == 1:
        return lower
    return _refine_segments(a[:-1], a[1:], upper[:-1], upper[1:], p0, p1, lower, tol)


def _directed_bruteforce(a: np.ndarray, b: np.ndarray, tol: float) -> float:
    p0, p1 = _segments(b)
    f = point_segment_distances(a, p0, p1).min(axis=1)
    if len(a) == 1:
        return float(f[0])
    return _refine_segments(a[:-1], a[1:], f[:-1], f[1:], p0, p1, float(f.max()), tol)


def hausdorff_distance(
    a: ChainLike,
    b: ChainLike,
    spacing: Optional[float] = None,
    rng: Optional[RandomStream] = None,
    tol: float = HAUSDORFF_TOL,
) -> float:
    """
    Symmetric Hausdorff distance between two polygonal chains

    Both chains are taken as point sets, segment interiors included. Vertices
    are scanned in random order and a vertex stops scanning as soon as it
    cannot raise the running maximum; segments are then refined until no
    interior point can exceed the maximum by more than `tol`.

    Args:
        a: First chain
        b: Second chain
        spacing: Optional maximum vertex spacing; chains are densified to it
        rng: Visiting order stream
        tol: Absolute accuracy of the result
    """
    va, vb = _as_vertices(a), _as_vertices(b)
    if spacing is not None:
        va, vb = densify(va, spacing), densify(vb, spacing)
    rng = make_stream(rng if rng is not None else 0)
    return max(_directed_early_break(va, vb, rng, tol), _directed_early_break(vb, va, rng, tol))


def hausdorff_bruteforce(
    a: ChainLike, b: ChainLike, spacing: Optional[float] = None, tol: float = HAUSDORFF_TOL
) -> float:
    """Same distance starting from the full vertex-to-segment distance matrix"""
    va, vb = _as_vertices(a), _as_vertices(b)
    if spacing is not None:
        va, vb = densify(va, spacing), densify(vb, spacing)
    return max(_directed_bruteforce(va, vb, tol), _directed_bruteforce(vb, va, tol))


def empirical_diagonal(data_u, u_grid) -> DiagonalCurve:
    """Diagonal of the empirical copula on a grid"""
    data_u = np.asarray(data_u, dtype=float)
    if data_u.ndim != 2 or data_u.shape[1] < 2:
        raise ArgumentError("the diagonal needs a sample with d >= 2")
    u_grid = np.asarray(u_grid, dtype=float)
    values = EmpiricalCopula.from_data(data_u).diagonal(u_grid)
    return DiagonalCurve(u_grid=u_grid.tolist(), values=values.tolist())
