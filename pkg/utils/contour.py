"""
Marching-squares contour extraction on a rectangular grid

Corner order per cell is (x0,y0), (x1,y0), (x1,y1), (x0,y1). Edge crossings are
linearly interpolated; saddle cells are resolved by the cell-center value.
"""
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

EdgeKey = Tuple[str, int, int]

# Edge a of a cell joins corners EDGES[a]; corner i touches edges (i - 1) % 4 and i
EDGES = ((0, 1), (1, 2), (2, 3), (3, 0))


def lerp_point(p0, p1, v0, v1):
    if v0 == v1:
        t = 0.5
    else:
        t = v0 / (v0 - v1)
    t = min(max(t, 0.0), 1.0)
    return p0 * (1 - t) + t * p1


def _edge_key(i: int, j: int, edge: int) -> EdgeKey:
    if edge == 0:
        return ("h", i, j)
    if edge == 1:
        return ("v", i + 1, j)
    if edge == 2:
        return ("h", i, j + 1)
    return ("v", i, j)


def _cell_segments(above: Tuple[bool, ...], center_above: Optional[bool]) -> List[Tuple[int, int]]:
    crossing = [a for a, (p, q) in enumerate(EDGES) if above[p] != above[q]]
    if len(crossing) == 2:
        return [tuple(crossing)]
    # Saddle: cut off each corner whose side differs from the center
    return [((i - 1) % 4, i) for i in range(4) if above[i] != center_above]


def _chain(segments: List[Tuple[EdgeKey, EdgeKey]]) -> List[List[EdgeKey]]:
    neighbours: Dict[EdgeKey, List[EdgeKey]] = {}
    for a, b in segments:
        neighbours.setdefault(a, []).append(b)
        neighbours.setdefault(b, []).append(a)

    visited = set()
    chains = []

    def walk(start: EdgeKey) -> List[EdgeKey]:
        path = [start]
        cur = start
        while True:
            nxt = None
            for cand in neighbours[cur]:
                edge = frozenset((cur, cand))
                if edge not in visited:
                    nxt = cand
                    visited.add(edge)
                    break
            if nxt is None:
                return path
            path.append(nxt)
            cur = nxt
            if cur == start:
                return path

    # Open chains start at degree-one endpoints, the rest are loops
    for key, nbrs in neighbours.items():
        if len(nbrs) == 1 and frozenset((key, nbrs[0])) not in visited:
            chains.append(walk(key))
    for key, nbrs in neighbours.items():
        for cand in nbrs:
            if frozenset((key, cand)) not in visited:
                chains.append(walk(key))
    return chains


def marching_squares(
    values: np.ndarray,
    xs: np.ndarray,
    ys: np.ndarray,
    level: float,
    center_fn: Optional[Callable[[float, float], float]] = None,
) -> List[np.ndarray]:
    """
    Extract the polylines where a gridded function crosses a level

    Args:
        values: Array of shape (len(xs), len(ys)) with values[i, j] = f(xs[i], ys[j])
        xs: Grid abscissae, ascending
        ys: Grid ordinates, ascending
        level: Contour level
        center_fn: Optional exact evaluator used for saddle cells; the mean of
            the four corners is used otherwise

    Returns:
        List of (k, 2) arrays, one per connected polyline
    """
    values = np.asarray(values, dtype=float)
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    f = values - level
    above = f > 0
    corners = (above[:-1, :-1], above[1:, :-1], above[1:, 1:], above[:-1, 1:])
    index = corners[0] * 8 + corners[1] * 4 + corners[2] * 2 + corners[3]
    cells = np.argwhere((index != 0) & (index != 15))

    points: Dict[EdgeKey, np.ndarray] = {}
    segments: List[Tuple[EdgeKey, EdgeKey]] = []

    def crossing_point(key: EdgeKey) -> np.ndarray:
        if key not in points:
            kind, i, j = key
            if kind == "h":
                p0, p1 = np.array([xs[i], ys[j]]), np.array([xs[i + 1], ys[j]])
                v0, v1 = f[i, j], f[i + 1, j]
            else:
                p0, p1 = np.array([xs[i], ys[j]]), np.array([xs[i], ys[j + 1]])
                v0, v1 = f[i, j], f[i, j + 1]
            points[key] = lerp_point(p0, p1, v0, v1)
        return points[key]

    for i, j in cells:
        i, j = int(i), int(j)
        cell_above = tuple(bool(c[i, j]) for c in corners)
        center_above = None
        if sum(cell_above) == 2 and cell_above[0] == cell_above[2]:
            cx, cy = 0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])
            if center_fn is not None:
                center = center_fn(cx, cy) - level
            else:
                center = 0.25 * (f[i, j] + f[i + 1, j] + f[i + 1, j + 1] + f[i, j + 1])
            center_above = bool(center > 0)
        for a, b in _cell_segments(cell_above, center_above):
            segments.append((_edge_key(i, j, a), _edge_key(i, j, b)))

    return [np.array([crossing_point(k) for k in chain]) for chain in _chain(segments)]
