"""Boxes, point clouds and set distances in R^n.

Point clouds are plain ``(n, d)`` float arrays. All distances are Euclidean and
are computed as ``sqrt(sum((a - b) ** 2))`` over coordinates in order, never via
the ``|a|^2 + |b|^2 - 2ab`` expansion, so results match a naive double loop
exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# rows per block when forming pairwise-distance blocks
_BLOCK = 512


@dataclass(frozen=True, eq=False)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("box bounds must be vectors of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box bounds must be finite")
        if np.any(lo > hi):
            raise ValueError(f"empty box: lower {lo.tolist()} exceeds upper {hi.tolist()}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def from_intervals(cls, intervals) -> "Box":
        arr = np.asarray(intervals, dtype=float).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1])

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def __eq__(self, other):
        if not isinstance(other, Box):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(self.upper, other.upper)

    def __hash__(self):
        return hash((self.lower.tobytes(), self.upper.tobytes()))

    def to_intervals(self) -> list:
        return [[float(a), float(b)] for a, b in zip(self.lower, self.upper)]


def as_cloud(points, dim: int | None = None) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1) if dim in (None, 1) else arr.reshape(-1, dim)
    if arr.ndim != 2:
        raise ValueError("point cloud must be a 2-D array")
    if arr.size == 0 and dim is not None:
        arr = arr.reshape(0, dim)
    return arr


def _check_dim(x: np.ndarray, box: Box) -> None:
    if x.shape[-1] != box.dim:
        raise ValueError(f"dimension mismatch: point has {x.shape[-1]}, box has {box.dim}")


def _norm_last(diff: np.ndarray) -> np.ndarray:
    acc = diff[..., 0] * diff[..., 0]
    for i in range(1, diff.shape[-1]):
        acc = acc + diff[..., i] * diff[..., i]
    return np.sqrt(acc)


def norm(x) -> float:
    """Euclidean norm, same summation order as every other distance here."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(_norm_last(x))


def project_to_box(x, box: Box) -> np.ndarray:
    """Coordinatewise clamp. Works on a single point or a stack of points."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    _check_dim(x, box)
    return np.minimum(np.maximum(x, box.lower), box.upper)


def distance_to_box(x, box: Box):
    """Euclidean distance from ``x`` (or each row of ``x``) to ``box``."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim <= 1
    if x.ndim == 0:
        x = x.reshape(1)
    _check_dim(x, box)
    d = _norm_last(x - project_to_box(x, box))
    return float(d) if scalar else d


def inflate(box: Box, eps: float) -> Box:
    if eps < 0:
        raise ValueError("inflation radius must be nonnegative")
    return Box(box.lower - eps, box.upper + eps)


def axis_lattice(lo: float, hi: float, h: float) -> np.ndarray:
    """``lo, lo+h, lo+2h, ...`` strictly below ``hi``, then ``hi`` itself."""
    if h <= 0:
        raise ValueError("grid step must be positive")
    span = (hi - lo) / h
    m = round(span)
    # snap spans that are integral up to rounding, e.g. 1/0.01
    steps = m if abs(span - m) <= 1e-9 * max(1.0, abs(span)) else math.ceil(span)
    if steps == 0:
        return np.array([lo])
    pts = lo + h * np.arange(steps, dtype=float)
    return np.append(pts, hi)


def product_lattice(axes: list[np.ndarray]) -> np.ndarray:
    """Cartesian product of axis lattices in lexicographic order."""
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def grid_sample(box: Box, h: float) -> np.ndarray:
    """Axis-aligned lattice of ``box`` with step ``h``, both endpoints kept per axis."""
    return product_lattice([axis_lattice(lo, hi, h) for lo, hi in zip(box.lower, box.upper)])


def apply_operator(matrix, x) -> np.ndarray:
    """``matrix @ x`` for a point or a stack of points, fixed summation order."""
    a = np.atleast_2d(np.asarray(matrix, dtype=float))
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape[-1] != a.shape[1]:
        raise ValueError(f"dimension mismatch: operator takes {a.shape[1]}, point has {x.shape[-1]}")
    out = x[..., 0:1] * a[:, 0]
    for j in range(1, a.shape[1]):
        out = out + x[..., j : j + 1] * a[:, j]
    return out


# ---------------------------------------------------------------------------
# Set distances
# ---------------------------------------------------------------------------


def _pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return _norm_last(a[:, None, :] - b[None, :, :])


def diameter(cloud) -> float:
    a = as_cloud(cloud)
    n = a.shape[0]
    if n < 2:
        return 0.0
    best = 0.0
    for i in range(0, n, _BLOCK):
        # pairs (i', j) with j >= i cover every unordered pair once
        d = _pairwise(a[i : i + _BLOCK], a[i:])
        best = max(best, float(d.max()))
    return best


def nearest_distances(a, b) -> np.ndarray:
    """For each row of ``a``, the distance to the closest row of ``b``."""
    a = as_cloud(a)
    b = as_cloud(b, a.shape[1])
    if b.shape[0] == 0:
        raise ValueError("distance to an empty set is undefined")
    out = np.empty(a.shape[0])
    for i in range(0, a.shape[0], _BLOCK):
        out[i : i + _BLOCK] = _pairwise(a[i : i + _BLOCK], b).min(axis=1)
    return out


def directed_distance(a, b) -> float:
    """``sup_{x in a} d(x, b)``; zero for empty ``a``."""
    a = as_cloud(a)
    b = as_cloud(b, a.shape[1])
    if b.shape[0] == 0:
        raise ValueError("directed distance to an empty set is undefined")
    if a.shape[0] == 0:
        return 0.0
    return float(nearest_distances(a, b).max())


def hausdorff(a, b) -> float:
    a = as_cloud(a)
    b = as_cloud(b, a.shape[1])
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("Hausdorff distance needs two nonempty sets")
    return max(directed_distance(a, b), directed_distance(b, a))


# ---------------------------------------------------------------------------
# Kuratowski surrogate
# ---------------------------------------------------------------------------


def _max_part_diameter(a: np.ndarray, labels: np.ndarray) -> float:
    return max((diameter(a[labels == c]) for c in np.unique(labels)), default=0.0)


def _farthest_point_labels(a: np.ndarray, k: int) -> np.ndarray:
    centers = [0]
    dist = _norm_last(a - a[0])
    labels = np.zeros(a.shape[0], dtype=int)
    while len(centers) < k:
        nxt = int(np.argmax(dist))
        if dist[nxt] == 0.0:
            break
        d_new = _norm_last(a - a[nxt])
        closer = d_new < dist
        labels[closer] = len(centers)
        dist = np.where(closer, d_new, dist)
        centers.append(nxt)
    return labels


def _refine(a: np.ndarray, labels: np.ndarray, iters: int) -> tuple[float, np.ndarray]:
    """Reassign points to the nearest bounding-box midpoint until stable."""
    best_val = _max_part_diameter(a, labels)
    best = labels
    for _ in range(iters):
        parts = np.unique(labels)
        mids = np.stack([(a[labels == c].min(axis=0) + a[labels == c].max(axis=0)) / 2 for c in parts])
        new = parts[np.argmin(_pairwise(a, mids), axis=1)]
        if np.array_equal(new, labels):
            break
        labels = new
        val = _max_part_diameter(a, labels)
        if val < best_val:
            best_val, best = val, labels
    return best_val, best


def kuratowski_partition(cloud, k: int, refine_iters: int = 20) -> tuple[float, np.ndarray]:
    """Heuristic k-cluster partition minimizing the largest part diameter.

    Farthest-point seeding followed by midpoint reassignment. The returned value
    is the max part diameter of the returned labelling, hence an upper bound on
    the optimal ``k``-partition value. The best ``(j-1)``-part solution is kept
    as a candidate for ``j`` parts, so the value is nonincreasing in ``k``.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    a = as_cloud(cloud)
    n = a.shape[0]
    if n == 0:
        return 0.0, np.zeros(0, dtype=int)
    best_labels = np.zeros(n, dtype=int)
    best_val = diameter(a)
    for j in range(2, k + 1):
        if best_val == 0.0:
            break
        val, labels = _refine(a, _farthest_point_labels(a, j), refine_iters)
        if val < best_val:
            best_val, best_labels = val, labels
    return best_val, best_labels


def kuratowski_estimate(cloud, k: int) -> float:
    """Upper bound on the k-cluster surrogate of the Kuratowski measure."""
    return kuratowski_partition(cloud, k)[0]


def _partitions(n: int, k: int):
    # restricted growth strings: label[i] <= max(label[:i]) + 1
    def rec(i, labels, top):
        if i == n:
            yield tuple(labels)
            return
        for c in range(min(top + 2, k)):
            labels.append(c)
            yield from rec(i + 1, labels, max(top, c))
            labels.pop()

    if n == 0:
        yield ()
        return
    yield from rec(1, [0], 0)


def kuratowski_exhaustive(cloud, k: int) -> float:
    """Exact k-partition value by enumerating every partition. Small clouds only."""
    a = as_cloud(cloud)
    if a.shape[0] > 12:
        raise ValueError("exhaustive search is limited to 12 points")
    if a.shape[0] == 0:
        return 0.0
    best = math.inf
    for labels in _partitions(a.shape[0], k):
        best = min(best, _max_part_diameter(a, np.asarray(labels)))
    return best


def distinct_count(cloud) -> int:
    a = as_cloud(cloud)
    return int(np.unique(a, axis=0).shape[0]) if a.shape[0] else 0


__all__ = [
    "Box",
    "apply_operator",
    "as_cloud",
    "axis_lattice",
    "diameter",
    "directed_distance",
    "distance_to_box",
    "distinct_count",
    "grid_sample",
    "hausdorff",
    "inflate",
    "kuratowski_estimate",
    "kuratowski_exhaustive",
    "kuratowski_partition",
    "nearest_distances",
    "norm",
    "row_norms",
    "product_lattice",
    "project_to_box",
]


def row_norms(diff) -> np.ndarray:
    """Euclidean norms along the last axis."""
    return _norm_last(np.asarray(diff, dtype=float))
