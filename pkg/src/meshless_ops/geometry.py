"""Point-cloud storage, neighbor search, and center-relative coordinate frames.

A :class:`PointCloud` is an immutable, ordered set of sample coordinates.
Stencil generation works on a :class:`Neighborhood`: a center point plus its
``n`` selected neighbors expressed in center-relative coordinates, together
with the mean and max neighbor distances that set the local length scale.

Duplicate coordinates are permitted everywhere; the least-squares stencil
formulation absorbs coincident samples, so nothing here deduplicates.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "PointTag",
    "PointCloud",
    "Neighborhood",
    "NeighborSearcher",
    "knn_neighbors",
    "scale_neighborhood",
]

#: Clouds at or below this size are searched by brute force; larger ones get
#: a kd-tree. Both paths select identically (ties broken by point index).
DEFAULT_BRUTE_FORCE_CUTOFF = 1000


class PointTag(IntEnum):
    INTERIOR = 0
    BOUNDARY = 1


@dataclass(frozen=True)
class PointCloud:
    """Immutable array of points with per-point interior/boundary tags.

    Parameters
    ----------
    points : ndarray, shape (N, dim)
        Coordinates, ``dim`` in {1, 2, 3}.
    tags : ndarray of uint8, shape (N,), optional
        Per-point :class:`PointTag`. Defaults to all-interior.
    """

    points: np.ndarray
    tags: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=float))
        if pts.ndim != 2:
            raise ValueError(f"points must be 2-D (N, dim); got shape {pts.shape}")
        if pts.shape[1] not in (1, 2, 3):
            raise ValueError(f"unsupported spatial dimension {pts.shape[1]}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points contain non-finite coordinates")
        tags = self.tags
        if tags is None:
            tags = np.zeros(len(pts), dtype=np.uint8)
        else:
            tags = np.asarray(tags, dtype=np.uint8).copy()
            if tags.shape != (len(pts),):
                raise ValueError("tags length must match point count")
        pts.setflags(write=False)
        tags.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "tags", tags)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def interior_indices(self) -> np.ndarray:
        return np.flatnonzero(self.tags == PointTag.INTERIOR)

    def boundary_indices(self) -> np.ndarray:
        return np.flatnonzero(self.tags == PointTag.BOUNDARY)


@dataclass(frozen=True)
class Neighborhood:
    """A center point with its neighbors in center-relative coordinates.

    ``rel_coords[i]`` equals ``points[neighbor_indices[i]] - points[center_index]``
    exactly (same floating subtraction). The center itself is never a neighbor,
    but coincident copies of it may be.
    """

    center_index: int
    neighbor_indices: np.ndarray
    rel_coords: np.ndarray
    mean_radius: float
    max_radius: float

    @property
    def n(self) -> int:
        return len(self.neighbor_indices)

    @property
    def dim(self) -> int:
        return self.rel_coords.shape[1]


def _neighborhood_from(points: np.ndarray, center_index: int,
                       neighbor_indices: np.ndarray) -> Neighborhood:
    rel = points[neighbor_indices] - points[center_index]
    norms = np.linalg.norm(rel, axis=1)
    return Neighborhood(
        center_index=int(center_index),
        neighbor_indices=np.asarray(neighbor_indices, dtype=np.intp),
        rel_coords=rel,
        mean_radius=float(norms.mean()),
        max_radius=float(norms.max()),
    )


class NeighborSearcher:
    """Deterministic k-nearest-neighbor queries over a fixed point set.

    Distance ties are broken by ascending point index, so results are
    reproducible and independent of storage backend. The kd-tree is only a
    candidate pre-filter: final distances are always recomputed in plain
    numpy, which keeps the kd path bit-identical to brute force.
    """

    def __init__(self, points: np.ndarray, brute_cutoff: int = DEFAULT_BRUTE_FORCE_CUTOFF):
        self.points = np.asarray(points, dtype=float)
        if self.points.ndim != 2:
            raise ValueError("points must be (N, dim)")
        self._use_tree = len(self.points) > brute_cutoff
        self._tree = cKDTree(self.points) if self._use_tree else None

    def query(self, center_index: int, n: int) -> np.ndarray:
        """Indices of the ``n`` nearest points to ``points[center_index]``."""
        pts = self.points
        N = len(pts)
        if not 1 <= n <= N - 1:
            raise ValueError(
                f"insufficient neighbors: requested n={n} from a cloud of {N} points"
            )
        center = pts[center_index]
        if self._tree is None:
            cand = np.arange(N)
        else:
            # n+1 covers the center itself appearing among the nearest hits;
            # the ball query then recovers every distance tie at the cutoff.
            k = min(n + 1, N)
            dist, _ = self._tree.query(center, k=k)
            r = float(np.max(dist))
            cand = np.asarray(
                self._tree.query_ball_point(center, r * (1.0 + 1e-12) + 1e-300),
                dtype=np.intp,
            )
        cand = cand[cand != center_index]
        d2 = np.einsum("ij,ij->i", pts[cand] - center, pts[cand] - center)
        order = np.lexsort((cand, d2))
        return cand[order[:n]]


def knn_neighbors(cloud: PointCloud, center_index: int, n: int,
                  brute_cutoff: int = DEFAULT_BRUTE_FORCE_CUTOFF) -> Neighborhood:
    """Gather the ``n`` nearest neighbors of a cloud point.

    Euclidean distances, ties broken by ascending point index; the center is
    excluded by index (coincident duplicates of the center still qualify).

    Raises
    ------
    ValueError
        If ``n`` is not in ``[1, len(cloud) - 1]`` ("insufficient neighbors").
    """
    if not 0 <= center_index < len(cloud):
        raise IndexError(f"center_index {center_index} out of range")
    searcher = NeighborSearcher(cloud.points, brute_cutoff=brute_cutoff)
    idx = searcher.query(center_index, n)
    return _neighborhood_from(cloud.points, center_index, idx)


def scale_neighborhood(nb: Neighborhood, h: float) -> Neighborhood:
    """Shrink (or grow) a neighborhood about its center by factor ``h > 0``.

    Relative coordinates and both radii are multiplied by ``h``; indices are
    untouched. For ``h`` an exact power of two the scaling is bitwise.
    """
    if not h > 0:
        raise ValueError(f"scale factor must be positive, got {h}")
    return replace(
        nb,
        rel_coords=nb.rel_coords * h,
        mean_radius=nb.mean_radius * h,
        max_radius=nb.max_radius * h,
    )
