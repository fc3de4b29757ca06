"""Spatial queries and unit-sphere normalization.

The k-nearest and radius queries are backed by a k-d tree but post-process
candidates with the exact same arithmetic a brute-force scan would use, so
results (including tie-breaking by lowest index) match exhaustive search
exactly.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateGeometryError
from .validation import check_count, check_points

# relative slack when turning tree distances into candidate radii; covers the
# ulp-level disagreement between tree and numpy distance evaluation
_SLACK = 1e-9


@dataclass(frozen=True)
class NormalizationTransform:
    """Translation + uniform scale mapping a cloud into the unit sphere."""

    centroid: np.ndarray
    scale: float

    def apply(self, points):
        return (np.asarray(points, dtype=np.float64) - self.centroid) / self.scale

    def invert(self, points):
        return np.asarray(points, dtype=np.float64) * self.scale + self.centroid


def normalize_unit_sphere(points):
    """Center a cloud at its centroid and scale its max radius to 1.

    Returns
    -------
    normalized : (N, 3) float64 array
    transform : NormalizationTransform
        ``transform.invert(normalized)`` reproduces the input.

    Raises
    ------
    DegenerateGeometryError
        If all points coincide (the scale would be zero).
    """
    pts = check_points(points)
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    scale = float(np.linalg.norm(centered, axis=1).max())
    if scale == 0.0:
        raise DegenerateGeometryError(
            "cannot normalize a cloud whose points all coincide"
        )
    return centered / scale, NormalizationTransform(centroid, scale)


class SpatialIndex:
    """Read-only nearest-neighbor index over a fixed cloud.

    Thread-safe for concurrent queries once built.
    """

    def __init__(self, points):
        self.points = check_points(points)
        self._tree = cKDTree(self.points)

    def __len__(self):
        return self.points.shape[0]

    def knn(self, query, k):
        """Indices of the ``k`` nearest points, ascending by (distance, index)."""
        q = np.asarray(query, dtype=np.float64).reshape(3)
        k = check_count(k, "k", 1, len(self))
        kth_dist = np.atleast_1d(self._tree.query(q, k=k)[0])[-1]
        candidates = np.asarray(
            self._tree.query_ball_point(q, kth_dist * (1.0 + _SLACK) + 1e-300),
            dtype=np.int64,
        )
        dists = np.linalg.norm(self.points[candidates] - q, axis=1)
        order = np.lexsort((candidates, dists))
        return candidates[order[:k]]

    def radius(self, center, radius):
        """Indices of all points with distance <= ``radius``, ascending by index."""
        c = np.asarray(center, dtype=np.float64).reshape(3)
        if radius < 0:
            raise DegenerateGeometryError("radius must be non-negative")
        candidates = np.asarray(
            self._tree.query_ball_point(c, radius * (1.0 + _SLACK) + 1e-300),
            dtype=np.int64,
        )
        if candidates.size == 0:
            return candidates
        dists = np.linalg.norm(self.points[candidates] - c, axis=1)
        return np.sort(candidates[dists <= radius])
