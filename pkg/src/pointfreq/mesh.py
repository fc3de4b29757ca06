"""Triangle meshes and exact point-to-surface distance."""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import ValidationError
from .validation import check_points


@dataclass(frozen=True)
class TriangleMesh:
    """Vertex + triangle-index surface. Immutable after construction."""

    vertices: np.ndarray = field()
    triangles: np.ndarray = field()

    def __post_init__(self):
        verts = check_points(self.vertices, "vertices")
        tris = np.asarray(self.triangles, dtype=np.int64)
        if tris.ndim != 2 or tris.shape[1] != 3 or tris.shape[0] < 1:
            raise ValidationError(
                f"triangles: expected a (T, 3) index array with T >= 1, got shape {tris.shape}"
            )
        if tris.min() < 0 or tris.max() >= verts.shape[0]:
            raise ValidationError("triangles: vertex index out of range")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "triangles", tris)

    @property
    def num_triangles(self):
        return self.triangles.shape[0]

    def corners(self):
        """Triangle corner coordinates, shape (T, 3, 3)."""
        return self.vertices[self.triangles]

    def triangle_areas(self):
        tri = self.corners()
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        return 0.5 * np.linalg.norm(cross, axis=1)

    def area(self):
        return float(self.triangle_areas().sum())

    def transformed(self, transform):
        """Mesh with vertices mapped through a NormalizationTransform."""
        return TriangleMesh(transform.apply(self.vertices), self.triangles)


def closest_points_on_triangles(queries, corners):
    """Closest point on each triangle to each query, elementwise.

    Parameters
    ----------
    queries : (n, 3) array
    corners : (n, 3, 3) array, one triangle per query

    Vectorized barycentric region classification; degenerate triangles fall
    back to the nearest corner.
    """
    q = np.asarray(queries, dtype=np.float64)
    tri = np.asarray(corners, dtype=np.float64)
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    ab, ac = b - a, c - a
    ap = q - a

    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = q - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = q - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)

    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    with np.errstate(divide="ignore", invalid="ignore"):
        v_ab = d1 / (d1 - d3)
        w_ac = d2 / (d2 - d6)
        w_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        denom = 1.0 / (va + vb + vc)
        v_in = vb * denom
        w_in = vc * denom

    result = a + ab * v_in[:, None] + ac * w_in[:, None]
    done = np.zeros(len(q), dtype=bool)

    def claim(mask, value):
        nonlocal result, done
        take = mask & ~done
        result = np.where(take[:, None], value, result)
        done |= take

    claim((d1 <= 0) & (d2 <= 0), a)
    claim((d3 >= 0) & (d4 <= d3), b)
    claim((vc <= 0) & (d1 >= 0) & (d3 <= 0), a + ab * v_ab[:, None])
    claim((d6 >= 0) & (d5 <= d6), c)
    claim((vb <= 0) & (d2 >= 0) & (d6 <= 0), a + ac * w_ac[:, None])
    claim((va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0), b + (c - b) * w_bc[:, None])

    # degenerate triangles can leave NaNs in the interior branch
    bad = ~np.isfinite(result).all(axis=1)
    if bad.any():
        corner_d = np.linalg.norm(tri[bad] - q[bad, None, :], axis=2)
        result[bad] = tri[bad, np.argmin(corner_d, axis=1)]
    return result


class MeshDistanceIndex:
    """Exact point-to-mesh distances with centroid-ball culling.

    For each query, the distance to the nearest mesh vertex bounds the answer
    from above. Any triangle that could beat that bound has its centroid
    within (bound + r) of the query, where r is the largest centroid-to-corner
    radius in the mesh, so a single ball query over triangle centroids yields
    a small sound candidate set that is then tested exactly.
    """

    def __init__(self, mesh):
        self.mesh = mesh
        self._corners = mesh.corners()
        centroids = self._corners.mean(axis=1)
        self._spread = float(
            np.linalg.norm(self._corners - centroids[:, None, :], axis=2).max()
        )
        self._centroid_tree = cKDTree(centroids)
        self._vertex_tree = cKDTree(mesh.vertices)

    def query(self, points):
        """Distance from each point to the surface, shape (n,)."""
        pts = check_points(points)
        upper = self._vertex_tree.query(pts)[0] * (1.0 + 1e-12)
        candidate_lists = self._centroid_tree.query_ball_point(
            pts, upper + self._spread + 1e-12
        )
        t_idx = np.concatenate([np.asarray(c, dtype=np.int64) for c in candidate_lists])
        counts = np.fromiter((len(c) for c in candidate_lists), dtype=np.int64,
                             count=len(pts))
        p_idx = np.repeat(np.arange(len(pts)), counts)
        closest = closest_points_on_triangles(pts[p_idx], self._corners[t_idx])
        pair_d = np.linalg.norm(closest - pts[p_idx], axis=1)
        best = np.full(len(pts), np.inf)
        np.minimum.at(best, p_idx, pair_d)
        # nearest-vertex bound guarantees at least one candidate per point
        return best
