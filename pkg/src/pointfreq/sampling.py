"""Point sampling operators: farthest point, Monte Carlo, Poisson disk.

All operators are pure functions of (input, parameters, seed). Ties are broken
by lowest index so results are reproducible across platforms.
"""

import heapq
import math

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateGeometryError, ValidationError
from .mesh import TriangleMesh
from .validation import check_count, check_points

FPS_STARTS = ("centroid", "first", "random")


def fps(points, k, start="centroid", seed=None):
    """Farthest point sampling: ``k`` indices greedily maximizing separation.

    Parameters
    ----------
    points : (N, 3) array
    k : int, 1 <= k <= N
    start : {"centroid", "first", "random"}
        First pick: the point farthest from the centroid (default,
        deterministic), index 0, or a seeded random index.
    seed : int, RNG seed for ``start="random"``.

    Each successive index maximizes the minimum distance to the already
    selected set; ties go to the lowest index.
    """
    pts = check_points(points)
    n = pts.shape[0]
    k = check_count(k, "k", 1, n)

    if start == "centroid":
        current = int(np.argmax(np.linalg.norm(pts - pts.mean(axis=0), axis=1)))
    elif start == "first":
        current = 0
    elif start == "random":
        current = int(np.random.default_rng(seed).integers(n))
    else:
        raise ValidationError(f"start: expected one of {FPS_STARTS}, got {start!r}")

    selected = np.empty(k, dtype=np.int64)
    min_d2 = np.full(n, np.inf)
    for i in range(k):
        selected[i] = current
        diff = pts - pts[current]
        np.minimum(min_d2, np.einsum("ij,ij->i", diff, diff), out=min_d2)
        min_d2[current] = -np.inf
        current = int(np.argmax(min_d2))
    return selected


def monte_carlo_sample(source, n, seed=0):
    """Draw ``n`` points uniformly from a mesh surface or a cloud.

    Mesh: triangles chosen proportional to area, barycentric-uniform within.
    Cloud: uniform without replacement (requires n <= cloud size).
    """
    n = check_count(n, "n", 1)
    rng = np.random.default_rng(seed)
    if isinstance(source, TriangleMesh):
        return _sample_mesh(source, n, rng)
    pts = check_points(source, "source")
    if n > pts.shape[0]:
        raise ValidationError(
            f"n: cannot draw {n} points without replacement from {pts.shape[0]}"
        )
    idx = rng.choice(pts.shape[0], size=n, replace=False)
    return pts[idx]


def _sample_mesh(mesh, n, rng):
    areas = mesh.triangle_areas()
    total = areas.sum()
    if total <= 0.0:
        raise DegenerateGeometryError("mesh has zero total area")
    tri_idx = rng.choice(mesh.num_triangles, size=n, p=areas / total)
    corners = mesh.corners()[tri_idx]
    uv = rng.random((n, 2))
    flip = uv.sum(axis=1) > 1.0
    uv[flip] = 1.0 - uv[flip]
    a, b, c = corners[:, 0], corners[:, 1], corners[:, 2]
    return a + uv[:, :1] * (b - a) + uv[:, 1:] * (c - a)


def poisson_disk_sample(mesh, n, seed=0, oversample=4.0, alpha=8.0):
    """Exactly ``n`` well-separated surface points via weighted elimination.

    A dense Monte Carlo over-sample (``oversample`` x n points) is thinned by
    repeatedly removing the point most crowded by its surviving neighbors,
    until ``n`` remain. Guarantees the exact output count, unlike dart
    throwing.
    """
    if not isinstance(mesh, TriangleMesh):
        raise ValidationError("poisson_disk_sample requires a TriangleMesh")
    n = check_count(n, "n", 1)
    m = max(int(math.ceil(oversample * n)), n)
    candidates = _sample_mesh(mesh, m, np.random.default_rng(seed))
    if m == n:
        return candidates

    # elimination radius from the surface density a result of n points implies
    r_max = math.sqrt(mesh.area() / (2.0 * math.sqrt(3.0) * n))
    radius = 2.0 * r_max
    pairs = cKDTree(candidates).query_pairs(radius, output_type="ndarray")
    if pairs.size:
        d = np.linalg.norm(candidates[pairs[:, 0]] - candidates[pairs[:, 1]], axis=1)
        contrib = (1.0 - np.minimum(d / radius, 1.0)) ** alpha
        rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
        cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
        vals = np.concatenate([contrib, contrib])
        order = np.argsort(rows, kind="stable")
        rows, cols, vals = rows[order], cols[order], vals[order]
        starts = np.searchsorted(rows, np.arange(m))
        ends = np.searchsorted(rows, np.arange(m), side="right")
        weights = np.zeros(m)
        np.add.at(weights, rows, vals)
    else:
        cols = np.empty(0, dtype=np.int64)
        vals = np.empty(0)
        starts = ends = np.zeros(m, dtype=np.int64)
        weights = np.zeros(m)

    alive = np.ones(m, dtype=bool)
    heap = [(-weights[i], i) for i in range(m)]
    heapq.heapify(heap)
    remaining = m
    while remaining > n:
        neg_w, i = heapq.heappop(heap)
        if not alive[i] or -neg_w != weights[i]:
            continue  # stale entry
        alive[i] = False
        remaining -= 1
        for j, w in zip(cols[starts[i]:ends[i]], vals[starts[i]:ends[i]]):
            if alive[j]:
                weights[j] -= w
                heapq.heappush(heap, (-weights[j], j))
    return candidates[alive]
