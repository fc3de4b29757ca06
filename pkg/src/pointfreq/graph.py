"""Neighborhood graphs, polynomial graph filters and high-frequency scoring.

A cloud induces a directed neighborhood graph: nodes are points, edges connect
pairs closer than ``epsilon``, edge weights are Gaussian in distance and then
normalized so each node's weights sum to one. Applying the resulting shift
operator replaces every point (or per-node signal) with a weighted average of
its neighbors; the difference between a point and that average is the
high-pass response whose L2 norm scores local geometric variation. Points
with the largest scores sit on edges, corners and outliers.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .errors import DegenerateGeometryError, SpectralError, ValidationError
from .spatial import SpatialIndex, normalize_unit_sphere
from .validation import check_count, check_points, check_signal, check_taps

SPECTRAL_SIZE_LIMIT = 1024


@dataclass(frozen=True)
class GraphParams:
    """Neighborhood-graph construction parameters.

    epsilon : ball radius for adjacency (assumes unit-sphere-scale coordinates)
    sigma : Gaussian kernel width; defaults to epsilon / 2
    fallback_k : neighbors wired to a node that has none inside its ball
    """

    epsilon: float = 0.5
    sigma: float | None = None
    fallback_k: int = 1

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon!r}")
        if self.sigma is not None and not self.sigma > 0:
            raise ValidationError(f"sigma must be positive, got {self.sigma!r}")
        if self.fallback_k < 1:
            raise ValidationError(f"fallback_k must be >= 1, got {self.fallback_k!r}")

    @property
    def resolved_sigma(self):
        return self.sigma if self.sigma is not None else self.epsilon / 2.0

    def to_dict(self):
        return {
            "epsilon": self.epsilon,
            "sigma": self.resolved_sigma,
            "fallback_k": self.fallback_k,
        }


@dataclass(frozen=True)
class NeighborhoodGraph:
    """Row-normalized weighted adjacency over a cloud. Immutable.

    The matrix is kept in coordinate form: construction avoids any sort and
    products against dense signals are as fast as the compressed layout.
    """

    matrix: sp.coo_matrix
    params: GraphParams

    @property
    def num_nodes(self):
        return self.matrix.shape[0]

    def neighbor_counts(self):
        return np.bincount(self.matrix.row, minlength=self.num_nodes)

    def shift(self, signal):
        return self.matrix @ signal


def build_graph(points, params=None):
    """Build the neighborhood graph of a cloud.

    Edges connect pairs strictly closer than ``params.epsilon``; nodes left
    without neighbors get edges to their ``fallback_k`` nearest points so the
    shift operator is defined everywhere. Raw weights exp(-d^2 / (2 sigma^2))
    are normalized per node; fallback rows are evaluated softmax-style so even
    distant outliers keep finite weights.
    """
    pts = check_points(points, min_points=2)
    params = params or GraphParams()
    n = pts.shape[0]

    tree = cKDTree(pts)
    pairs = tree.query_pairs(params.epsilon, output_type="ndarray")
    scale = 2.0 * params.resolved_sigma**2
    if pairs.size:
        diff = pts[pairs[:, 0]] - pts[pairs[:, 1]]
        d2 = np.einsum("ij,ij->i", diff, diff)
        strict = d2 < params.epsilon**2  # ball query is inclusive, edges are not
        pairs, d2 = pairs[strict], d2[strict]
        rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
        cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
        # ball edges keep d < epsilon, so their Gaussian weight never drops
        # below exp(-eps^2 / (2 sigma^2)) and cannot underflow
        half = np.exp(-d2 / scale)
        weights = np.concatenate([half, half])
    else:
        rows = cols = np.empty(0, dtype=np.int64)
        weights = np.empty(0)

    degree = np.bincount(rows, minlength=n)
    isolated = np.flatnonzero(degree == 0)
    if isolated.size:
        index = SpatialIndex(pts)
        k = min(params.fallback_k + 1, n)
        fb_rows, fb_cols, fb_weights = [], [], []
        for i in isolated:
            neighbors = [j for j in index.knn(pts[i], k) if j != i][: params.fallback_k]
            gaps = pts[neighbors] - pts[i]
            logits = -np.einsum("ij,ij->i", gaps, gaps) / scale
            # all-fallback rows can be arbitrarily far out; shift before exp
            fb_weights.append(np.exp(logits - logits.max()))
            fb_rows.extend([i] * len(neighbors))
            fb_cols.extend(neighbors)
        rows = np.concatenate([rows, np.asarray(fb_rows, dtype=np.int64)])
        cols = np.concatenate([cols, np.asarray(fb_cols, dtype=np.int64)])
        weights = np.concatenate([weights] + fb_weights)

    row_sums = np.bincount(rows, weights=weights, minlength=n)
    weights = weights / row_sums[rows]
    matrix = sp.coo_matrix((weights, (rows, cols)), shape=(n, n))
    return NeighborhoodGraph(matrix=matrix, params=params)


def apply_shift(graph, signal):
    """One application of the shift operator: weighted neighbor average."""
    sig = check_signal(signal, graph.num_nodes)
    return graph.shift(sig)


def apply_polynomial_filter(graph, taps, signal):
    """Apply sum_l taps[l] * A^l to a signal by iterated shifts.

    Never materializes powers of the adjacency; cost is O(len(taps) * edges).
    """
    taps = check_taps(taps)
    sig = check_signal(signal, graph.num_nodes)
    acc = taps[0] * sig
    current = sig
    for coeff in taps[1:]:
        current = graph.shift(current)
        acc = acc + coeff * current
    return acc


def highpass_response(graph, points):
    """Per-point residual x_i minus the weighted average of its neighbors."""
    pts = check_signal(points, graph.num_nodes, name="points")
    return pts - graph.shift(pts)


def variation_scores(residuals):
    """L2 norm of each point's high-pass residual."""
    res = np.asarray(residuals, dtype=np.float64)
    if res.ndim != 2 or res.shape[1] != 3:
        raise ValidationError(f"residuals: expected (N, 3), got shape {res.shape}")
    return np.linalg.norm(res, axis=1)


@dataclass(frozen=True)
class HFExtraction:
    """Top-scoring points of a cloud, in descending score order."""

    indices: np.ndarray   # (m,) into the source cloud
    scores: np.ndarray    # (m,) scores of the selected points, non-increasing
    points: np.ndarray    # (m, 3) the selected coordinates


def extract_hf_points(points, m, params=None, normalize=False):
    """Extract the ``m`` points with the strongest high-pass response.

    With ``normalize=True`` the graph is built over the unit-sphere-normalized
    cloud so ``epsilon`` means the same thing for any input scale; ranking is
    unaffected by the uniform scale itself, only by the edge set it selects.
    Ties break toward the lowest index. Returned coordinates are always the
    original ones.
    """
    pts = check_points(points, min_points=2)
    m = check_count(m, "m", 1, pts.shape[0])
    work = normalize_unit_sphere(pts)[0] if normalize else pts
    graph = build_graph(work, params)
    scores = variation_scores(highpass_response(graph, work))
    ranking = np.argsort(-scores, kind="stable")
    chosen = ranking[:m]
    return HFExtraction(indices=chosen, scores=scores[chosen], points=pts[chosen])


def spectral_reference_filter(graph, taps, signal):
    """Apply a polynomial filter through an explicit eigendecomposition.

    Transforms the signal into the graph Fourier basis, scales each component
    by the filter's frequency response at its eigenvalue (ordered descending),
    and transforms back. Exists as a bounded-size cross-check for the iterated
    node-domain path, not as a production route.
    """
    taps = check_taps(taps)
    n = graph.num_nodes
    if n > SPECTRAL_SIZE_LIMIT:
        raise ValidationError(
            f"spectral reference path is limited to {SPECTRAL_SIZE_LIMIT} nodes, got {n}"
        )
    sig = check_signal(signal, n)

    dense = graph.matrix.toarray()
    eigvals, eigvecs = np.linalg.eig(dense)
    order = np.lexsort((-eigvals.imag, -eigvals.real))
    eigvals, eigvecs = eigvals[order], eigvecs[:, order]

    try:
        inv = np.linalg.inv(eigvecs)
    except np.linalg.LinAlgError:
        raise SpectralError("eigenvector matrix is singular")
    residual = np.linalg.norm((eigvecs * eigvals) @ inv - dense) / max(
        np.linalg.norm(dense), np.finfo(float).tiny
    )
    if residual > 1e-8:
        raise SpectralError("eigendecomposition is defective", residual=residual)

    response = np.zeros(n, dtype=complex)
    power = np.ones(n, dtype=complex)
    for coeff in taps:
        response += coeff * power
        power *= eigvals
    transformed = inv @ sig
    if transformed.ndim == 1:
        filtered = eigvecs @ (response * transformed)
    else:
        filtered = eigvecs @ (response[:, None] * transformed)
    return filtered.real


@dataclass(frozen=True)
class TrimDenoise:
    """Drop points scoring above mean + kappa * stddev of variation scores."""

    kappa: float = 3.0

    def to_dict(self):
        return {"policy": "trim", "kappa": self.kappa}


@dataclass(frozen=True)
class SmoothDenoise:
    """Pull each point toward its neighbor average by a factor beta."""

    beta: float = 0.5
    iterations: int = 1

    def to_dict(self):
        return {"policy": "smooth", "beta": self.beta, "iterations": self.iterations}


def denoise_points(points, params=None, policy=None, return_index=False):
    """Remove or attenuate high-frequency noise from a cloud.

    Trim removes outliers entirely (surviving points keep their input order);
    smooth displaces every point against its high-pass residual. With
    ``return_index=True`` also returns the surviving input indices.
    """
    pts = check_points(points, min_points=2)
    policy = policy if policy is not None else TrimDenoise()
    if isinstance(policy, TrimDenoise):
        graph = build_graph(pts, params)
        scores = variation_scores(highpass_response(graph, pts))
        threshold = scores.mean() + policy.kappa * scores.std()
        keep = scores <= threshold
        if not keep.any():
            raise DegenerateGeometryError("trim policy removed every point")
        kept = np.flatnonzero(keep)
        result = pts[kept]
    elif isinstance(policy, SmoothDenoise):
        result = pts
        for _ in range(policy.iterations):
            graph = build_graph(result, params)
            result = result - policy.beta * highpass_response(graph, result)
        kept = np.arange(pts.shape[0])
    else:
        raise ValidationError(f"unknown denoise policy {policy!r}")
    return (result, kept) if return_index else result
