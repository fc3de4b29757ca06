"""Evaluation metrics for upsampled clouds and the weighted loss breakdown.

Distance metrics operate in whatever frame the caller supplies; the report
entry point ``evaluate_all`` first maps both clouds (and the mesh) through the
ground-truth cloud's unit-sphere transform so every metric shares one frame
and the ball radii / graph radii are meaningful.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .errors import ValidationError
from .graph import GraphParams, extract_hf_points
from .mesh import MeshDistanceIndex, TriangleMesh
from .sampling import fps
from .spatial import SpatialIndex, normalize_unit_sphere
from .transport import identity_distribution_loss, reconstruction_loss
from .validation import check_count, check_points, check_positive

METRIC_NAMES = ("cd", "hd", "p2f", "uniformity", "hf_cd", "hf_hd")
SCHEMA_VERSION = 1


def chamfer(p, q):
    """Chamfer distance: averaged bidirectional squared nearest-neighbor gaps.

    Equal-size clouds use the single 1/N normalization; unequal sizes average
    each direction over its own cloud before summing (which reduces to the
    same value when sizes match).
    """
    src = check_points(p, "P")
    dst = check_points(q, "Q")
    d_pq = cKDTree(dst).query(src)[0]
    d_qp = cKDTree(src).query(dst)[0]
    if src.shape[0] == dst.shape[0]:
        return float(((d_pq**2).sum() + (d_qp**2).sum()) / src.shape[0])
    return float((d_pq**2).mean() + (d_qp**2).mean())


def hausdorff(p, q):
    """Symmetric Hausdorff distance (unsquared)."""
    src = check_points(p, "P")
    dst = check_points(q, "Q")
    d_pq = cKDTree(dst).query(src)[0]
    d_qp = cKDTree(src).query(dst)[0]
    return float(max(d_pq.max(), d_qp.max()))


def point_to_surface(points, mesh):
    """Mean and max exact distance from each point to a triangle mesh."""
    if not isinstance(mesh, TriangleMesh):
        raise ValidationError("point_to_surface requires a TriangleMesh")
    distances = MeshDistanceIndex(mesh).query(points)
    return float(distances.mean()), float(distances.max())


@dataclass(frozen=True)
class MetricConfig:
    """Shared configuration for the uniformity and HF metrics.

    r_q_sq : squared ball radius for uniformity, on unit-sphere coordinates
    seed_count : number of FPS ball seeds; None means ceil(0.05 * |P|)
    hf_m : HF subset size for hf_cd / hf_hd
    graph : neighborhood-graph parameters for HF extraction
    ratio, input_size : when both set, the expected ball population is
        ratio * input_size * r_q_sq instead of |P| * r_q_sq
    """

    r_q_sq: float = 0.012
    seed_count: int | None = None
    hf_m: int = 2048
    graph: GraphParams = field(default_factory=GraphParams)
    ratio: int | None = None
    input_size: int | None = None

    def __post_init__(self):
        check_positive(self.r_q_sq, "r_q_sq")
        if self.seed_count is not None:
            check_count(self.seed_count, "seed_count", 1)
        check_count(self.hf_m, "hf_m", 1)

    def resolved_seed_count(self, n):
        if self.seed_count is not None:
            return min(self.seed_count, n)
        return min(max(1, math.ceil(0.05 * n)), n)

    def expected_ball_count(self, n):
        if self.ratio is not None and self.input_size is not None:
            return self.ratio * self.input_size * self.r_q_sq
        return n * self.r_q_sq

    def to_dict(self, n=None):
        out = {
            "r_q_sq": self.r_q_sq,
            "seed_count": self.seed_count if n is None else self.resolved_seed_count(n),
            "hf_m": self.hf_m,
            "graph": self.graph.to_dict(),
            "ratio": self.ratio,
            "input_size": self.input_size,
        }
        return out


def uniformity(points, config=None):
    """Deviation from an even point distribution; 0 is perfectly uniform.

    Seeds are picked by FPS; each seed's ball population is compared against
    the expected count, and distances to nearest neighbors inside the ball
    against the spacing a hexagonal packing of that population would have.
    Expects a unit-sphere-normalized cloud.
    """
    pts = check_points(points)
    config = config or MetricConfig()
    n = pts.shape[0]
    r_q = math.sqrt(config.r_q_sq)
    n_hat = config.expected_ball_count(n)
    seeds = fps(pts, config.resolved_seed_count(n), start="centroid")
    index = SpatialIndex(pts)

    total = 0.0
    for seed in seeds:
        members = index.radius(pts[seed], r_q)
        size = members.size
        imbalance = (size - n_hat) ** 2 / n_hat
        if size < 2:
            continue  # clustering term is 0
        subset = pts[members]
        pair_d = cdist(subset, subset)
        np.fill_diagonal(pair_d, np.inf)
        nearest = pair_d.min(axis=1)
        d_hat = math.sqrt(2.0 * math.pi * config.r_q_sq / (math.sqrt(3.0) * size))
        cluster = float(((nearest - d_hat) ** 2 / d_hat).sum())
        total += imbalance * cluster
    return float(total)


def _hf_pair(up, gt, config, normalize):
    m = config.hf_m
    if m > min(up.shape[0], gt.shape[0]):
        raise ValidationError(
            f"hf_m: {m} exceeds a cloud size ({up.shape[0]} vs {gt.shape[0]})"
        )
    if normalize:
        transform = normalize_unit_sphere(gt)[1]
        up, gt = transform.apply(up), transform.apply(gt)
    return (
        extract_hf_points(up, m, config.graph),
        extract_hf_points(gt, m, config.graph),
    )


def hf_cd(up, gt, config=None, normalize=True):
    """Chamfer distance restricted to the two clouds' HF subsets."""
    up = check_points(up, "up")
    gt = check_points(gt, "gt")
    config = config or MetricConfig()
    e_up, e_gt = _hf_pair(up, gt, config, normalize)
    return chamfer(e_up.points, e_gt.points)


def hf_hd(up, gt, config=None, normalize=True):
    """Hausdorff distance restricted to the two clouds' HF subsets."""
    up = check_points(up, "up")
    gt = check_points(gt, "gt")
    config = config or MetricConfig()
    e_up, e_gt = _hf_pair(up, gt, config, normalize)
    return hausdorff(e_up.points, e_gt.points)


@dataclass(frozen=True)
class LossReport:
    """Raw and weighted non-adversarial loss terms."""

    reconstruction: float
    uniformity: float
    identity: float
    weights: tuple  # (w_rec, w_uni, w_id)
    total: float
    solver: str

    def to_json_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "raw": {
                "reconstruction": self.reconstruction,
                "uniformity": self.uniformity,
                "identity": self.identity,
            },
            "weighted": {
                "reconstruction": self.weights[0] * self.reconstruction,
                "uniformity": self.weights[1] * self.uniformity,
                "identity": self.weights[2] * self.identity,
            },
            "weights": {
                "reconstruction": self.weights[0],
                "uniformity": self.weights[1],
                "identity": self.weights[2],
            },
            "total": self.total,
            "solver": self.solver,
        }


DEFAULT_LOSS_WEIGHTS = (100.0, 10.0, 1.0)


def loss_report(up, gt, ori, config=None, weights=DEFAULT_LOSS_WEIGHTS, solver="auto"):
    """Weighted sum of reconstruction, uniformity and identity losses.

    Raw terms equal the corresponding public operations on the given clouds
    exactly; the weighted total is w_rec * L_rec + w_uni * L_uni + w_id * L_id.
    """
    up = check_points(up, "up")
    gt = check_points(gt, "gt")
    ori = check_points(ori, "ori")
    if up.shape[0] != gt.shape[0]:
        raise ValidationError(
            f"up and gt must be the same size, got {up.shape[0]} vs {gt.shape[0]}"
        )
    if up.shape[0] % ori.shape[0] != 0:
        raise ValidationError(
            f"up size {up.shape[0]} is not an integer multiple of ori size {ori.shape[0]}"
        )
    w_rec, w_uni, w_id = (float(w) for w in weights)
    config = config or MetricConfig()
    rec = reconstruction_loss(up, gt, solver=solver)
    uni = uniformity(up, config)
    ident = identity_distribution_loss(up, ori, solver=solver)
    total = w_rec * rec + w_uni * uni + w_id * ident
    return LossReport(
        reconstruction=rec,
        uniformity=uni,
        identity=ident,
        weights=(w_rec, w_uni, w_id),
        total=total,
        solver=solver,
    )


@dataclass
class MetricReport:
    """All metric values plus the configuration that produced them."""

    cd: float | None = None
    hd: float | None = None
    p2f_mean: float | None = None
    p2f_max: float | None = None
    uniformity: float | None = None
    hf_cd: float | None = None
    hf_hd: float | None = None
    config: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)

    CSV_COLUMNS = METRIC_NAMES

    def values(self):
        return {
            "cd": self.cd,
            "hd": self.hd,
            "p2f": self.p2f_mean,
            "p2f_max": self.p2f_max,
            "uniformity": self.uniformity,
            "hf_cd": self.hf_cd,
            "hf_hd": self.hf_hd,
        }

    def to_json_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "values": self.values(),
            "config": self.config,
            "inputs": self.inputs,
        }

    def to_json(self):
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    def csv_row(self):
        cells = []
        for name in self.CSV_COLUMNS:
            value = self.values()[name]
            cells.append("" if value is None else repr(value))
        return ",".join(cells)

    def to_csv(self):
        return ",".join(self.CSV_COLUMNS) + "\n" + self.csv_row() + "\n"


def evaluate_all(up, gt, mesh=None, config=None, which=None, inputs=None):
    """Compute the requested metrics in one shared normalized frame.

    ``which`` selects a subset of :data:`METRIC_NAMES`; by default every
    metric is computed, with p2f omitted when no mesh is given. Both clouds
    (and the mesh) are mapped through the ground-truth cloud's unit-sphere
    transform first, and the HF subsets are extracted once per cloud.
    """
    up = check_points(up, "up")
    gt = check_points(gt, "gt")
    config = config or MetricConfig()

    if which is None:
        selected = [m for m in METRIC_NAMES if m != "p2f" or mesh is not None]
    else:
        selected = list(which)
        unknown = set(selected) - set(METRIC_NAMES)
        if unknown:
            raise ValidationError(f"unknown metric(s): {sorted(unknown)}")
        if "p2f" in selected and mesh is None:
            raise ValidationError("p2f requested but no mesh given")

    transform = normalize_unit_sphere(gt)[1]
    up_n, gt_n = transform.apply(up), transform.apply(gt)

    report = MetricReport(
        config={
            "metrics": config.to_dict(n=up_n.shape[0]),
            "normalization": {"frame": "gt-unit-sphere",
                              "centroid": transform.centroid.tolist(),
                              "scale": transform.scale},
            "which": selected,
        },
        inputs=inputs or {},
    )
    if "cd" in selected:
        report.cd = chamfer(up_n, gt_n)
    if "hd" in selected:
        report.hd = hausdorff(up_n, gt_n)
    if "p2f" in selected:
        mean, peak = point_to_surface(up_n, mesh.transformed(transform))
        report.p2f_mean, report.p2f_max = mean, peak
    if "uniformity" in selected:
        report.uniformity = uniformity(up_n, config)
    if "hf_cd" in selected or "hf_hd" in selected:
        e_up, e_gt = _hf_pair(up_n, gt_n, config, normalize=False)
        if "hf_cd" in selected:
            report.hf_cd = chamfer(e_up.points, e_gt.points)
        if "hf_hd" in selected:
            report.hf_hd = hausdorff(e_up.points, e_gt.points)
    return report
