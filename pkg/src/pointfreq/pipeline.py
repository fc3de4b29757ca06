"""Test-time patch-fusion pipeline around a pluggable upsampler.

A cloud is covered by overlapping local patches (FPS seeds, k-nearest
neighborhoods), each patch is unit-sphere normalized, upsampled by a builtin
or an external plugin process, optionally denoised by the graph filter,
mapped back into the original frame, and the union is trimmed to exactly
``ratio * N`` points by farthest point sampling.

Plugin protocol: the plugin is spawned once per patch with arguments
``--ratio <r> --count <patch_size>``, reads the normalized patch as ASCII XYZ
on stdin (end-of-stream terminated), and must write exactly r * patch_size
XYZ lines to stdout with exit code 0. Stderr is captured into diagnostics.
"""

import math
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import PluginError, ValidationError
from .graph import GraphParams, SmoothDenoise, TrimDenoise, denoise_points
from .io import load_cloud, load_mesh
from .metrics import MetricConfig, evaluate_all
from .sampling import fps
from .spatial import SpatialIndex, normalize_unit_sphere
from .validation import check_count, check_points

BUILTIN_UPSAMPLERS = ("duplicate", "midpoint")


@dataclass(frozen=True)
class UpsamplerPlugin:
    """External upsampler: an executable invoked once per patch."""

    argv: tuple
    timeout: float = 60.0

    def __post_init__(self):
        argv = tuple(str(a) for a in self.argv)
        if not argv:
            raise ValidationError("plugin argv must not be empty")
        object.__setattr__(self, "argv", argv)

    def to_dict(self):
        return {"argv": list(self.argv), "timeout": self.timeout}


@dataclass(frozen=True)
class PipelineConfig:
    patch_size: int = 256
    ratio: int = 4
    coverage_factor: float = 3.0
    denoise: TrimDenoise | SmoothDenoise | None = field(default_factory=TrimDenoise)
    graph: GraphParams = field(default_factory=GraphParams)
    upsampler: str | UpsamplerPlugin = "duplicate"
    seed: int = 0
    workers: int = 1
    fps_start: str = "centroid"

    def __post_init__(self):
        check_count(self.patch_size, "patch_size", 8)
        check_count(self.ratio, "ratio", 1)
        if self.coverage_factor < 1:
            raise ValidationError("coverage_factor must be >= 1")
        check_count(self.workers, "workers", 1)
        if isinstance(self.upsampler, str) and self.upsampler not in BUILTIN_UPSAMPLERS:
            raise ValidationError(
                f"unknown builtin upsampler {self.upsampler!r}; "
                f"choose from {BUILTIN_UPSAMPLERS} or pass an UpsamplerPlugin"
            )

    def to_dict(self):
        ups = (self.upsampler if isinstance(self.upsampler, str)
               else self.upsampler.to_dict())
        return {
            "patch_size": self.patch_size,
            "ratio": self.ratio,
            "coverage_factor": self.coverage_factor,
            "denoise": None if self.denoise is None else self.denoise.to_dict(),
            "graph": self.graph.to_dict(),
            "upsampler": ups,
            "seed": self.seed,
            "workers": self.workers,
            "fps_start": self.fps_start,
        }


@dataclass(frozen=True)
class Patch:
    points: np.ndarray    # unit-sphere normalized patch
    indices: np.ndarray   # source-cloud indices of the members
    transform: object     # NormalizationTransform back into the source frame


def extract_patches(points, config=None):
    """Cover the cloud with overlapping normalized patches.

    Seed count is ceil(coverage_factor * N / patch_size); each patch holds the
    seed's patch_size nearest neighbors.
    """
    pts = check_points(points)
    config = config or PipelineConfig()
    n = pts.shape[0]
    if n < config.patch_size:
        raise ValidationError(
            f"cloud has {n} points but patch_size is {config.patch_size}"
        )
    seed_count = min(
        int(math.ceil(config.coverage_factor * n / config.patch_size)), n
    )
    seeds = fps(pts, seed_count, start=config.fps_start, seed=config.seed)
    index = SpatialIndex(pts)
    patches = []
    for seed in seeds:
        members = index.knn(pts[seed], config.patch_size)
        normalized, transform = normalize_unit_sphere(pts[members])
        patches.append(Patch(points=normalized, indices=members, transform=transform))
    return patches


def _upsample_duplicate(pts, ratio):
    return np.repeat(pts, ratio, axis=0)


def _upsample_midpoint(pts, ratio):
    if ratio == 1:
        return pts.copy()
    index = SpatialIndex(pts)
    nearest = np.array(
        [next(j for j in index.knn(p, min(2, len(pts))) if j != i)
         for i, p in enumerate(pts)]
        if len(pts) > 1 else [0]
    )
    t = (np.arange(1, ratio) / ratio)[None, :, None]
    towards = pts[nearest]
    blended = pts[:, None, :] * (1.0 - t) + towards[:, None, :] * t
    out = np.concatenate([pts, blended.reshape(-1, 3)], axis=0)
    target = ratio * len(pts)
    if len(out) > target:
        out = out[fps(out, target, start="centroid")]
    return out


def _run_plugin(plugin, pts, ratio):
    text = "\n".join(f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in pts) + "\n"
    cmd = list(plugin.argv) + ["--ratio", str(ratio), "--count", str(len(pts))]
    try:
        proc = subprocess.run(
            cmd, input=text, capture_output=True, text=True, timeout=plugin.timeout
        )
    except subprocess.TimeoutExpired:
        raise PluginError(f"plugin timed out after {plugin.timeout}s")
    except OSError as exc:
        raise PluginError(f"plugin could not be spawned: {exc}")
    if proc.returncode != 0:
        raise PluginError(f"plugin exited with code {proc.returncode}",
                          stderr=proc.stderr)
    rows = []
    for lineno, line in enumerate(proc.stdout.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        tokens = stripped.split()
        try:
            rows.append((float(tokens[0]), float(tokens[1]), float(tokens[2])))
        except (IndexError, ValueError):
            raise PluginError(f"malformed plugin output on line {lineno}",
                              stderr=proc.stderr)
    expected = ratio * len(pts)
    if len(rows) != expected:
        raise PluginError(
            f"plugin returned {len(rows)} points, expected {expected}",
            stderr=proc.stderr,
        )
    out = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(out)):
        raise PluginError("plugin output contains non-finite coordinates",
                          stderr=proc.stderr)
    return out


def run_upsampler(patch_points, ratio, upsampler="duplicate"):
    """Upsample one normalized patch to exactly ratio * len(patch) points."""
    pts = check_points(patch_points, "patch")
    ratio = check_count(ratio, "ratio", 1)
    if isinstance(upsampler, UpsamplerPlugin):
        return _run_plugin(upsampler, pts, ratio)
    if upsampler == "duplicate":
        return _upsample_duplicate(pts, ratio)
    if upsampler == "midpoint":
        return _upsample_midpoint(pts, ratio)
    raise ValidationError(f"unknown upsampler {upsampler!r}")


def fuse_patches(upsampled, target_count):
    """Map patches back to the source frame, concatenate, FPS-trim to target.

    ``upsampled`` is a sequence of (points, transform) in patch order; the
    concatenation order is fixed so the final FPS is deterministic.
    """
    target_count = check_count(target_count, "target_count", 1)
    parts = [transform.invert(points) for points, transform in upsampled]
    if not parts:
        raise ValidationError("no patches to fuse")
    fused = np.concatenate(parts, axis=0)
    if fused.shape[0] < target_count:
        raise ValidationError(
            f"only {fused.shape[0]} fused points for a target of {target_count}"
        )
    return fused[fps(fused, target_count, start="centroid")]


def upsample_cloud(points, config=None):
    """Full patch-fusion upsampling of a cloud to exactly ratio * N points."""
    pts = check_points(points)
    config = config or PipelineConfig()
    patches = extract_patches(pts, config)

    def process(item):
        patch_index, patch = item
        try:
            up = run_upsampler(patch.points, config.ratio, config.upsampler)
            if config.denoise is not None:
                up = denoise_points(up, config.graph, config.denoise)
        except PluginError as exc:
            raise PluginError(str(exc), patch_index=patch_index) from exc
        return up, patch.transform

    items = list(enumerate(patches))
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            upsampled = list(pool.map(process, items))
    else:
        upsampled = [process(item) for item in items]
    return fuse_patches(upsampled, config.ratio * pts.shape[0])


@dataclass(frozen=True)
class DatasetPair:
    stem: str
    input_path: Path
    gt_path: Path
    mesh_path: Path | None = None


def ingest_dataset(root, input_dir="input", gt_dir="gt", mesh_dir="mesh",
                   cloud_exts=(".xyz", ".ply"), mesh_exts=(".off", ".ply")):
    """Pair input/GT/mesh files by shared stem under a dataset root.

    Returns (pairs, warnings); unpaired stems produce warning strings rather
    than failures. Pairs are ordered lexicographically by stem.
    """
    root = Path(root)
    if not root.is_dir():
        raise ValidationError(f"dataset root {root} is not a directory")

    def scan(subdir, exts):
        found = {}
        base = root / subdir
        if not base.is_dir():
            return found
        for path in sorted(base.iterdir()):
            if path.suffix.lower() in exts and path.is_file():
                found.setdefault(path.stem, path)
        return found

    inputs = scan(input_dir, cloud_exts)
    gts = scan(gt_dir, cloud_exts)
    meshes = scan(mesh_dir, mesh_exts)

    pairs, warnings = [], []
    for stem in sorted(inputs):
        if stem not in gts:
            warnings.append(f"{stem}: no ground-truth file, skipped")
            continue
        pairs.append(DatasetPair(
            stem=stem,
            input_path=inputs[stem],
            gt_path=gts[stem],
            mesh_path=meshes.get(stem),
        ))
    for stem in sorted(set(gts) - set(inputs)):
        warnings.append(f"{stem}: ground truth without an input file, skipped")
    return pairs, warnings


@dataclass
class BatchResult:
    reports: dict            # stem -> MetricReport
    failures: dict           # stem -> error message
    aggregate: dict          # metric name -> mean over successful pairs

    CSV_COLUMNS = ("stem", "cd", "hd", "p2f", "uniformity", "hf_cd", "hf_hd")

    def to_csv(self):
        lines = [",".join(self.CSV_COLUMNS)]
        for stem in sorted(self.reports):
            lines.append(f"{stem}," + self.reports[stem].csv_row())
        return "\n".join(lines) + "\n"

    def to_json_dict(self):
        return {
            "aggregate": self.aggregate,
            "pairs": {stem: report.to_json_dict()
                      for stem, report in sorted(self.reports.items())},
            "failures": dict(sorted(self.failures.items())),
            "failed_count": len(self.failures),
        }


def _evaluate_pair(pair, pipeline_config, metric_config):
    cloud = load_cloud(pair.input_path)
    gt = load_cloud(pair.gt_path)
    mesh = load_mesh(pair.mesh_path) if pair.mesh_path else None
    upsampled = upsample_cloud(cloud, pipeline_config)
    return evaluate_all(
        upsampled, gt, mesh=mesh, config=metric_config,
        inputs={"input": str(pair.input_path), "gt": str(pair.gt_path),
                "mesh": str(pair.mesh_path) if pair.mesh_path else None},
    )


def batch_evaluate(pairs, pipeline_config=None, metric_config=None, jobs=1):
    """Upsample and score every dataset pair; aggregate by arithmetic mean.

    Per-pair failures are recorded and excluded from the aggregate.
    """
    if not pairs:
        raise ValidationError("batch_evaluate needs at least one dataset pair")
    pipeline_config = pipeline_config or PipelineConfig()
    metric_config = metric_config or MetricConfig()
    jobs = check_count(jobs, "jobs", 1)

    def run(pair):
        try:
            return pair.stem, _evaluate_pair(pair, pipeline_config, metric_config), None
        except Exception as exc:  # recorded, not fatal to the batch
            return pair.stem, None, f"{type(exc).__name__}: {exc}"

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(run, pairs))
    else:
        outcomes = [run(pair) for pair in pairs]

    reports, failures = {}, {}
    for stem, report, error in outcomes:
        if error is None:
            reports[stem] = report
        else:
            failures[stem] = error

    aggregate = {}
    for name in ("cd", "hd", "p2f", "uniformity", "hf_cd", "hf_hd"):
        values = [r.values()[name] for r in reports.values()
                  if r.values()[name] is not None]
        aggregate[name] = float(np.mean(values)) if values else None
    return BatchResult(reports=reports, failures=failures, aggregate=aggregate)
