"""Command-line interface.

Exit codes: 2 argument errors, 3 I/O and parse failures, 4 numeric or
degenerate-geometry failures, 5 plugin failures, 1 partial batch failure.
"""

import functools
import json
import shlex
import sys
from pathlib import Path

import click

from . import __version__
from .errors import (
    DegenerateGeometryError,
    ParseError,
    PluginError,
    ValidationError,
)
from .graph import (
    GraphParams,
    SmoothDenoise,
    TrimDenoise,
    denoise_points,
    extract_hf_points,
)
from .io import has_faces, load_cloud, load_mesh, save_cloud
from .manifest import build_manifest, write_json_atomic, write_text_atomic
from .metrics import (
    METRIC_NAMES,
    DEFAULT_LOSS_WEIGHTS,
    MetricConfig,
    evaluate_all,
    loss_report,
)
from .pipeline import (
    PipelineConfig,
    UpsamplerPlugin,
    batch_evaluate,
    ingest_dataset,
    upsample_cloud,
)
from .sampling import FPS_STARTS, fps, monte_carlo_sample, poisson_disk_sample

EXIT_ARGUMENT = 2
EXIT_IO = 3
EXIT_NUMERIC = 4
EXIT_PLUGIN = 5


def handle_errors(fn):
    """Map library exceptions onto the documented exit-code taxonomy."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except PluginError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_PLUGIN)
        except DegenerateGeometryError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_NUMERIC)
        except ParseError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_IO)
        except ValidationError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_ARGUMENT)
        except OSError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_IO)

    return wrapper


def _graph_params(epsilon, sigma, fallback_k):
    return GraphParams(epsilon=epsilon, sigma=sigma, fallback_k=fallback_k)


def _denoise_policy(policy, kappa, beta, iterations):
    if policy == "trim":
        return TrimDenoise(kappa=kappa)
    if policy == "smooth":
        return SmoothDenoise(beta=beta, iterations=iterations)
    raise ValidationError(f"unknown denoise policy {policy!r}")


def _write_cloud_with_manifest(points, out_path, fmt, manifest, scores=None):
    save_cloud(points, out_path, format=fmt, scores=scores)
    write_json_atomic(f"{out_path}.manifest.json", manifest.to_dict())


graph_options = [
    click.option("--epsilon", type=float, default=0.5, show_default=True,
                 help="Neighborhood ball radius (unit-sphere coordinates)."),
    click.option("--sigma", type=float, default=None,
                 help="Gaussian kernel width [default: epsilon/2]."),
    click.option("--fallback-k", type=int, default=1, show_default=True,
                 help="Neighbors wired to otherwise isolated points."),
]


def add_options(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn
    return wrap


@click.group()
@click.version_option(version=__version__, prog_name="pointfreq")
def main():
    """Frequency-aware point cloud upsampling evaluation toolkit."""


# --- sample -------------------------------------------------------------


@main.group()
def sample():
    """Draw point samples from meshes or clouds."""


@sample.command("poisson")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--n", "count", required=True, type=int, help="Output point count.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["xyz", "ply", "ply-ascii"]),
              default=None, help="Output format [default: from suffix].")
@handle_errors
def sample_poisson(in_path, count, seed, out_path, fmt):
    """Poisson-disk sample a mesh surface (exact output count)."""
    mesh = load_mesh(in_path)
    points = poisson_disk_sample(mesh, count, seed=seed)
    manifest = build_manifest(
        "sample poisson", {"n": count, "seed": seed},
        {"mesh": in_path}, seed=seed,
    )
    _write_cloud_with_manifest(points, out_path, fmt, manifest)


@sample.command("monte-carlo")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--n", "count", required=True, type=int)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["xyz", "ply", "ply-ascii"]),
              default=None)
@handle_errors
def sample_monte_carlo(in_path, count, seed, out_path, fmt):
    """Uniformly sample a mesh surface, or a cloud without replacement."""
    source = load_mesh(in_path) if has_faces(in_path) else load_cloud(in_path)
    points = monte_carlo_sample(source, count, seed=seed)
    manifest = build_manifest(
        "sample monte-carlo", {"n": count, "seed": seed},
        {"source": in_path}, seed=seed,
    )
    _write_cloud_with_manifest(points, out_path, fmt, manifest)


@sample.command("fps")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--n", "count", required=True, type=int)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--start", type=click.Choice(FPS_STARTS), default="centroid",
              show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["xyz", "ply", "ply-ascii"]),
              default=None)
@handle_errors
def sample_fps(in_path, count, seed, start, out_path, fmt):
    """Farthest point sampling of a cloud."""
    cloud = load_cloud(in_path)
    indices = fps(cloud, count, start=start, seed=seed)
    manifest = build_manifest(
        "sample fps", {"n": count, "seed": seed, "start": start},
        {"cloud": in_path}, seed=seed,
    )
    _write_cloud_with_manifest(cloud[indices], out_path, fmt, manifest)


# --- hf -----------------------------------------------------------------


@main.group()
def hf():
    """High-frequency point extraction and denoising."""


@hf.command("extract")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--m", "count", required=True, type=int,
              help="Number of HF points to keep.")
@add_options(graph_options)
@click.option("--normalize/--no-normalize", default=True, show_default=True,
              help="Build the graph on the unit-sphere-normalized cloud.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--scores/--no-scores", "with_scores", default=False,
              help="Append the variation score as a fourth XYZ column.")
@click.option("--json", "json_path", type=click.Path(), default=None,
              help="Also write indices and scores as JSON.")
@handle_errors
def hf_extract(in_path, count, epsilon, sigma, fallback_k, normalize,
               out_path, with_scores, json_path):
    """Extract the top-M points by high-pass graph filter response."""
    cloud = load_cloud(in_path)
    params = _graph_params(epsilon, sigma, fallback_k)
    extraction = extract_hf_points(cloud, count, params, normalize=normalize)
    config = {"m": count, "graph": params.to_dict(), "normalize": normalize}
    manifest = build_manifest("hf extract", config, {"cloud": in_path})
    save_cloud(extraction.points, out_path, format="xyz",
               scores=extraction.scores if with_scores else None)
    write_json_atomic(f"{out_path}.manifest.json", manifest.to_dict())
    if json_path:
        write_json_atomic(json_path, {
            "manifest": manifest.to_dict(),
            "indices": extraction.indices.tolist(),
            "scores": extraction.scores.tolist(),
        })


@hf.command("denoise")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--policy", type=click.Choice(["trim", "smooth"]), default="trim",
              show_default=True)
@click.option("--kappa", type=float, default=3.0, show_default=True)
@click.option("--beta", type=float, default=0.5, show_default=True)
@click.option("--iterations", type=int, default=1, show_default=True)
@add_options(graph_options)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["xyz", "ply", "ply-ascii"]),
              default=None)
@handle_errors
def hf_denoise(in_path, policy, kappa, beta, iterations, epsilon, sigma,
               fallback_k, out_path, fmt):
    """Remove (trim) or attenuate (smooth) high-frequency noise."""
    cloud = load_cloud(in_path)
    params = _graph_params(epsilon, sigma, fallback_k)
    chosen = _denoise_policy(policy, kappa, beta, iterations)
    cleaned = denoise_points(cloud, params, chosen)
    manifest = build_manifest(
        "hf denoise", {"denoise": chosen.to_dict(), "graph": params.to_dict()},
        {"cloud": in_path},
    )
    _write_cloud_with_manifest(cleaned, out_path, fmt, manifest)


# --- metrics ------------------------------------------------------------


@main.command("metrics")
@click.option("--up", "up_path", required=True, type=click.Path(exists=True))
@click.option("--gt", "gt_path", required=True, type=click.Path(exists=True))
@click.option("--mesh", "mesh_path", type=click.Path(exists=True), default=None)
@click.option("--which", default=None,
              help=f"Comma-separated subset of {','.join(METRIC_NAMES)}.")
@click.option("--hf-m", type=int, default=2048, show_default=True)
@click.option("--r-q-sq", type=float, default=0.012, show_default=True)
@click.option("--seed-count", type=int, default=None,
              help="Uniformity ball seeds [default: 5% of cloud size].")
@add_options(graph_options)
@click.option("--json", "json_path", type=click.Path(), default=None)
@click.option("--csv", "csv_path", type=click.Path(), default=None)
@handle_errors
def metrics_cmd(up_path, gt_path, mesh_path, which, hf_m, r_q_sq, seed_count,
                epsilon, sigma, fallback_k, json_path, csv_path):
    """Evaluate an upsampled cloud against its ground truth."""
    selected = None
    if which is not None:
        selected = [w.strip() for w in which.split(",") if w.strip()]
    up = load_cloud(up_path)
    gt = load_cloud(gt_path)
    mesh = load_mesh(mesh_path) if mesh_path else None
    config = MetricConfig(
        r_q_sq=r_q_sq, seed_count=seed_count, hf_m=hf_m,
        graph=_graph_params(epsilon, sigma, fallback_k),
    )
    report = evaluate_all(
        up, gt, mesh=mesh, config=config, which=selected,
        inputs={"up": up_path, "gt": gt_path, "mesh": mesh_path},
    )
    manifest = build_manifest(
        "metrics", report.config,
        {"up": up_path, "gt": gt_path, "mesh": mesh_path},
    )
    payload = report.to_json_dict()
    payload["manifest"] = manifest.to_dict()
    if json_path:
        write_json_atomic(json_path, payload)
    if csv_path:
        write_text_atomic(csv_path, report.to_csv())
    if not json_path and not csv_path:
        click.echo(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for name, value in report.values().items():
            if value is not None:
                click.echo(f"{name}: {value:.9g}")


@main.command("losses")
@click.option("--up", "up_path", required=True, type=click.Path(exists=True))
@click.option("--gt", "gt_path", required=True, type=click.Path(exists=True))
@click.option("--ori", "ori_path", required=True, type=click.Path(exists=True))
@click.option("--w-rec", type=float, default=DEFAULT_LOSS_WEIGHTS[0], show_default=True)
@click.option("--w-uni", type=float, default=DEFAULT_LOSS_WEIGHTS[1], show_default=True)
@click.option("--w-id", type=float, default=DEFAULT_LOSS_WEIGHTS[2], show_default=True)
@click.option("--solver", type=click.Choice(["exact", "auction", "auto"]),
              default="auto", show_default=True)
@click.option("--r-q-sq", type=float, default=0.012, show_default=True)
@click.option("--seed-count", type=int, default=None)
@click.option("--json", "json_path", type=click.Path(), default=None)
@handle_errors
def losses_cmd(up_path, gt_path, ori_path, w_rec, w_uni, w_id, solver,
               r_q_sq, seed_count, json_path):
    """Weighted non-adversarial loss breakdown for an upsampled cloud."""
    up = load_cloud(up_path)
    gt = load_cloud(gt_path)
    ori = load_cloud(ori_path)
    config = MetricConfig(r_q_sq=r_q_sq, seed_count=seed_count)
    report = loss_report(up, gt, ori, config=config,
                         weights=(w_rec, w_uni, w_id), solver=solver)
    manifest = build_manifest(
        "losses",
        {"weights": [w_rec, w_uni, w_id], "solver": solver, "r_q_sq": r_q_sq,
         "seed_count": seed_count},
        {"up": up_path, "gt": gt_path, "ori": ori_path},
    )
    payload = report.to_json_dict()
    payload["manifest"] = manifest.to_dict()
    if json_path:
        write_json_atomic(json_path, payload)
    else:
        click.echo(json.dumps(payload, indent=2, sort_keys=True))


# --- upsample -----------------------------------------------------------


def _pipeline_config(ratio, patch_size, coverage, builtin, plugin, timeout,
                     no_denoise, policy, kappa, beta, iterations,
                     epsilon, sigma, fallback_k, seed, jobs):
    if plugin:
        upsampler = UpsamplerPlugin(argv=tuple(shlex.split(plugin)), timeout=timeout)
    else:
        upsampler = builtin
    denoise = None if no_denoise else _denoise_policy(policy, kappa, beta, iterations)
    return PipelineConfig(
        patch_size=patch_size, ratio=ratio, coverage_factor=coverage,
        denoise=denoise, graph=_graph_params(epsilon, sigma, fallback_k),
        upsampler=upsampler, seed=seed, workers=jobs,
    )


upsample_options = [
    click.option("--r", "ratio", type=int, default=4, show_default=True,
                 help="Upsampling ratio."),
    click.option("--patch-size", type=int, default=256, show_default=True),
    click.option("--coverage", type=float, default=3.0, show_default=True,
                 help="Expected per-point patch multiplicity."),
    click.option("--builtin", type=click.Choice(["duplicate", "midpoint"]),
                 default="duplicate", show_default=True),
    click.option("--plugin", default=None,
                 help="External upsampler command (overrides --builtin)."),
    click.option("--timeout", type=float, default=60.0, show_default=True,
                 help="Per-patch plugin timeout in seconds."),
    click.option("--no-denoise", is_flag=True, default=False),
    click.option("--policy", type=click.Choice(["trim", "smooth"]),
                 default="trim", show_default=True),
    click.option("--kappa", type=float, default=3.0, show_default=True),
    click.option("--beta", type=float, default=0.5, show_default=True),
    click.option("--iterations", type=int, default=1, show_default=True),
    click.option("--seed", type=int, default=0, show_default=True),
    click.option("--jobs", type=int, default=1, show_default=True),
]


@main.command("upsample")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["xyz", "ply", "ply-ascii"]),
              default=None)
@add_options(upsample_options)
@add_options(graph_options)
@handle_errors
def upsample_cmd(in_path, out_path, fmt, ratio, patch_size, coverage, builtin,
                 plugin, timeout, no_denoise, policy, kappa, beta, iterations,
                 seed, jobs, epsilon, sigma, fallback_k):
    """Patch-fusion upsampling of a cloud with a builtin or plugin upsampler."""
    cloud = load_cloud(in_path)
    config = _pipeline_config(ratio, patch_size, coverage, builtin, plugin,
                              timeout, no_denoise, policy, kappa, beta,
                              iterations, epsilon, sigma, fallback_k, seed, jobs)
    result = upsample_cloud(cloud, config)
    manifest = build_manifest("upsample", config.to_dict(), {"cloud": in_path},
                              seed=seed)
    _write_cloud_with_manifest(result, out_path, fmt, manifest)


# --- bench --------------------------------------------------------------


@main.command("bench")
@click.option("--dataset", required=True, type=click.Path(exists=True),
              help="Root with input/, gt/ and optional mesh/ subdirectories.")
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="JSON config file (overridden by flags).")
@click.option("--out-dir", type=click.Path(), default=None,
              help="Report directory [default: DATASET/results].")
@add_options(upsample_options)
@add_options(graph_options)
@click.option("--hf-m", type=int, default=2048, show_default=True)
@click.option("--r-q-sq", type=float, default=0.012, show_default=True)
@handle_errors
def bench_cmd(dataset, config_path, out_dir, ratio, patch_size, coverage,
              builtin, plugin, timeout, no_denoise, policy, kappa, beta,
              iterations, seed, jobs, epsilon, sigma, fallback_k, hf_m, r_q_sq):
    """Ingest a dataset, upsample every pair and emit CSV + JSON reports."""
    ctx = click.get_current_context()
    overrides = {}
    if config_path:
        overrides = json.loads(Path(config_path).read_text())

    def resolved(name, flag_value):
        # precedence: defaults < config file < explicit flags
        source = ctx.get_parameter_source(name)
        if source == click.core.ParameterSource.COMMANDLINE:
            return flag_value
        return overrides.get(name, flag_value)

    ratio = resolved("ratio", ratio)
    patch_size = resolved("patch_size", patch_size)
    coverage = resolved("coverage", coverage)
    builtin = resolved("builtin", builtin)
    plugin = resolved("plugin", plugin)
    timeout = resolved("timeout", timeout)
    no_denoise = resolved("no_denoise", no_denoise)
    policy = resolved("policy", policy)
    kappa = resolved("kappa", kappa)
    beta = resolved("beta", beta)
    iterations = resolved("iterations", iterations)
    seed = resolved("seed", seed)
    jobs = resolved("jobs", jobs)
    epsilon = resolved("epsilon", epsilon)
    sigma = resolved("sigma", sigma)
    fallback_k = resolved("fallback_k", fallback_k)
    hf_m = resolved("hf_m", hf_m)
    r_q_sq = resolved("r_q_sq", r_q_sq)

    pairs, warnings = ingest_dataset(dataset)
    for warning in warnings:
        click.echo(f"warning: {warning}", err=True)
    if not pairs:
        raise ValidationError(f"no complete input/gt pairs under {dataset}")

    pipeline_config = _pipeline_config(
        ratio, patch_size, coverage, builtin, plugin, timeout, no_denoise,
        policy, kappa, beta, iterations, epsilon, sigma, fallback_k, seed, 1,
    )
    metric_config = MetricConfig(
        r_q_sq=r_q_sq, hf_m=hf_m,
        graph=_graph_params(epsilon, sigma, fallback_k),
    )
    result = batch_evaluate(pairs, pipeline_config, metric_config, jobs=jobs)

    out_base = Path(out_dir) if out_dir else Path(dataset) / "results"
    out_base.mkdir(parents=True, exist_ok=True)
    manifest = build_manifest(
        "bench",
        {"pipeline": pipeline_config.to_dict(),
         "metrics": metric_config.to_dict(),
         "jobs": jobs, "dataset": str(dataset)},
        {pair.stem: pair.input_path for pair in pairs},
        seed=seed,
    )
    payload = result.to_json_dict()
    payload["manifest"] = manifest.to_dict()
    payload["warnings"] = warnings
    write_json_atomic(out_base / "aggregate.json", payload)
    write_text_atomic(out_base / "pairs.csv", result.to_csv())

    click.echo(f"evaluated {len(result.reports)} pair(s), "
               f"{len(result.failures)} failure(s)")
    for name, value in result.aggregate.items():
        if value is not None:
            click.echo(f"mean {name}: {value:.9g}")
    if result.failures:
        for stem, message in sorted(result.failures.items()):
            click.echo(f"failed {stem}: {message}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
