import numpy as np
import pytest

from pointfreq import (
    GraphParams,
    MetricConfig,
    PipelineConfig,
    PluginError,
    TrimDenoise,
    UpsamplerPlugin,
    ValidationError,
    batch_evaluate,
    chamfer,
    extract_patches,
    fuse_patches,
    hf_hd,
    ingest_dataset,
    point_to_surface,
    run_upsampler,
    save_cloud,
    upsample_cloud,
)
from pointfreq.pipeline import DatasetPair
from conftest import (
    DUPLICATING_PLUGIN,
    ECHO_PLUGIN,
    FAILING_PLUGIN,
    NOISY_PLUGIN,
    icosphere,
    sphere_cloud,
    write_plugin,
)


# --- patches ---------------------------------------------------------------


def test_single_patch_when_cloud_equals_patch_size(rng):
    pts = rng.random((64, 3))
    config = PipelineConfig(patch_size=64, coverage_factor=1.0)
    patches = extract_patches(pts, config)
    assert len(patches) == 1
    assert sorted(patches[0].indices.tolist()) == list(range(64))


def test_patch_count_and_coverage():
    for seed in range(20):
        pts = sphere_cloud(512, seed=seed)
        config = PipelineConfig(patch_size=128, coverage_factor=3.0)
        patches = extract_patches(pts, config)
        assert len(patches) == 12  # ceil(3 * 512 / 128)
        counts = np.zeros(512, dtype=int)
        for patch in patches:
            assert len(patch.indices) == 128
            counts[patch.indices] += 1
        assert (counts >= 1).all()
        # multiplicity distribution at factor 3 leaves a few percent singly
        # covered; factor 4 (below) clears 99%
        assert (counts >= 2).mean() >= 0.95


def test_two_patch_coverage_at_factor_four():
    for seed in range(10):
        pts = sphere_cloud(512, seed=seed)
        config = PipelineConfig(patch_size=128, coverage_factor=4.0)
        counts = np.zeros(512, dtype=int)
        for patch in extract_patches(pts, config):
            counts[patch.indices] += 1
        assert (counts >= 2).mean() >= 0.99


def test_protocol_patch_size():
    pts = sphere_cloud(2048, seed=0)
    patches = extract_patches(pts, PipelineConfig())
    assert len(patches) == 24
    assert all(len(p.points) == 256 for p in patches)


def test_patches_are_normalized(rng):
    pts = rng.random((300, 3)) * 50.0
    patches = extract_patches(pts, PipelineConfig(patch_size=32))
    for patch in patches:
        radii = np.linalg.norm(patch.points, axis=1)
        assert radii.max() == pytest.approx(1.0, abs=1e-9)
        back = patch.transform.invert(patch.points)
        np.testing.assert_allclose(back, pts[patch.indices], rtol=1e-12, atol=1e-9)


def test_patch_size_larger_than_cloud_errors(rng):
    with pytest.raises(ValidationError):
        extract_patches(rng.random((10, 3)), PipelineConfig(patch_size=16))


# --- builtin upsamplers ------------------------------------------------------


def test_duplicate_copies_each_point(rng):
    pts = rng.random((256, 3))
    out = run_upsampler(pts, 4, "duplicate")
    assert out.shape == (1024, 3)
    assert set(map(tuple, out)) == set(map(tuple, pts))


def test_midpoint_two_points_hand_case():
    pts = np.array([[0.0, 0, 0], [1.0, 0, 0]])
    out = run_upsampler(pts, 2, "midpoint")
    assert out.shape == (4, 3)
    rows = sorted(map(tuple, out))
    assert rows == [(0.0, 0.0, 0.0), (0.5, 0.0, 0.0), (0.5, 0.0, 0.0), (1.0, 0.0, 0.0)]


def test_midpoint_keeps_originals_and_count(rng):
    pts = rng.random((64, 3))
    out = run_upsampler(pts, 4, "midpoint")
    assert out.shape == (256, 3)
    assert set(map(tuple, pts)) <= set(map(tuple, out))


# --- plugin protocol ----------------------------------------------------------


def test_plugin_duplicate_matches_builtin(tmp_path, rng):
    argv = write_plugin(tmp_path, DUPLICATING_PLUGIN)
    pts = rng.random((32, 3))
    plugin_out = run_upsampler(pts, 4, UpsamplerPlugin(argv=argv))
    np.testing.assert_allclose(plugin_out, run_upsampler(pts, 4, "duplicate"),
                               atol=1e-15)


def test_plugin_echo_wrong_cardinality(tmp_path, rng):
    argv = write_plugin(tmp_path, ECHO_PLUGIN)
    with pytest.raises(PluginError, match="expected 128"):
        run_upsampler(rng.random((32, 3)), 4, UpsamplerPlugin(argv=argv))


def test_plugin_nonzero_exit(tmp_path, rng):
    argv = write_plugin(tmp_path, FAILING_PLUGIN)
    with pytest.raises(PluginError, match="deliberate failure"):
        run_upsampler(rng.random((16, 3)), 2, UpsamplerPlugin(argv=argv))


def test_plugin_timeout(tmp_path, rng):
    argv = write_plugin(tmp_path, "import time\ntime.sleep(30)\n", name="slow.py")
    with pytest.raises(PluginError, match="timed out"):
        run_upsampler(rng.random((8, 3)), 2, UpsamplerPlugin(argv=argv, timeout=1.0))


def test_plugin_malformed_output(tmp_path, rng):
    argv = write_plugin(tmp_path, "print('not a number at all')\n", name="bad.py")
    with pytest.raises(PluginError, match="malformed"):
        run_upsampler(rng.random((8, 3)), 1, UpsamplerPlugin(argv=argv))


def test_plugin_failure_names_patch_index(tmp_path):
    argv = write_plugin(tmp_path, FAILING_PLUGIN)
    config = PipelineConfig(patch_size=16, upsampler=UpsamplerPlugin(argv=argv),
                            denoise=None)
    with pytest.raises(PluginError, match="patch 0"):
        upsample_cloud(sphere_cloud(64, seed=0), config)


# --- fusion --------------------------------------------------------------------


def test_fuse_single_patch_is_permutation(rng):
    from pointfreq import NormalizationTransform

    pts = rng.random((100, 3))
    identity = NormalizationTransform(np.zeros(3), 1.0)
    fused = fuse_patches([(pts, identity)], 100)
    assert sorted(map(tuple, fused)) == sorted(map(tuple, pts))


def test_fuse_insufficient_points_errors(rng):
    from pointfreq import NormalizationTransform

    identity = NormalizationTransform(np.zeros(3), 1.0)
    with pytest.raises(ValidationError):
        fuse_patches([(rng.random((10, 3)), identity)], 11)


# --- upsample_cloud ---------------------------------------------------------------


def test_duplicate_pipeline_preserves_geometry():
    pts = sphere_cloud(512, seed=1)
    config = PipelineConfig(patch_size=128, upsampler="duplicate", denoise=None)
    out = upsample_cloud(pts, config)
    assert out.shape == (2048, 3)
    assert chamfer(out, pts) <= 1e-24  # zero up to normalize/invert rounding


def test_output_points_originate_from_patch_outputs():
    pts = sphere_cloud(256, seed=2)
    config = PipelineConfig(patch_size=64, upsampler="duplicate", denoise=None)
    out = upsample_cloud(pts, config)
    # with the duplicate builtin every candidate coincides with an input point
    assert chamfer(out, pts) <= 1e-24


def test_midpoint_pipeline_p2f_bound():
    mesh = icosphere(3)
    pts = sphere_cloud(512, seed=3)
    base_p2f = point_to_surface(pts, mesh)[0]
    config = PipelineConfig(patch_size=128, upsampler="midpoint", denoise=None)
    out = upsample_cloud(pts, config)
    assert out.shape == (2048, 3)
    assert point_to_surface(out, mesh)[0] <= 1.5 * base_p2f


def test_pipeline_deterministic_across_workers():
    pts = sphere_cloud(512, seed=4)
    base = upsample_cloud(pts, PipelineConfig(patch_size=128, workers=1))
    multi = upsample_cloud(pts, PipelineConfig(patch_size=128, workers=4))
    np.testing.assert_array_equal(base, multi)


def test_denoise_on_beats_off_with_noisy_plugin(tmp_path):
    from conftest import cube_mesh
    from pointfreq import monte_carlo_sample

    argv = write_plugin(tmp_path, NOISY_PLUGIN)
    plugin = UpsamplerPlugin(argv=argv)
    cube = cube_mesh(half=1.0)
    # full-size HF subsets keep the comparison focused on the injected noise
    config = MetricConfig(hf_m=1024, graph=GraphParams(epsilon=0.2, sigma=0.1))
    wins = 0
    for seed in range(20):
        pts = monte_carlo_sample(cube, 256, seed=seed)
        gt = upsample_cloud(
            pts, PipelineConfig(patch_size=64, upsampler="duplicate", denoise=None)
        )  # noise-free reference output
        base = PipelineConfig(patch_size=64, upsampler=plugin, denoise=None)
        cleaned = PipelineConfig(patch_size=64, upsampler=plugin,
                                 denoise=TrimDenoise(kappa=3.0))
        hd_off = hf_hd(upsample_cloud(pts, base), gt, config)
        hd_on = hf_hd(upsample_cloud(pts, cleaned), gt, config)
        wins += hd_on < hd_off
    assert wins == 20


# --- dataset ingestion / batch ------------------------------------------------------


def make_dataset(root, stems, with_mesh=False, n=80, mesh=None):
    (root / "input").mkdir(parents=True, exist_ok=True)
    (root / "gt").mkdir(exist_ok=True)
    if with_mesh:
        (root / "mesh").mkdir(exist_ok=True)
    for i, stem in enumerate(stems):
        save_cloud(sphere_cloud(n, seed=i), root / "input" / f"{stem}.xyz")
        save_cloud(sphere_cloud(4 * n, seed=i + 500), root / "gt" / f"{stem}.xyz")
        if with_mesh:
            from pointfreq import save_mesh

            save_mesh(mesh or icosphere(1), root / "mesh" / f"{stem}.off")


def test_ingest_complete_pairs(tmp_path):
    make_dataset(tmp_path, ["a", "b"])
    pairs, warnings = ingest_dataset(tmp_path)
    assert [p.stem for p in pairs] == ["a", "b"]
    assert warnings == []


def test_ingest_missing_gt_warns(tmp_path):
    make_dataset(tmp_path, ["a", "b"])
    (tmp_path / "gt" / "b.xyz").unlink()
    pairs, warnings = ingest_dataset(tmp_path)
    assert [p.stem for p in pairs] == ["a"]
    assert len(warnings) == 1 and "b" in warnings[0]


def test_ingest_twenty_seven_pairs(tmp_path):
    stems = [f"model_{i:02d}" for i in range(27)]
    make_dataset(tmp_path, stems, n=8)
    pairs, _ = ingest_dataset(tmp_path)
    assert len(pairs) == 27


def test_batch_single_pair_aggregate_equals_report(tmp_path):
    make_dataset(tmp_path, ["solo"], n=80)
    pairs, _ = ingest_dataset(tmp_path)
    pcfg = PipelineConfig(patch_size=32, denoise=None)
    mcfg = MetricConfig(hf_m=64, seed_count=8)
    result = batch_evaluate(pairs, pcfg, mcfg)
    assert not result.failures
    report = result.reports["solo"]
    for name in ("cd", "hd", "uniformity", "hf_cd", "hf_hd"):
        assert result.aggregate[name] == pytest.approx(report.values()[name])


def test_batch_mean_of_two_pairs(tmp_path):
    make_dataset(tmp_path, ["a", "b"], n=80)
    pairs, _ = ingest_dataset(tmp_path)
    pcfg = PipelineConfig(patch_size=32, denoise=None)
    mcfg = MetricConfig(hf_m=64, seed_count=8)
    result = batch_evaluate(pairs, pcfg, mcfg)
    for name in ("cd", "hd"):
        values = [result.reports[s].values()[name] for s in ("a", "b")]
        assert result.aggregate[name] == pytest.approx(np.mean(values))


def test_batch_records_failures_and_excludes_them(tmp_path):
    make_dataset(tmp_path, ["good"], n=80)
    pairs, _ = ingest_dataset(tmp_path)
    broken = DatasetPair(stem="broken", input_path=tmp_path / "input" / "good.xyz",
                         gt_path=tmp_path / "nope.xyz")
    result = batch_evaluate(pairs + [broken],
                            PipelineConfig(patch_size=32, denoise=None),
                            MetricConfig(hf_m=64, seed_count=8))
    assert "broken" in result.failures
    assert "good" in result.reports
    assert result.to_json_dict()["failed_count"] == 1


def test_batch_deterministic_csv(tmp_path):
    make_dataset(tmp_path, ["a", "b"], n=80)
    pairs, _ = ingest_dataset(tmp_path)
    pcfg = PipelineConfig(patch_size=32, denoise=None)
    mcfg = MetricConfig(hf_m=64, seed_count=8)
    first = batch_evaluate(pairs, pcfg, mcfg, jobs=1).to_csv()
    second = batch_evaluate(pairs, pcfg, mcfg, jobs=2).to_csv()
    assert first == second
    assert first.splitlines()[0] == "stem,cd,hd,p2f,uniformity,hf_cd,hf_hd"
