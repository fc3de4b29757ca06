"""pointfreq: graph-frequency analysis and evaluation for point cloud upsampling."""

__version__ = "0.1.0"

from .errors import (
    DegenerateGeometryError,
    ParseError,
    PluginError,
    PointFreqError,
    SpectralError,
    ValidationError,
)
from .graph import (
    GraphParams,
    HFExtraction,
    NeighborhoodGraph,
    SmoothDenoise,
    TrimDenoise,
    apply_polynomial_filter,
    apply_shift,
    build_graph,
    denoise_points,
    extract_hf_points,
    highpass_response,
    spectral_reference_filter,
    variation_scores,
)
from .io import load_cloud, load_mesh, save_cloud, save_mesh
from .mesh import TriangleMesh
from .metrics import (
    LossReport,
    MetricConfig,
    MetricReport,
    chamfer,
    evaluate_all,
    hausdorff,
    hf_cd,
    hf_hd,
    loss_report,
    point_to_surface,
    uniformity,
)
from .pipeline import (
    BatchResult,
    DatasetPair,
    Patch,
    PipelineConfig,
    UpsamplerPlugin,
    batch_evaluate,
    extract_patches,
    fuse_patches,
    ingest_dataset,
    run_upsampler,
    upsample_cloud,
)
from .sampling import fps, monte_carlo_sample, poisson_disk_sample
from .spatial import NormalizationTransform, SpatialIndex, normalize_unit_sphere
from .transport import (
    AssignmentPlan,
    approx_emd,
    exact_emd,
    identity_distribution_loss,
    reconstruction_loss,
)

__all__ = [
    "__version__",
    "AssignmentPlan",
    "BatchResult",
    "DatasetPair",
    "DegenerateGeometryError",
    "GraphParams",
    "HFExtraction",
    "LossReport",
    "MetricConfig",
    "MetricReport",
    "NeighborhoodGraph",
    "NormalizationTransform",
    "ParseError",
    "Patch",
    "PipelineConfig",
    "PluginError",
    "PointFreqError",
    "SmoothDenoise",
    "SpatialIndex",
    "SpectralError",
    "TriangleMesh",
    "TrimDenoise",
    "UpsamplerPlugin",
    "ValidationError",
    "apply_polynomial_filter",
    "apply_shift",
    "approx_emd",
    "batch_evaluate",
    "build_graph",
    "chamfer",
    "denoise_points",
    "evaluate_all",
    "exact_emd",
    "extract_hf_points",
    "extract_patches",
    "fps",
    "fuse_patches",
    "hausdorff",
    "hf_cd",
    "hf_hd",
    "highpass_response",
    "identity_distribution_loss",
    "ingest_dataset",
    "load_cloud",
    "load_mesh",
    "loss_report",
    "monte_carlo_sample",
    "normalize_unit_sphere",
    "point_to_surface",
    "poisson_disk_sample",
    "reconstruction_loss",
    "run_upsampler",
    "save_cloud",
    "save_mesh",
    "spectral_reference_filter",
    "uniformity",
    "upsample_cloud",
    "variation_scores",
]
