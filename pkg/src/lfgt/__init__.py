"""Light field compression with local graph transforms over super-rays."""

from .analysis import (
    BandStatistics,
    CompactionCurve,
    band_statistics,
    compaction_curve,
    mean_band_correlation,
    rate_allocation_report,
)
from .codec import (
    CodecConfig,
    QuantizerBank,
    ScanOrder,
    classify_super_rays,
    decode_light_field,
    design_quantizers,
    encode_light_field,
    learn_scan_order,
    quantize_tensor,
)
from .contours import (
    decode_disparities,
    decode_segmentation,
    encode_disparities,
    encode_segmentation,
)
from .coupling import build_correspondences, couple_super_ray, farthest_point_sample
from .errors import BitstreamError, GraphSizeError, InputFormatError, LfgtError
from .graphs import (
    LocalGraph,
    build_angular_graph,
    build_nonseparable_graph,
    build_spatial_graph,
    canonical_pixels,
)
from .lightfield import (
    DisparityMap,
    LightField,
    disparity_shift,
    load_light_field,
    psnr,
    round_half_up,
    save_light_field,
)
from .pipeline import (
    MODES,
    TransformBases,
    apply_forward,
    apply_inverse,
    compute_bases,
)
from .segmentation import (
    CoherenceReport,
    SuperPixelMap,
    SuperRaySegmentation,
    coherence,
    project_labels,
    slic_segment,
)
from .spectral import CoefficientTensor, EigenBasis, diagonalize, gft_forward, gft_inverse
from .synthetic import Background, Layer, SyntheticScene, render_synthetic

__version__ = "0.1.0"

__all__ = [
    "BandStatistics",
    "Background",
    "BitstreamError",
    "CodecConfig",
    "CoefficientTensor",
    "CoherenceReport",
    "CompactionCurve",
    "DisparityMap",
    "EigenBasis",
    "GraphSizeError",
    "InputFormatError",
    "Layer",
    "LfgtError",
    "LightField",
    "LocalGraph",
    "MODES",
    "QuantizerBank",
    "ScanOrder",
    "SuperPixelMap",
    "SuperRaySegmentation",
    "SyntheticScene",
    "TransformBases",
    "apply_forward",
    "apply_inverse",
    "band_statistics",
    "build_angular_graph",
    "build_correspondences",
    "build_nonseparable_graph",
    "build_spatial_graph",
    "canonical_pixels",
    "classify_super_rays",
    "coherence",
    "compaction_curve",
    "compute_bases",
    "couple_super_ray",
    "decode_disparities",
    "decode_light_field",
    "decode_segmentation",
    "design_quantizers",
    "diagonalize",
    "disparity_shift",
    "encode_disparities",
    "encode_light_field",
    "encode_segmentation",
    "farthest_point_sample",
    "gft_forward",
    "gft_inverse",
    "learn_scan_order",
    "load_light_field",
    "mean_band_correlation",
    "project_labels",
    "psnr",
    "quantize_tensor",
    "rate_allocation_report",
    "render_synthetic",
    "round_half_up",
    "save_light_field",
    "slic_segment",
    "__version__",
]
