"""Weight forensics for convolutional networks.

chirascope parses neutral tensor containers, measures how similar each
convolution layer's kernels are to their horizontally mirrored
counterparts, compares trained weights against deterministic untrained
baselines, and classifies models by their per-stage similarity
fingerprint.
"""

from chirascope.errors import (
    ChirascopeError,
    ContainerError,
    ContainerWarning,
    EmptyReferenceSetError,
    KernelShapeError,
    LayerIdentityError,
    LayerSetMismatchError,
    ManifestError,
    NoAnalyzableLayersError,
    NonFlippableLayerError,
    ReportError,
    UnassignedStageError,
    UnknownArchitectureError,
    ZeroNormKernelError,
)
from chirascope.weights_io import (
    ConvLayer,
    Manifest,
    ManifestEntry,
    OpaqueTensor,
    TensorMap,
    TensorRecord,
    extract_conv_layers,
    read_container,
    read_manifest,
    write_container,
    write_manifest,
)
from chirascope.chirality import (
    LayerResidual,
    LayerSimilarity,
    ModelResidual,
    abs_cosine,
    flip_kernel,
    layer_residual,
    layer_similarity,
    layer_similarity_noflip,
    model_residual,
)
from chirascope.archs import (
    ArchitectureSpec,
    ConvEntry,
    INIT_METHODS,
    SUPPORTED_ARCHS,
    init_layer,
    init_sigma,
    registry,
    synth_model,
)
from chirascope.analysis import (
    ComparisonResult,
    Fingerprint,
    MatchResult,
    ModelReport,
    PlotRow,
    SkippedLayer,
    analyze_model,
    classify,
    compare_reports,
    fingerprint,
    random_direction_baseline,
    stage_positions,
)

__version__ = "0.1.0"
