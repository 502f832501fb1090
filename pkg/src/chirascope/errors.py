"""Exception and warning types shared across the package."""


class ChirascopeError(Exception):
    """Base class for all chirascope errors."""


class ContainerError(ChirascopeError):
    """The tensor container file is malformed or unreadable."""


class ManifestError(ChirascopeError):
    """The layer manifest is malformed or does not resolve against the container."""


class ReportError(ChirascopeError):
    """A report document is malformed or of the wrong kind."""


class KernelShapeError(ChirascopeError):
    """Kernel operands have incompatible or invalid extents."""


class ZeroNormKernelError(ChirascopeError):
    """A kernel has zero Euclidean norm, so cosine similarity is undefined."""


class NonFlippableLayerError(ChirascopeError):
    """The layer's kernel width is 1, so the mirrored comparison is not defined."""


class LayerIdentityError(ChirascopeError):
    """Two per-layer values that should describe the same layer do not."""


class LayerSetMismatchError(ChirascopeError):
    """Two reports do not cover the same set of layers."""


class NoAnalyzableLayersError(ChirascopeError):
    """No layer in the input qualifies for analysis."""


class UnknownArchitectureError(ChirascopeError):
    """The architecture identifier is not in the registry."""


class UnassignedStageError(ChirascopeError):
    """A layer lacks the stage assignment required by this operation."""


class EmptyReferenceSetError(ChirascopeError):
    """No usable reference fingerprint is available."""


class ContainerWarning(UserWarning):
    """Non-fatal container anomaly, e.g. a tensor kept as an opaque blob."""
