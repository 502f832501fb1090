"""Kernel mirroring and average kernel similarity.

A kernel is a (channels, rows, columns) array. Its mirror is the same
array with columns reversed; channels and rows keep their order. The
layer statistic is the mean of |cosine| over all ordered pairs of one
original kernel and one mirrored kernel, diagonal pairs included, so a
layer with B kernels contributes B*B terms. All accumulation happens in
64-bit floats regardless of the storage dtype.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from chirascope.errors import (
    KernelShapeError,
    LayerIdentityError,
    NonFlippableLayerError,
    ZeroNormKernelError,
)
from chirascope.weights_io import ConvLayer

__all__ = [
    "LayerSimilarity",
    "LayerResidual",
    "ModelResidual",
    "flip_kernel",
    "abs_cosine",
    "layer_similarity",
    "layer_similarity_noflip",
    "layer_residual",
    "model_residual",
]

#: A model is flagged as changed-by-training only when the summed residual
#: exceeds this per-layer allowance; plain float round-off keeps even
#: identical inputs from reaching an exact zero.
RESIDUAL_TOLERANCE_PER_LAYER = 1e-9


@dataclass(frozen=True)
class LayerSimilarity:
    """Average kernel similarity of one layer plus identifying metadata."""

    layer_name: str
    stage: int | None
    kernel_count: int
    kernel_dim: int
    value: float
    flipped: bool

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(
                f"{self.layer_name}: similarity {self.value} outside [0, 1]"
            )


@dataclass(frozen=True)
class LayerResidual:
    """Absolute difference between a layer's untrained and trained similarity."""

    layer_name: str
    s_untrained: float
    s_trained: float
    residual: float

    def __post_init__(self):
        if self.residual < 0.0:
            raise ValueError(f"{self.layer_name}: residual must be >= 0")


@dataclass(frozen=True)
class ModelResidual:
    """Per-layer residuals summed over a whole model."""

    per_layer: tuple[LayerResidual, ...]
    total: float
    layer_count: int
    chirality_present: bool
    tolerance: float


def flip_kernel(kernel: np.ndarray) -> np.ndarray:
    """Reverse a kernel's columns; channel and row order are unchanged.

    Width 1 yields an identical copy. Applying the flip twice restores the
    input bit for bit.
    """
    kernel = np.asarray(kernel)
    if kernel.ndim != 3:
        raise KernelShapeError(
            f"kernel must be (channels, rows, columns), got shape {kernel.shape}"
        )
    return np.ascontiguousarray(kernel[:, :, ::-1])


def abs_cosine(a: np.ndarray, b: np.ndarray) -> float:
    """|cosine| between two kernels flattened to vectors, in [0, 1].

    Both operands must share extents and have nonzero norm; a zero-norm
    kernel raises instead of silently scoring 0.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 3 or b.ndim != 3:
        raise KernelShapeError("kernels must be (channels, rows, columns)")
    if a.shape != b.shape:
        raise KernelShapeError(f"extent mismatch: {a.shape} vs {b.shape}")
    va = a.reshape(-1).astype(np.float64, copy=False)
    vb = b.reshape(-1).astype(np.float64, copy=False)
    na = float(np.sqrt(np.dot(va, va)))
    nb = float(np.sqrt(np.dot(vb, vb)))
    if na == 0.0 or nb == 0.0:
        raise ZeroNormKernelError("zero-norm kernel: similarity is undefined")
    return min(abs(float(np.dot(va, vb))) / (na * nb), 1.0)


def _mean_abs_cosine(layer: ConvLayer, flipped: bool) -> float:
    b = layer.out_channels
    mat = layer.data.astype(np.float64, copy=False).reshape(b, layer.kernel_dim)
    norms = np.sqrt(np.einsum("ij,ij->i", mat, mat))
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ZeroNormKernelError(
            f"kernel {int(zero[0])} of layer {layer.name!r} has zero norm; "
            "similarity is undefined"
        )
    unit = mat / norms[:, None]
    if flipped:
        # mirroring permutes entries, so the original norms stay exact
        mirrored = mat.reshape(
            b, layer.in_channels, layer.height, layer.width
        )[:, :, :, ::-1].reshape(b, layer.kernel_dim)
        other = mirrored / norms[:, None]
    else:
        other = unit
    pair = np.abs(unit @ other.T)
    np.minimum(pair, 1.0, out=pair)
    return float(pair.sum() / (b * b))


def layer_similarity(layer: ConvLayer) -> LayerSimilarity:
    """Mean |cosine| over all ordered (kernel, mirrored kernel) pairs.

    Requires a mirrorable layer (width >= 2) and nonzero kernel norms.
    Values are deterministic from run to run for a fixed input.
    """
    if not layer.flippable:
        raise NonFlippableLayerError(
            f"layer {layer.name!r} has kernel width 1 and cannot be flipped"
        )
    return LayerSimilarity(
        layer_name=layer.name,
        stage=layer.stage,
        kernel_count=layer.out_channels,
        kernel_dim=layer.kernel_dim,
        value=_mean_abs_cosine(layer, flipped=True),
        flipped=True,
    )


def layer_similarity_noflip(layer: ConvLayer) -> LayerSimilarity:
    """Ablation variant: both pair members come from the original kernel set."""
    return LayerSimilarity(
        layer_name=layer.name,
        stage=layer.stage,
        kernel_count=layer.out_channels,
        kernel_dim=layer.kernel_dim,
        value=_mean_abs_cosine(layer, flipped=False),
        flipped=False,
    )


def layer_residual(su: LayerSimilarity, st: LayerSimilarity) -> LayerResidual:
    """|untrained - trained| for one layer; both values must describe it."""
    if (
        su.layer_name != st.layer_name
        or su.kernel_count != st.kernel_count
        or su.kernel_dim != st.kernel_dim
    ):
        raise LayerIdentityError(
            f"cannot pair {su.layer_name!r} ({su.kernel_count}x{su.kernel_dim}) "
            f"with {st.layer_name!r} ({st.kernel_count}x{st.kernel_dim})"
        )
    return LayerResidual(
        layer_name=su.layer_name,
        s_untrained=su.value,
        s_trained=st.value,
        residual=abs(su.value - st.value),
    )


def model_residual(
    pairs: list[LayerResidual],
    tolerance_per_layer: float = RESIDUAL_TOLERANCE_PER_LAYER,
) -> ModelResidual:
    """Sum per-layer residuals in order with 64-bit accumulation."""
    if not pairs:
        raise ValueError("model residual needs at least one layer")
    total = 0.0
    for lr in pairs:
        total += lr.residual
    tolerance = tolerance_per_layer * len(pairs)
    return ModelResidual(
        per_layer=tuple(pairs),
        total=total,
        layer_count=len(pairs),
        chirality_present=total > tolerance,
        tolerance=tolerance,
    )
