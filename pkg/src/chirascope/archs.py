"""Architecture registry and untrained weight synthesis.

The registry enumerates the conv layers of ten classic image models with
checkpoint-style tensor names, five-stage assignments, and an analyzable
flag. ResNet's stem (stage 1) and every 1x1 kernel are present for shape
fidelity but flagged non-analyzable. Synthesis draws each layer from its
own deterministic stream, so the same (arch, method, seed) always yields
the same bytes, and all three init methods share the same underlying
normal draws and differ only by their scale factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from chirascope import rng
from chirascope.errors import UnknownArchitectureError
from chirascope.weights_io import ConvLayer, Manifest, ManifestEntry, TensorMap, TensorRecord

__all__ = [
    "ConvEntry",
    "ArchitectureSpec",
    "SUPPORTED_ARCHS",
    "INIT_METHODS",
    "registry",
    "init_sigma",
    "init_layer",
    "synth_model",
]

INIT_METHODS = ("kaiming-normal", "xavier-normal", "plain-normal")

#: Std of the plain-normal method. The scale never influences the cosine
#: statistic, so any positive constant would do.
PLAIN_NORMAL_STD = 0.01

GENERATOR_ID = "splitmix64-boxmuller-v1"


@dataclass(frozen=True)
class ConvEntry:
    name: str
    out_channels: int
    in_channels: int
    height: int
    width: int
    stage: int
    analyzable: bool

    @property
    def count(self) -> int:
        return self.out_channels * self.in_channels * self.height * self.width

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.out_channels, self.in_channels, self.height, self.width)


@dataclass(frozen=True)
class ArchitectureSpec:
    arch_id: str
    family: str
    entries: tuple[ConvEntry, ...]

    def analyzable_entries(self) -> tuple[ConvEntry, ...]:
        return tuple(e for e in self.entries if e.analyzable)


# AlexNet convs, one per stage: (name, out, in, k)
_ALEXNET = (
    ("features.0.weight", 64, 3, 11),
    ("features.3.weight", 192, 64, 5),
    ("features.6.weight", 384, 192, 3),
    ("features.8.weight", 256, 384, 3),
    ("features.10.weight", 256, 256, 3),
)

# VGG feature configs; "M" is a pooling layer and bumps the stage.
_VGG_CFGS = {
    "vgg11": (64, "M", 128, "M", 256, 256, "M", 512, 512, "M", 512, 512, "M"),
    "vgg13": (64, 64, "M", 128, 128, "M", 256, 256, "M", 512, 512, "M", 512, 512, "M"),
    "vgg16": (64, 64, "M", 128, 128, "M", 256, 256, 256, "M",
              512, 512, 512, "M", 512, 512, 512, "M"),
    "vgg19": (64, 64, "M", 128, 128, "M", 256, 256, 256, 256, "M",
              512, 512, 512, 512, "M", 512, 512, 512, 512, "M"),
}

# ResNet block counts per stage 2..5 and the block kind.
_RESNET_LAYOUTS = {
    "resnet18": ("basic", (2, 2, 2, 2)),
    "resnet34": ("basic", (3, 4, 6, 3)),
    "resnet50": ("bottleneck", (3, 4, 6, 3)),
    "resnet101": ("bottleneck", (3, 4, 23, 3)),
    "resnet152": ("bottleneck", (3, 8, 36, 3)),
}

SUPPORTED_ARCHS = ("alexnet",) + tuple(_VGG_CFGS) + tuple(_RESNET_LAYOUTS)


def _alexnet_entries() -> list[ConvEntry]:
    return [
        ConvEntry(name, out_ch, in_ch, k, k, stage, True)
        for stage, (name, out_ch, in_ch, k) in enumerate(_ALEXNET, start=1)
    ]


def _vgg_entries(arch_id: str) -> list[ConvEntry]:
    entries = []
    in_ch = 3
    idx = 0
    stage = 1
    for item in _VGG_CFGS[arch_id]:
        if item == "M":
            idx += 1
            stage += 1
            continue
        entries.append(
            ConvEntry(f"features.{idx}.weight", item, in_ch, 3, 3, stage, True)
        )
        in_ch = item
        idx += 2  # conv + relu
    return entries


def _resnet_entries(arch_id: str) -> list[ConvEntry]:
    kind, block_counts = _RESNET_LAYOUTS[arch_id]
    expansion = 1 if kind == "basic" else 4
    entries = [ConvEntry("conv1.weight", 64, 3, 7, 7, 1, False)]
    in_ch = 64
    for level, blocks in enumerate(block_counts, start=1):
        planes = 64 * 2 ** (level - 1)
        stage = level + 1
        stride = 1 if level == 1 else 2
        for b in range(blocks):
            prefix = f"layer{level}.{b}"
            out_ch = planes * expansion
            if kind == "basic":
                entries.append(
                    ConvEntry(f"{prefix}.conv1.weight", planes, in_ch, 3, 3, stage, True)
                )
                entries.append(
                    ConvEntry(f"{prefix}.conv2.weight", planes, planes, 3, 3, stage, True)
                )
            else:
                entries.append(
                    ConvEntry(f"{prefix}.conv1.weight", planes, in_ch, 1, 1, stage, False)
                )
                entries.append(
                    ConvEntry(f"{prefix}.conv2.weight", planes, planes, 3, 3, stage, True)
                )
                entries.append(
                    ConvEntry(f"{prefix}.conv3.weight", out_ch, planes, 1, 1, stage, False)
                )
            if b == 0 and (stride != 1 or in_ch != out_ch):
                entries.append(
                    ConvEntry(
                        f"{prefix}.downsample.0.weight", out_ch, in_ch, 1, 1, stage, False
                    )
                )
            in_ch = out_ch
    return entries


def registry(arch_id: str) -> ArchitectureSpec:
    """Full ordered conv-layer list for one of the ten supported models."""
    if arch_id == "alexnet":
        entries = _alexnet_entries()
        family = "alexnet"
    elif arch_id in _VGG_CFGS:
        entries = _vgg_entries(arch_id)
        family = "vgg"
    elif arch_id in _RESNET_LAYOUTS:
        entries = _resnet_entries(arch_id)
        family = "resnet"
    else:
        raise UnknownArchitectureError(
            f"unknown architecture {arch_id!r}; supported: {', '.join(SUPPORTED_ARCHS)}"
        )
    return ArchitectureSpec(arch_id=arch_id, family=family, entries=tuple(entries))


def init_sigma(method: str, shape: tuple[int, int, int, int]) -> float:
    """Std used by an init method for a (out, in, h, w) conv layer."""
    b, c, h, w = shape
    fan_in = c * h * w
    fan_out = b * h * w
    if method == "kaiming-normal":
        return math.sqrt(2.0 / fan_in)
    if method == "xavier-normal":
        return math.sqrt(2.0 / (fan_in + fan_out))
    if method == "plain-normal":
        return PLAIN_NORMAL_STD
    raise ValueError(f"unknown init method {method!r}; expected one of {INIT_METHODS}")


def init_layer(
    shape: tuple[int, int, int, int],
    method: str,
    seed: int,
    name: str,
    stage: int | None = None,
) -> ConvLayer:
    """Draw one conv layer as sigma * z with z from the (seed, name) stream.

    The z sequence depends only on (seed, name), never on the method, so
    two methods' layers differ element-wise by exactly the ratio of their
    scale factors (up to one rounding each).
    """
    b, c, h, w = (int(x) for x in shape)
    sigma = init_sigma(method, (b, c, h, w))
    data = sigma * rng.normals(seed, name, b * c * h * w)
    return ConvLayer(
        name=name, out_channels=b, in_channels=c, height=h, width=w,
        stage=stage, data=data,
    )


def synth_model(arch_id: str, method: str, seed: int) -> tuple[TensorMap, Manifest]:
    """Synthesize a full untrained weight set plus its manifest.

    Tensors are stored as float32 in registry order under the standard
    checkpoint names of the family. Deterministic for a fixed
    (arch_id, method, seed).
    """
    spec = registry(arch_id)
    init_sigma(method, (1, 1, 1, 1))  # validate the method before any work
    entries: dict[str, TensorRecord] = {}
    for e in spec.entries:
        layer = init_layer(e.shape, method, seed, e.name, stage=e.stage)
        entries[e.name] = TensorRecord(
            shape=e.shape, data=layer.data.astype(np.float32)
        )
    metadata = {
        "model_name": arch_id,
        "family": spec.family,
        "init_method": method,
        "seed": str(int(seed)),
        "generator": GENERATOR_ID,
    }
    manifest = Manifest(
        model_name=arch_id,
        family=spec.family,
        layers=tuple(
            ManifestEntry(tensor=e.name, stage=e.stage, include=e.analyzable)
            for e in spec.entries
        ),
    )
    return TensorMap(entries=entries, metadata=metadata), manifest
