"""Conv-layer inventory for the supported torchvision classifiers.

The inventory is derived from a weightless torchvision model instance, so
tensor names and shapes always match the framework's own state_dict keys
instead of a hand-copied table. Stage assignment follows the five-band
depth grouping used by the analysis tool:

* AlexNet: the five convs map to stages 1..5 in order.
* VGG: the stage starts at 1 and increases at every max-pool.
* ResNet: the stem conv is stage 1 and ``layerN`` maps to stage N + 1.

A conv counts as analyzable (manifest ``include``) when its kernel width is
at least 2; the ResNet stem is additionally excluded by convention.
"""

from __future__ import annotations

from dataclasses import dataclass

from export_tool.errors import UnknownModelError

__all__ = ["SUPPORTED_MODELS", "ConvInfo", "family_of", "conv_inventory"]

SUPPORTED_MODELS = (
    "alexnet",
    "vgg11",
    "vgg13",
    "vgg16",
    "vgg19",
    "resnet18",
    "resnet34",
    "resnet50",
    "resnet101",
    "resnet152",
)

_MAX_STAGE = 5


@dataclass(frozen=True)
class ConvInfo:
    """One conv weight: state_dict key, shape, stage band, include flag."""

    tensor: str
    shape: tuple[int, int, int, int]
    stage: int
    include: bool


def family_of(model_id: str) -> str:
    if model_id == "alexnet":
        return "alexnet"
    if model_id.startswith("vgg"):
        return "vgg"
    if model_id.startswith("resnet"):
        return "resnet"
    raise UnknownModelError(
        f"unknown model {model_id!r}; supported: {', '.join(SUPPORTED_MODELS)}"
    )


def _feature_stack(model, *, stage_per_conv: bool) -> list[ConvInfo]:
    import torch.nn as nn

    infos = []
    stage = 1
    for idx, module in enumerate(model.features):
        if isinstance(module, nn.Conv2d):
            shape = tuple(module.weight.shape)
            if stage_per_conv:
                stage = len(infos) + 1
            infos.append(
                ConvInfo(
                    tensor=f"features.{idx}.weight",
                    shape=shape,
                    stage=min(stage, _MAX_STAGE),
                    include=shape[3] >= 2,
                )
            )
        elif isinstance(module, nn.MaxPool2d) and not stage_per_conv:
            stage += 1
    return infos


def _resnet_stack(model) -> list[ConvInfo]:
    import torch.nn as nn

    infos = []
    for name, module in model.named_modules():
        if not isinstance(module, nn.Conv2d):
            continue
        if name == "conv1":
            stage = 1
        elif name.startswith("layer"):
            stage = int(name[5]) + 1
        else:
            raise UnknownModelError(f"unexpected conv location {name!r}")
        shape = tuple(module.weight.shape)
        include = shape[3] >= 2 and stage >= 2
        infos.append(
            ConvInfo(tensor=f"{name}.weight", shape=shape, stage=stage, include=include)
        )
    return infos


def conv_inventory(model_id: str) -> tuple[ConvInfo, ...]:
    """Ordered conv inventory for one supported model, no weights downloaded."""
    if model_id not in SUPPORTED_MODELS:
        raise UnknownModelError(
            f"unknown model {model_id!r}; supported: {', '.join(SUPPORTED_MODELS)}"
        )
    import torchvision

    model = torchvision.models.get_model(model_id, weights=None)
    family = family_of(model_id)
    if family == "resnet":
        infos = _resnet_stack(model)
    else:
        infos = _feature_stack(model, stage_per_conv=family == "alexnet")
    return tuple(infos)
