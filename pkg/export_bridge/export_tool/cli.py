"""Checkpoint exporter command line.

Converts a torchvision-style CNN checkpoint into the neutral weight
container plus layer manifest understood by the analysis tool:

    export-tool --model vgg16 --checkpoint vgg16.pth \\
        --out vgg16.safetensors --manifest vgg16.manifest.json

Without --checkpoint the torchvision model zoo supplies the weights, which
needs network access on first use; --zoo-weights selects the published
weight set (default IMAGENET1K_V1). The chosen source and the torch and
torchvision versions are recorded in the container metadata.

Exit codes: 0 success; 2 bad usage, unknown model, or unreadable input or
output; 3 checkpoint tensors do not line up with the model's convs.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

from export_tool import __version__
from export_tool.container import write_container, write_manifest
from export_tool.errors import ExportError, ExportWarning, NameMappingError, UnknownModelError
from export_tool.naming import SUPPORTED_MODELS, conv_inventory, family_of

DEFAULT_ZOO_WEIGHTS = "IMAGENET1K_V1"


def _strip_wrappers(state):
    if isinstance(state, dict) and isinstance(state.get("state_dict"), dict):
        state = state["state_dict"]
    if not isinstance(state, dict) or not state:
        raise NameMappingError("checkpoint does not contain a tensor dictionary")
    if all(isinstance(k, str) and k.startswith("module.") for k in state):
        state = {k[len("module."):]: v for k, v in state.items()}
    return state


def load_checkpoint(path) -> dict:
    import torch

    path = Path(path)
    try:
        state = torch.load(path, map_location="cpu", weights_only=True)
    except OSError:
        raise
    except Exception as exc:
        raise ExportError(f"cannot load checkpoint {path}: {exc}") from exc
    return _strip_wrappers(state)


def load_zoo_state(model_id: str, weights_id: str) -> dict:
    import torchvision

    weights_enum = torchvision.models.get_model_weights(model_id)
    try:
        weights = weights_enum[weights_id]
    except KeyError:
        available = ", ".join(w.name for w in weights_enum)
        raise ExportError(
            f"{model_id} has no weight set {weights_id!r}; available: {available}"
        ) from None
    try:
        model = torchvision.models.get_model(model_id, weights=weights)
    except Exception as exc:
        raise ExportError(f"cannot fetch zoo weights for {model_id}: {exc}") from exc
    return model.state_dict()


def collect_conv_tensors(inventory, state) -> dict:
    """Pick the inventory's tensors out of a checkpoint as float32 arrays."""
    import torch

    missing = [info.tensor for info in inventory if info.tensor not in state]
    if missing:
        raise NameMappingError(
            "checkpoint is missing conv tensors: " + ", ".join(missing)
        )
    mismatched = []
    for info in inventory:
        got = tuple(state[info.tensor].shape)
        if got != info.shape:
            mismatched.append(f"{info.tensor}: expected {info.shape}, got {got}")
    if mismatched:
        raise NameMappingError("checkpoint shape mismatch: " + "; ".join(mismatched))
    out = {}
    for info in inventory:
        tensor = state[info.tensor].detach().cpu()
        if tensor.dtype != torch.float32:
            warnings.warn(
                f"{info.tensor}: converting {tensor.dtype} to float32",
                ExportWarning,
                stacklevel=2,
            )
            tensor = tensor.to(torch.float32)
        out[info.tensor] = tensor.numpy()
    return out


def run_export(model_id, out_path, manifest_path, checkpoint=None,
               zoo_weights=DEFAULT_ZOO_WEIGHTS) -> int:
    import torch
    import torchvision

    family = family_of(model_id)
    inventory = conv_inventory(model_id)
    if checkpoint is not None:
        state = load_checkpoint(checkpoint)
        source = f"checkpoint:{Path(checkpoint).name}"
    else:
        state = load_zoo_state(model_id, zoo_weights)
        source = f"zoo:{zoo_weights}"
    tensors = collect_conv_tensors(inventory, state)
    metadata = {
        "format": "export-tool",
        "model_name": model_id,
        "family": family,
        "source": source,
        "torch": torch.__version__,
        "torchvision": torchvision.__version__,
    }
    write_container(out_path, tensors, metadata)
    write_manifest(manifest_path, model_id, family, inventory)
    size = Path(out_path).stat().st_size
    print(f"exported {len(tensors)} conv tensors of {model_id} "
          f"to {out_path} ({size} bytes)")
    print(f"wrote manifest to {manifest_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="export-tool",
        description="Export a CNN checkpoint to the neutral container + manifest.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--model", required=True, choices=SUPPORTED_MODELS,
                        help="model identifier")
    parser.add_argument("--checkpoint", help="local checkpoint path; default is the zoo")
    parser.add_argument("--zoo-weights", default=DEFAULT_ZOO_WEIGHTS,
                        help="zoo weight set name (default %(default)s)")
    parser.add_argument("--out", required=True, help="output container path")
    parser.add_argument("--manifest", required=True, help="output manifest path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ExportWarning)
        try:
            status = run_export(args.model, args.out, args.manifest,
                                checkpoint=args.checkpoint,
                                zoo_weights=args.zoo_weights)
        except NameMappingError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 3
        except (UnknownModelError, ExportError, ValueError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        finally:
            for item in caught:
                print(f"warning: {item.message}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
