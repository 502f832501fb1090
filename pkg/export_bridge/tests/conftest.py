"""Shared helpers: fake checkpoints, a hand-rolled container decoder, CLI runners."""

import json
import struct
import subprocess
import sys

import pytest

torch = pytest.importorskip("torch")
torchvision = pytest.importorskip("torchvision")


def fake_state_dict(model_id, seed=0):
    """A checkpoint-shaped dict with deterministic random conv weights.

    Non-conv entries keep their (zeroed) placeholders so the dict looks like
    a real full checkpoint rather than a conv-only extract.
    """
    model = torchvision.models.get_model(model_id, weights=None)
    gen = torch.Generator().manual_seed(seed)
    state = {}
    for key, value in model.state_dict().items():
        if key.endswith("weight") and value.dim() == 4:
            state[key] = torch.randn(value.shape, generator=gen)
        elif value.is_floating_point():
            state[key] = torch.zeros_like(value)
        else:
            state[key] = value.clone()
    return state


def decode_container(path):
    """Independent parse: (metadata, {name: (dtype, shape, raw bytes)})."""
    blob = path.read_bytes()
    (n,) = struct.unpack("<Q", blob[:8])
    header = json.loads(blob[8:8 + n].decode("utf-8"))
    data = blob[8 + n:]
    metadata = header.pop("__metadata__", None)
    tensors = {}
    for name, desc in header.items():
        begin, end = desc["data_offsets"]
        tensors[name] = (desc["dtype"], tuple(desc["shape"]), data[begin:end])
    return metadata, tensors


def run_export(*args):
    cmd = [sys.executable, "-m", "export_tool"] + [str(a) for a in args]
    return subprocess.run(cmd, capture_output=True, text=True)


def run_primary(*args):
    cmd = [sys.executable, "-m", "chirascope"] + [str(a) for a in args]
    return subprocess.run(cmd, capture_output=True, text=True)
