"""Minimal writers for the neutral tensor container and layer manifest.

Container layout: an unsigned 64-bit little-endian header length, a UTF-8
JSON header mapping tensor names to dtype/shape/data_offsets (offsets are
relative to the end of the header), then the raw little-endian payloads in
offset order. An optional ``__metadata__`` object carries string-to-string
annotations. Only F32 tensors are ever written here.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from export_tool.errors import ExportError

__all__ = ["write_container", "write_manifest"]

_F32 = np.dtype("<f4")


def write_container(path, tensors, metadata=None) -> None:
    """Write named float32 arrays to ``path`` in insertion order."""
    header = {}
    if metadata:
        header["__metadata__"] = {str(k): str(v) for k, v in metadata.items()}
    payloads = []
    offset = 0
    for name, arr in tensors.items():
        if name == "__metadata__":
            raise ExportError("tensor name '__metadata__' is reserved")
        arr = np.asarray(arr)
        if arr.dtype != _F32:
            raise ExportError(f"{name}: expected float32, got {arr.dtype}")
        raw = np.ascontiguousarray(arr).tobytes()
        header[name] = {
            "dtype": "F32",
            "shape": list(arr.shape),
            "data_offsets": [offset, offset + len(raw)],
        }
        payloads.append(raw)
        offset += len(raw)
    blob = json.dumps(header, ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for raw in payloads:
            fh.write(raw)


def write_manifest(path, model_name, family, entries) -> None:
    """Write the layer manifest: ordered tensor/stage/include records."""
    doc = {
        "model_name": model_name,
        "family": family,
        "layers": [
            {"tensor": e.tensor, "stage": e.stage, "include": e.include}
            for e in entries
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
