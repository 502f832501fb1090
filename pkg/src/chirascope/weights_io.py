"""Tensor container and layer manifest I/O.

Container layout (bit-exact):

  bytes 0..8    unsigned 64-bit little-endian header length N
  bytes 8..8+N  UTF-8 JSON object mapping each tensor name to
                {"dtype": str, "shape": [int, ...], "data_offsets": [begin, end]}
                plus an optional "__metadata__" string-to-string object
  rest          raw little-endian tensor payloads; offsets are relative to
                the end of the header and must not overlap

Only "F32" tensors are decoded into arrays. Anything else is kept as an
opaque blob (shape, dtype string, raw bytes) so the file still round-trips,
and a ContainerWarning is emitted.

The manifest is a small JSON document naming the model, its family, and the
ordered conv-layer entries with their stage and include flag.
"""

from __future__ import annotations

import json
import math
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from chirascope.errors import ContainerError, ContainerWarning, ManifestError

__all__ = [
    "TensorRecord",
    "OpaqueTensor",
    "TensorMap",
    "ConvLayer",
    "ManifestEntry",
    "Manifest",
    "read_container",
    "write_container",
    "read_manifest",
    "write_manifest",
    "extract_conv_layers",
]

_METADATA_KEY = "__metadata__"
_F32 = np.dtype("<f4")

FAMILIES = ("alexnet", "vgg", "resnet", "unknown")


@dataclass(frozen=True, eq=False)
class TensorRecord:
    """One decoded tensor: extents plus flat row-major float32 data."""

    shape: tuple[int, ...]
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(x) for x in self.shape))
        if any(x < 0 for x in self.shape):
            raise ContainerError(f"negative extent in shape {self.shape}")
        if self.data.dtype != _F32:
            raise ContainerError(
                f"tensor data must be little-endian float32, got {self.data.dtype}"
            )
        if self.data.ndim != 1:
            raise ContainerError("tensor data must be a flat array")
        if self.data.size != math.prod(self.shape):
            raise ContainerError(
                f"data length {self.data.size} does not match shape {self.shape}"
            )

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "TensorRecord":
        arr = np.asarray(arr)
        if arr.dtype != _F32:
            raise ContainerError(
                f"expected float32 input, got {arr.dtype}; convert explicitly"
            )
        flat = np.ascontiguousarray(arr).reshape(-1)
        return cls(shape=tuple(arr.shape), data=flat)

    def __eq__(self, other):
        if not isinstance(other, TensorRecord):
            return NotImplemented
        return self.shape == other.shape and self.data.tobytes() == other.data.tobytes()


@dataclass(frozen=True, eq=False)
class OpaqueTensor:
    """A tensor retained without decoding (non-F32 dtype)."""

    dtype: str
    shape: tuple[int, ...]
    raw: bytes

    def __eq__(self, other):
        if not isinstance(other, OpaqueTensor):
            return NotImplemented
        return (self.dtype, self.shape, self.raw) == (other.dtype, other.shape, other.raw)


@dataclass(eq=False)
class TensorMap:
    """Named collection of tensors parsed from one container file.

    Treat instances as immutable after construction; they are safe to share
    across threads.
    """

    entries: dict[str, TensorRecord] = field(default_factory=dict)
    metadata: dict[str, str] | None = None
    skipped: dict[str, OpaqueTensor] = field(default_factory=dict)

    def __post_init__(self):
        for name in list(self.entries) + list(self.skipped):
            if name == _METADATA_KEY:
                raise ContainerError(f"tensor name {_METADATA_KEY!r} is reserved")
        dup = set(self.entries) & set(self.skipped)
        if dup:
            raise ContainerError(f"tensor names are not unique: {sorted(dup)}")
        if self.metadata is not None:
            for k, v in self.metadata.items():
                if not isinstance(k, str) or not isinstance(v, str):
                    raise ContainerError("metadata must map strings to strings")

    @classmethod
    def from_arrays(
        cls, arrays: dict[str, np.ndarray], metadata: dict[str, str] | None = None
    ) -> "TensorMap":
        return cls(
            entries={name: TensorRecord.from_array(a) for name, a in arrays.items()},
            metadata=metadata,
        )

    def __eq__(self, other):
        if not isinstance(other, TensorMap):
            return NotImplemented
        return (
            self.entries == other.entries
            and self.metadata == other.metadata
            and self.skipped == other.skipped
        )


@dataclass(frozen=True)
class ConvLayer:
    """One convolution layer's weights, flattened row-major.

    Kernel data is indexed [kernel, channel, row, column]; a layer can be
    mirrored only when its kernel width is at least 2.
    """

    name: str
    out_channels: int
    in_channels: int
    height: int
    width: int
    stage: int | None
    data: np.ndarray

    def __post_init__(self):
        for label, x in (
            ("out_channels", self.out_channels),
            ("in_channels", self.in_channels),
            ("height", self.height),
            ("width", self.width),
        ):
            if x < 1:
                raise ContainerError(f"{self.name}: {label} must be >= 1, got {x}")
        if self.stage is not None and self.stage not in (1, 2, 3, 4, 5):
            raise ManifestError(f"{self.name}: stage must be 1..5, got {self.stage}")
        expected = self.out_channels * self.in_channels * self.height * self.width
        if self.data.ndim != 1 or self.data.size != expected:
            raise ContainerError(
                f"{self.name}: data length {self.data.size} does not match "
                f"{self.out_channels}x{self.in_channels}x{self.height}x{self.width}"
            )

    @property
    def flippable(self) -> bool:
        return self.width >= 2

    @property
    def kernel_dim(self) -> int:
        return self.in_channels * self.height * self.width

    def kernels(self) -> np.ndarray:
        """View shaped (kernels, channels, rows, columns)."""
        return self.data.reshape(
            self.out_channels, self.in_channels, self.height, self.width
        )


@dataclass(frozen=True)
class ManifestEntry:
    tensor: str
    stage: int
    include: bool

    def __post_init__(self):
        if self.stage not in (1, 2, 3, 4, 5):
            raise ManifestError(f"{self.tensor}: stage must be 1..5, got {self.stage}")


@dataclass(frozen=True)
class Manifest:
    model_name: str
    family: str
    layers: tuple[ManifestEntry, ...]

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ManifestError(
                f"family must be one of {FAMILIES}, got {self.family!r}"
            )
        object.__setattr__(self, "layers", tuple(self.layers))
        names = [e.tensor for e in self.layers]
        if len(names) != len(set(names)):
            raise ManifestError("manifest lists a tensor more than once")


def _reject_duplicate_keys(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ContainerError(f"duplicate tensor name in header: {k!r}")
        out[k] = v
    return out


def _parse_header(blob: bytes) -> tuple[dict, int]:
    if len(blob) < 8:
        raise ContainerError("file too short for the 8-byte header length")
    (n,) = struct.unpack("<Q", blob[:8])
    if 8 + n > len(blob):
        raise ContainerError(
            f"header length {n} exceeds file size {len(blob)}"
        )
    try:
        text = blob[8 : 8 + n].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ContainerError(f"header is not valid UTF-8: {exc}") from None
    try:
        header = json.loads(text, object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise ContainerError(f"header is not valid JSON: {exc}") from None
    if not isinstance(header, dict):
        raise ContainerError("header must be a JSON object")
    return header, 8 + n


def _validate_shape(name: str, raw) -> tuple[int, ...]:
    if not isinstance(raw, list) or any(
        isinstance(x, bool) or not isinstance(x, int) or x < 0 for x in raw
    ):
        raise ContainerError(f"tensor {name!r}: shape must be a list of extents >= 0")
    return tuple(raw)


def _validate_offsets(name: str, raw, payload_size: int) -> tuple[int, int]:
    ok = (
        isinstance(raw, list)
        and len(raw) == 2
        and all(isinstance(x, int) and not isinstance(x, bool) for x in raw)
    )
    if not ok:
        raise ContainerError(f"tensor {name!r}: data_offsets must be [begin, end]")
    begin, end = raw
    if not (0 <= begin <= end <= payload_size):
        raise ContainerError(
            f"tensor {name!r}: data_offsets [{begin}, {end}) out of bounds "
            f"for payload of {payload_size} bytes"
        )
    return begin, end


def read_container(path) -> TensorMap:
    """Parse a container file into a TensorMap.

    Raises ContainerError on any structural defect: bad header length,
    invalid JSON, overlapping or out-of-bounds offsets, or a byte span
    that disagrees with the declared shape.
    """
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise ContainerError(f"cannot read {path}: {exc}") from None
    header, payload_start = _parse_header(blob)
    payload = blob[payload_start:]

    metadata = None
    entries: dict[str, TensorRecord] = {}
    skipped: dict[str, OpaqueTensor] = {}
    spans: list[tuple[int, int, str]] = []

    for name, desc in header.items():
        if name == _METADATA_KEY:
            if not isinstance(desc, dict) or any(
                not isinstance(k, str) or not isinstance(v, str)
                for k, v in desc.items()
            ):
                raise ContainerError("__metadata__ must map strings to strings")
            metadata = dict(desc)
            continue
        if not isinstance(desc, dict):
            raise ContainerError(f"tensor {name!r}: descriptor must be an object")
        dtype = desc.get("dtype")
        if not isinstance(dtype, str):
            raise ContainerError(f"tensor {name!r}: missing dtype string")
        shape = _validate_shape(name, desc.get("shape"))
        begin, end = _validate_offsets(name, desc.get("data_offsets"), len(payload))
        if end > begin:
            spans.append((begin, end, name))
        raw = payload[begin:end]
        if dtype == "F32":
            expected = math.prod(shape) * 4
            if end - begin != expected:
                raise ContainerError(
                    f"tensor {name!r}: byte span {end - begin} does not match "
                    f"shape {list(shape)} (expected {expected})"
                )
            entries[name] = TensorRecord(
                shape=shape, data=np.frombuffer(raw, dtype=_F32)
            )
        else:
            warnings.warn(
                f"tensor {name!r} has unsupported dtype {dtype!r}; "
                "kept as an opaque blob",
                ContainerWarning,
                stacklevel=2,
            )
            skipped[name] = OpaqueTensor(dtype=dtype, shape=shape, raw=raw)

    spans.sort()
    for (b0, e0, n0), (b1, e1, n1) in zip(spans, spans[1:]):
        if b1 < e0:
            raise ContainerError(
                f"tensors {n0!r} and {n1!r} have overlapping data offsets"
            )

    return TensorMap(entries=entries, metadata=metadata, skipped=skipped)


def write_container(tm: TensorMap, path) -> None:
    """Serialize a TensorMap; the emitted file re-parses to an equal map."""
    header: dict[str, object] = {}
    if tm.metadata is not None:
        header[_METADATA_KEY] = dict(tm.metadata)
    chunks: list[bytes] = []
    offset = 0

    def add(name: str, dtype: str, shape: tuple[int, ...], raw: bytes):
        nonlocal offset
        header[name] = {
            "dtype": dtype,
            "shape": list(shape),
            "data_offsets": [offset, offset + len(raw)],
        }
        chunks.append(raw)
        offset += len(raw)

    for name, rec in tm.entries.items():
        add(name, "F32", rec.shape, rec.data.tobytes())
    for name, blob in tm.skipped.items():
        add(name, blob.dtype, blob.shape, blob.raw)

    encoded = json.dumps(header, separators=(",", ":"), ensure_ascii=False).encode(
        "utf-8"
    )
    path = Path(path)
    try:
        with open(path, "wb") as fh:
            fh.write(struct.pack("<Q", len(encoded)))
            fh.write(encoded)
            fh.writelines(chunks)
    except OSError as exc:
        raise ContainerError(f"cannot write {path}: {exc}") from None


def read_manifest(path) -> Manifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ManifestError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path} is not valid JSON: {exc}") from None
    try:
        layers = tuple(
            ManifestEntry(
                tensor=str(e["tensor"]), stage=int(e["stage"]), include=bool(e["include"])
            )
            for e in doc["layers"]
        )
        return Manifest(
            model_name=str(doc["model_name"]),
            family=str(doc["family"]),
            layers=layers,
        )
    except (KeyError, TypeError) as exc:
        raise ManifestError(f"{path}: missing or malformed field: {exc}") from None


def write_manifest(manifest: Manifest, path) -> None:
    doc = {
        "model_name": manifest.model_name,
        "family": manifest.family,
        "layers": [
            {"tensor": e.tensor, "stage": e.stage, "include": e.include}
            for e in manifest.layers
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _layer_from_record(name: str, rec: TensorRecord, stage: int | None) -> ConvLayer:
    b, c, h, w = rec.shape
    return ConvLayer(
        name=name,
        out_channels=b,
        in_channels=c,
        height=h,
        width=w,
        stage=stage,
        data=rec.data,
    )


def extract_conv_layers(
    tm: TensorMap,
    manifest: Manifest | None = None,
    suffix: str = "weight",
) -> list[ConvLayer]:
    """Pull analyzable convolution layers out of a TensorMap.

    With a manifest, every listed tensor must resolve to a rank-4 float
    tensor; the included entries come back in manifest order with stages
    assigned. Without one, every rank-4 float tensor whose name ends in
    ``suffix`` comes back in header order with no stage.
    """
    if manifest is not None:
        layers = []
        for entry in manifest.layers:
            rec = tm.entries.get(entry.tensor)
            if rec is None:
                where = "opaque (non-F32)" if entry.tensor in tm.skipped else "missing"
                raise ManifestError(
                    f"manifest references {where} tensor {entry.tensor!r}"
                )
            if len(rec.shape) != 4:
                raise ManifestError(
                    f"manifest references rank-{len(rec.shape)} tensor "
                    f"{entry.tensor!r}; conv layers must be rank 4"
                )
            if any(x < 1 for x in rec.shape):
                raise ManifestError(
                    f"manifest references empty tensor {entry.tensor!r} "
                    f"with shape {list(rec.shape)}"
                )
            if entry.include:
                layers.append(_layer_from_record(entry.tensor, rec, entry.stage))
        return layers

    layers = []
    for name, rec in tm.entries.items():
        if len(rec.shape) != 4 or not name.endswith(suffix):
            continue
        if any(x < 1 for x in rec.shape):
            warnings.warn(
                f"skipping rank-4 tensor {name!r} with an empty extent",
                ContainerWarning,
                stacklevel=2,
            )
            continue
        layers.append(_layer_from_record(name, rec, None))
    return layers
