"""Counter-based deterministic random streams.

Every stream is addressed by (seed, name). The 64-bit stream key folds
the seed together with the first 8 bytes of SHA-256(name), and word i of
the stream is a pure function of (key, i):

    key   = mix64(seed XOR sha256_64(name))
    x_i   = mix64(key + (i + 1) * 0x9E3779B97F4A7C15)      i = 0, 1, ...
    u_i   = ((x_i >> 11) + 0.5) * 2**-53                   uniform in (0, 1)

mix64 is the splitmix64 finalizer. Standard normals come from the
Box-Muller transform applied to consecutive uniform pairs, so any prefix
of a stream is independent of how much of it is requested.

Integer words are bit-portable. The float outputs are deterministic
within one build of this library; numpy's transcendental kernels may
differ across platforms, so cross-build bit equality is not promised.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["stream_key", "normals", "uniforms"]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def _mix64(x: np.ndarray | np.uint64) -> np.ndarray | np.uint64:
    # uint64 wraparound is the point here; keep numpy quiet about it
    with np.errstate(over="ignore"):
        x ^= x >> np.uint64(30)
        x *= _MIX1
        x ^= x >> np.uint64(27)
        x *= _MIX2
        x ^= x >> np.uint64(31)
    return x


def stream_key(seed: int, name: str) -> int:
    """64-bit key of the (seed, name) stream."""
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    folded = (seed & _MASK) ^ int.from_bytes(digest[:8], "little")
    return int(_mix64(np.uint64(folded)))


def _words(key: int, count: int) -> np.ndarray:
    idx = np.arange(1, count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        counters = np.uint64(key) + idx * _GOLDEN
    return _mix64(counters)


def uniforms(seed: int, name: str, count: int) -> np.ndarray:
    """`count` doubles in the open interval (0, 1)."""
    words = _words(stream_key(seed, name), count)
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def normals(seed: int, name: str, count: int) -> np.ndarray:
    """`count` standard normal doubles from the (seed, name) stream."""
    if count < 0:
        raise ValueError("count must be >= 0")
    pairs = (count + 1) // 2
    u = uniforms(seed, name, 2 * pairs)
    radius = np.sqrt(-2.0 * np.log(u[0::2]))
    angle = (2.0 * np.pi) * u[1::2]
    out = np.empty(2 * pairs, dtype=np.float64)
    out[0::2] = radius * np.cos(angle)
    out[1::2] = radius * np.sin(angle)
    return out[:count]
