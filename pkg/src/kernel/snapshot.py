"""
Versioned binary layout of an online GP state.

Little-endian header ``<4sHIIIIQ``: magic, version, d, |S|, tau, buffer
count m, slices assimilated. Float64 blocks follow in `FLOAT_BLOCKS` order.
Buffer blocks always span the full capacity tau (unused slots are zero), so
the encoded size depends on (d, |S|, tau) only.
"""

import struct
from typing import Dict, List, Tuple

import numpy as np

from src.kernel.errors import InvalidArgumentError

MAGIC = b"GPLS"
VERSION = 1
HEADER = struct.Struct("<4sHIIIIQ")
_F8 = np.dtype("<f8")

# name -> shape as a function of (d, s, tau)
FLOAT_BLOCKS: List[Tuple[str, object]] = [
    ("support", lambda d, s, tau: (s, d)),
    ("signal_var", lambda d, s, tau: ()),
    ("noise_var", lambda d, s, tau: ()),
    ("prior_mean", lambda d, s, tau: ()),
    ("length_scales", lambda d, s, tau: (d,)),
    ("mu_a", lambda d, s, tau: (s,)),
    ("sigma_a", lambda d, s, tau: (s, s)),
    ("sigma_a_inv", lambda d, s, tau: (s, s)),
    ("sigma_ss_inv", lambda d, s, tau: (s, s)),
    ("buffer_locations", lambda d, s, tau: (tau, d)),
    ("buffer_values", lambda d, s, tau: (tau,)),
    ("buffer_means", lambda d, s, tau: (tau,)),
    ("buffer_columns", lambda d, s, tau: (s, tau)),
    ("buffer_inverse", lambda d, s, tau: (tau, tau)),
    ("buffer_alpha", lambda d, s, tau: (tau,)),
]


def _block_shapes(d: int, s: int, tau: int) -> List[Tuple[str, Tuple[int, ...]]]:
    return [(name, shape(d, s, tau)) for name, shape in FLOAT_BLOCKS]


def snapshot_nbytes(d: int, s: int, tau: int) -> int:
    """Encoded size in bytes for the given dimensions."""
    floats = sum(int(np.prod(shape)) for _, shape in _block_shapes(d, s, tau))
    return HEADER.size + floats * _F8.itemsize


def encode(d: int, s: int, tau: int, count: int, slices: int, blocks: Dict[str, np.ndarray]) -> bytes:
    parts = [HEADER.pack(MAGIC, VERSION, d, s, tau, count, slices)]
    for name, shape in _block_shapes(d, s, tau):
        arr = np.asarray(blocks[name], dtype=_F8)
        if arr.shape != shape:
            raise InvalidArgumentError(f"snapshot block {name} has shape {arr.shape}, expected {shape}")
        parts.append(np.ascontiguousarray(arr).tobytes())
    return b"".join(parts)


def decode(data: bytes) -> Tuple[Dict[str, int], Dict[str, np.ndarray]]:
    """Parse a snapshot into (header fields, float blocks)."""
    if len(data) < HEADER.size:
        raise InvalidArgumentError("snapshot is shorter than its header")
    magic, version, d, s, tau, count, slices = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise InvalidArgumentError(f"bad snapshot magic {magic!r}")
    if version != VERSION:
        raise InvalidArgumentError(f"unsupported snapshot version {version}")
    if len(data) != snapshot_nbytes(d, s, tau):
        raise InvalidArgumentError(
            f"snapshot has {len(data)} bytes, expected {snapshot_nbytes(d, s, tau)}"
        )
    if count > tau:
        raise InvalidArgumentError(f"buffer count {count} exceeds capacity {tau}")

    flat = np.frombuffer(data, dtype=_F8, offset=HEADER.size)
    blocks: Dict[str, np.ndarray] = {}
    pos = 0
    for name, shape in _block_shapes(d, s, tau):
        size = int(np.prod(shape))
        blocks[name] = flat[pos:pos + size].reshape(shape).astype(float)
        pos += size
    header = {"dim": d, "support_size": s, "tau": tau, "count": count, "slices": slices}
    return header, blocks
