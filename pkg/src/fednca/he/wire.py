"""Ciphertext and key wire format.

Header (little-endian): magic "FHE1" | ring_degree u32 | moduli_count u8 |
level u8 | scale f64 — 18 bytes. Body: c0 then c1, each as moduli_count
rows of ring_degree coefficients, uint64 little-endian, lowest modulus
first. Key files reuse the header with level=0 and a type byte appended.
"""

import struct

import numpy as np

from ..errors import FormatError
from .params import HeParams
from .ckks import Ciphertext

MAGIC = b"FHE1"
_HEADER = struct.Struct("<4sIBBd")
HEADER_BYTES = _HEADER.size  # 18


def ciphertext_num_bytes(params: HeParams, level: int = None) -> int:
    """Exact serialized size for the given parameters and level."""
    if level is None:
        level = params.max_level
    return HEADER_BYTES + 2 * params.ring_degree * (level + 1) * 8


def serialize(ct: Ciphertext) -> bytes:
    moduli_count = ct.level + 1
    header = _HEADER.pack(
        MAGIC, ct.params.ring_degree, moduli_count, ct.level, ct.scale
    )
    body = ct.c0.astype("<u8").tobytes() + ct.c1.astype("<u8").tobytes()
    return header + body


def deserialize(blob: bytes, params: HeParams) -> Ciphertext:
    if len(blob) < HEADER_BYTES:
        raise FormatError("ciphertext truncated before header")
    magic, ring, moduli_count, level, scale = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"bad ciphertext magic {magic!r}")
    if ring != params.ring_degree:
        raise FormatError(f"ring degree {ring} does not match params {params.ring_degree}")
    if moduli_count != level + 1 or moduli_count > len(params.coeff_modulus):
        raise FormatError(f"inconsistent moduli_count={moduli_count} level={level}")
    expected = ciphertext_num_bytes(params, level)
    if len(blob) != expected:
        raise FormatError(f"ciphertext length {len(blob)} != expected {expected}")
    flat = np.frombuffer(blob, "<u8", offset=HEADER_BYTES)
    half = flat.size // 2
    shape = (moduli_count, ring)
    c0 = flat[:half].reshape(shape).astype(np.uint64)
    c1 = flat[half:].reshape(shape).astype(np.uint64)
    for i, q in enumerate(params.coeff_modulus[:moduli_count]):
        if int(c0[i].max(initial=0)) >= q or int(c1[i].max(initial=0)) >= q:
            raise FormatError(f"residue out of range for modulus index {i}")
    return Ciphertext(c0, c1, scale, level, params)
