"""Uniform affine 4-bit quantization, per tensor segment.

Each segment maps [min, max] onto 16 levels: step = (max - min) / 15,
code = round((x - min) / step), value back as min + code * step. A
constant segment degenerates to step 0 with every code at level 0. The
worst-case round-trip error is half a step, (max - min) / 30.
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from ..errors import DataError

LEVELS = 16
STEPS = LEVELS - 1


@dataclass
class QuantizedPayload:
    """Packed 4-bit codes plus per-segment affine metadata.

    codes: one bytes object per segment, two codes per byte (low nibble
    first, odd tail padded with zero). scales[i] is the segment step size,
    zero_points[i] its minimum.
    """

    codes: List[bytes]
    scales: np.ndarray  # (n_segments,) float64
    zero_points: np.ndarray
    segment_lengths: Tuple[int, ...]
    original_length: int


def _pack_nibbles(codes: np.ndarray) -> bytes:
    if codes.size % 2:
        codes = np.concatenate([codes, np.zeros(1, np.uint8)])
    pairs = codes.reshape(-1, 2)
    return (pairs[:, 0] | (pairs[:, 1] << 4)).astype(np.uint8).tobytes()


def _unpack_nibbles(blob: bytes, length: int) -> np.ndarray:
    raw = np.frombuffer(blob, np.uint8)
    out = np.empty(raw.size * 2, np.uint8)
    out[0::2] = raw & 0x0F
    out[1::2] = raw >> 4
    return out[:length]


def quantize_4bit(vec: np.ndarray, segment_lengths: Sequence[int] = None) -> QuantizedPayload:
    """Quantize a weight vector; segments default to one spanning the vector."""
    v = np.asarray(vec, np.float64).ravel()
    if v.size and not np.all(np.isfinite(v)):
        raise DataError("cannot quantize non-finite values")
    if segment_lengths is None:
        segment_lengths = (v.size,)
    if sum(segment_lengths) != v.size:
        raise DataError(
            f"segment lengths sum to {sum(segment_lengths)}, vector has {v.size}"
        )
    codes, scales, zeros = [], [], []
    offset = 0
    for seg_len in segment_lengths:
        seg = v[offset : offset + seg_len]
        offset += seg_len
        lo = float(seg.min()) if seg_len else 0.0
        hi = float(seg.max()) if seg_len else 0.0
        step = (hi - lo) / STEPS
        if step > 0.0:
            q = np.clip(np.rint((seg - lo) / step), 0, STEPS).astype(np.uint8)
        else:
            q = np.zeros(seg_len, np.uint8)  # constant segment: passthrough level 0
        codes.append(_pack_nibbles(q))
        scales.append(step)
        zeros.append(lo)
    return QuantizedPayload(
        codes, np.array(scales), np.array(zeros), tuple(segment_lengths), v.size
    )


def dequantize(payload: QuantizedPayload) -> np.ndarray:
    out = np.empty(payload.original_length, np.float64)
    offset = 0
    for blob, step, lo, seg_len in zip(
        payload.codes, payload.scales, payload.zero_points, payload.segment_lengths
    ):
        q = _unpack_nibbles(blob, seg_len).astype(np.float64)
        out[offset : offset + seg_len] = lo + q * step
        offset += seg_len
    return out
