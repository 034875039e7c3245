"""Unidirectional top-k sparsification of weight updates.

Importance of a coordinate is |current - last_global|, the change since
the model the server last broadcast. Only the largest k% travel upstream;
dropped coordinates are simply discarded (no residual accumulation), and
the server treats them as unchanged from the last global model.
"""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DataError


@dataclass
class SparsePayload:
    """Strictly increasing u32 indices with their float32 values."""

    indices: np.ndarray
    values: np.ndarray
    reference_round: int
    original_length: int


def topk_sparsify(
    current: np.ndarray,
    last_global: np.ndarray,
    k_percent: float,
    reference_round: int = 0,
) -> SparsePayload:
    """Keep the ceil(k% * len) coordinates that moved most since the last
    global model; ties broken toward the lower index."""
    cur = np.asarray(current).ravel()
    ref = np.asarray(last_global).ravel()
    if cur.size != ref.size:
        raise DataError(f"length mismatch: {cur.size} vs {ref.size}")
    if not 0.0 < k_percent <= 100.0:
        raise DataError("k_percent must lie in (0, 100]")
    m = math.ceil(k_percent / 100.0 * cur.size)
    mag = np.abs(cur.astype(np.float64) - ref.astype(np.float64))
    # stable sort on -magnitude keeps lower indices first among ties
    order = np.argsort(-mag, kind="stable")[:m]
    idx = np.sort(order).astype(np.uint32)
    return SparsePayload(idx, cur[idx].astype(np.float32), reference_round, cur.size)


def apply_sparse_update(base: np.ndarray, payload: SparsePayload) -> np.ndarray:
    """Dense reconstruction: listed coordinates take the payload value,
    everything else keeps the base value."""
    b = np.asarray(base, np.float32).ravel()
    if payload.original_length != b.size:
        raise DataError(
            f"payload describes length {payload.original_length}, base has {b.size}"
        )
    if payload.indices.size and int(payload.indices.max()) >= b.size:
        raise DataError("sparse index out of range")
    out = b.copy()
    out[payload.indices] = payload.values
    return out
