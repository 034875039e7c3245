"""Tagged wire format for model-update payloads.

Every payload is framed as: tag u8 | body_len u32 (little-endian), then a
tag-specific body. Transmission accounting reads sizes off these bytes,
never off side formulas.

tag 0 dense:     count u32 | count x float32
tag 1 quantized: original_length u32 | segment_count u16 |
                 seg_lengths u32 x S | (scale f64, zero_point f64) x S |
                 packed 4-bit codes per segment (ceil(len/2) bytes each)
tag 2 sparse:    indices u32 x count | values float32 x count
                 (count = body_len / 8; the receiver supplies the vector
                 length and reference round from protocol context, which
                 keeps the sparse frame within the dense frame for k <= 50)
tag 3 encrypted: original_length u32 | ciphertext_count u16 |
                 (blob_len u32 | ciphertext blob) x count
"""

import math
import struct
from dataclasses import dataclass
from typing import List, Union

import numpy as np

from ..errors import FormatError
from ..compression import QuantizedPayload, SparsePayload
from ..he import Ciphertext, HeParams
from ..he import deserialize as he_deserialize
from ..he import serialize as he_serialize

TAG_DENSE = 0
TAG_QUANTIZED = 1
TAG_SPARSE = 2
TAG_ENCRYPTED = 3

_FRAME = struct.Struct("<BI")


@dataclass
class DensePayload:
    values: np.ndarray  # float32


@dataclass
class EncryptedPayload:
    ciphertexts: List[Ciphertext]
    original_length: int


Payload = Union[DensePayload, QuantizedPayload, SparsePayload, EncryptedPayload]


def payload_tag(payload: Payload) -> int:
    if isinstance(payload, DensePayload):
        return TAG_DENSE
    if isinstance(payload, QuantizedPayload):
        return TAG_QUANTIZED
    if isinstance(payload, SparsePayload):
        return TAG_SPARSE
    if isinstance(payload, EncryptedPayload):
        return TAG_ENCRYPTED
    raise FormatError(f"unknown payload type {type(payload).__name__}")


def _dense_body(p: DensePayload) -> bytes:
    vals = np.asarray(p.values, np.float32)
    return struct.pack("<I", vals.size) + vals.astype("<f4").tobytes()


def _quantized_body(p: QuantizedPayload) -> bytes:
    s = len(p.segment_lengths)
    parts = [struct.pack("<IH", p.original_length, s)]
    parts.append(np.asarray(p.segment_lengths, "<u4").tobytes())
    meta = np.empty((s, 2), "<f8")
    meta[:, 0] = p.scales
    meta[:, 1] = p.zero_points
    parts.append(meta.tobytes())
    parts.extend(p.codes)
    return b"".join(parts)


def _sparse_body(p: SparsePayload) -> bytes:
    return p.indices.astype("<u4").tobytes() + p.values.astype("<f4").tobytes()


def _encrypted_body(p: EncryptedPayload) -> bytes:
    parts = [struct.pack("<IH", p.original_length, len(p.ciphertexts))]
    for ct in p.ciphertexts:
        blob = he_serialize(ct)
        parts.append(struct.pack("<I", len(blob)))
        parts.append(blob)
    return b"".join(parts)


def encode_payload(payload: Payload) -> bytes:
    tag = payload_tag(payload)
    body = {
        TAG_DENSE: _dense_body,
        TAG_QUANTIZED: _quantized_body,
        TAG_SPARSE: _sparse_body,
        TAG_ENCRYPTED: _encrypted_body,
    }[tag](payload)
    return _FRAME.pack(tag, len(body)) + body


def payload_num_bytes(payload: Payload) -> int:
    """Serialized size; always measured from the actual bytes."""
    return len(encode_payload(payload))


def _need(blob: bytes, offset: int, count: int):
    if offset + count > len(blob):
        raise FormatError("payload truncated")
    return blob[offset : offset + count], offset + count


def decode_payload(
    blob: bytes,
    he_params: HeParams = None,
    original_length: int = None,
    reference_round: int = 0,
) -> Payload:
    """Parse one framed payload.

    Sparse frames are context-dependent: the caller must pass the expected
    ``original_length`` (and may pass ``reference_round``) because neither
    travels on the wire.
    """
    if len(blob) < _FRAME.size:
        raise FormatError("payload shorter than frame header")
    tag, body_len = _FRAME.unpack_from(blob)
    body = blob[_FRAME.size :]
    if len(body) != body_len:
        raise FormatError(f"payload body length {len(body)} != declared {body_len}")

    if tag == TAG_DENSE:
        raw, off = _need(body, 0, 4)
        (count,) = struct.unpack("<I", raw)
        raw, off = _need(body, off, 4 * count)
        if off != len(body):
            raise FormatError("trailing bytes in dense payload")
        return DensePayload(np.frombuffer(raw, "<f4").astype(np.float32))

    if tag == TAG_QUANTIZED:
        raw, off = _need(body, 0, 6)
        original, s = struct.unpack("<IH", raw)
        raw, off = _need(body, off, 4 * s)
        seg_lengths = tuple(int(x) for x in np.frombuffer(raw, "<u4"))
        if sum(seg_lengths) != original:
            raise FormatError("quantized segment lengths do not sum to original length")
        raw, off = _need(body, off, 16 * s)
        meta = np.frombuffer(raw, "<f8").reshape(s, 2)
        codes = []
        for seg_len in seg_lengths:
            raw, off = _need(body, off, math.ceil(seg_len / 2))
            codes.append(bytes(raw))
        if off != len(body):
            raise FormatError("trailing bytes in quantized payload")
        return QuantizedPayload(
            codes, meta[:, 0].copy(), meta[:, 1].copy(), seg_lengths, original
        )

    if tag == TAG_SPARSE:
        if original_length is None:
            raise FormatError("sparse payload requires original_length to decode")
        if len(body) % 8:
            raise FormatError("sparse payload body must hold u32/f32 pairs")
        count = len(body) // 8
        indices = np.frombuffer(body, "<u4", count).astype(np.uint32)
        values = np.frombuffer(body, "<f4", count, 4 * count).astype(np.float32)
        return SparsePayload(indices, values, reference_round, original_length)

    if tag == TAG_ENCRYPTED:
        if he_params is None:
            raise FormatError("encrypted payload requires HeParams to decode")
        raw, off = _need(body, 0, 6)
        original, count = struct.unpack("<IH", raw)
        cts = []
        for _ in range(count):
            raw, off = _need(body, off, 4)
            (blob_len,) = struct.unpack("<I", raw)
            raw, off = _need(body, off, blob_len)
            cts.append(he_deserialize(bytes(raw), he_params))
        if off != len(body):
            raise FormatError("trailing bytes in encrypted payload")
        return EncryptedPayload(cts, original)

    raise FormatError(f"unknown payload tag {tag}")
