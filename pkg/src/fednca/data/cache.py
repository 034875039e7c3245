"""Dataset split cache: one file per split.

Layout (little-endian): magic "FNDS" | version u16 | count u32 |
height u32 | width u32, then per sample the float32 image followed by the
uint8 mask. Regenerating from (spec, seed) yields byte-identical files.
"""

import struct
from typing import List

import numpy as np

from ..errors import FormatError
from .synthetic import SegSample

MAGIC = b"FNDS"
VERSION = 1
_HEADER = struct.Struct("<4sHIII")


def split_bytes(samples: List[SegSample]) -> bytes:
    if not samples:
        raise FormatError("refusing to cache an empty split")
    h, w = samples[0].image.shape
    parts = [_HEADER.pack(MAGIC, VERSION, len(samples), h, w)]
    for s in samples:
        if s.image.shape != (h, w) or s.mask.shape != (h, w):
            raise FormatError("all samples in a split must share one shape")
        parts.append(s.image.astype("<f4").tobytes())
        parts.append(s.mask.astype(np.uint8).tobytes())
    return b"".join(parts)


def save_split(samples: List[SegSample], path):
    with open(path, "wb") as f:
        f.write(split_bytes(samples))


def parse_split(blob: bytes) -> List[SegSample]:
    if len(blob) < _HEADER.size:
        raise FormatError("split cache truncated before header")
    magic, version, count, h, w = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"bad split magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported split version {version}")
    per_sample = 4 * h * w + h * w
    expected = _HEADER.size + count * per_sample
    if len(blob) != expected:
        raise FormatError(f"split length {len(blob)} != expected {expected}")
    out = []
    offset = _HEADER.size
    for _ in range(count):
        img = np.frombuffer(blob, "<f4", h * w, offset).reshape(h, w)
        offset += 4 * h * w
        mask = np.frombuffer(blob, np.uint8, h * w, offset).reshape(h, w)
        offset += h * w
        out.append(SegSample(img.astype(np.float32), mask.copy()))
    return out


def load_split(path) -> List[SegSample]:
    with open(path, "rb") as f:
        return parse_split(f.read())
