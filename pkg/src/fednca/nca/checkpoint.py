"""Binary checkpoint format.

Layout (all little-endian):
    magic "FNCA" | version u16 | channels, c_in, c_out, hidden_units,
    t0, t1, downscale_factor (each u32) | step_grad_mean u8 |
    fire_rate f64 | eta f64 | weight count u64 | weights as f32
Weights use the flatten_model order (theta w1/b1/w2/b2, then omega).
"""

import struct

import numpy as np

from ..errors import FormatError
from .config import ModelConfig
from .model import TwoStageModel, flatten_model, param_count, unflatten_model

MAGIC = b"FNCA"
VERSION = 1
_HEADER = struct.Struct("<4sH7IBddQ")


def checkpoint_bytes(model: TwoStageModel) -> bytes:
    cfg = model.config
    vec = flatten_model(model).astype(np.float32)
    header = _HEADER.pack(
        MAGIC, VERSION,
        cfg.channels, cfg.c_in, cfg.c_out, cfg.hidden_units,
        cfg.t0, cfg.t1, cfg.downscale_factor,
        int(cfg.step_grad_mean), cfg.fire_rate, cfg.eta, vec.size,
    )
    return header + vec.tobytes()


def save_checkpoint(model: TwoStageModel, path):
    with open(path, "wb") as f:
        f.write(checkpoint_bytes(model))


def parse_checkpoint(blob: bytes) -> TwoStageModel:
    if len(blob) < _HEADER.size:
        raise FormatError("checkpoint truncated before header")
    (magic, version, channels, c_in, c_out, hidden, t0, t1, factor,
     step_mean, fire_rate, eta, count) = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"bad checkpoint magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    cfg = ModelConfig(
        channels=channels, c_in=c_in, c_out=c_out, hidden_units=hidden,
        t0=t0, t1=t1, fire_rate=fire_rate, downscale_factor=factor,
        eta=eta, step_grad_mean=bool(step_mean),
    )
    if count != param_count(cfg):
        raise FormatError(
            f"weight count {count} does not match config ({param_count(cfg)})"
        )
    expected = _HEADER.size + 4 * count
    if len(blob) != expected:
        raise FormatError(f"checkpoint length {len(blob)} != expected {expected}")
    vec = np.frombuffer(blob, np.dtype("<f4"), count=count, offset=_HEADER.size)
    return unflatten_model(vec.astype(np.float32), cfg)


def load_checkpoint(path) -> TwoStageModel:
    with open(path, "rb") as f:
        return parse_checkpoint(f.read())
