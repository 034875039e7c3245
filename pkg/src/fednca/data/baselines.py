"""Payload-size simulation for conventional segmentation architectures.

Parameter counts are configuration defaults, not measured values; the
point is the cost ratio against the compact cellular-automata model. All
byte counts come from the live payload serializers, never a side formula.
"""

from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from ..errors import ConfigError
from ..compression import quantize_4bit, topk_sparsify
from ..fl.payloads import DensePayload, encode_payload

CODEC_DENSE = "dense"
CODEC_4BIT = "4bit"
CODEC_TOPK = "topk"
ALL_CODECS = (CODEC_DENSE, CODEC_4BIT, CODEC_TOPK)


@dataclass(frozen=True)
class BaselineSpec:
    name: str
    param_count: int
    bytes_per_param: int = 4

    def __post_init__(self):
        if self.param_count <= 0:
            raise ConfigError("baseline parameter count must be positive")


DEFAULT_BASELINES: Tuple[BaselineSpec, ...] = (
    BaselineSpec("unet", 31_000_000),
    BaselineSpec("transunet", 105_000_000),
)


def simulate_baseline_costs(
    spec: BaselineSpec,
    codecs: List[str],
    k_percent: float,
    reference_bytes: int,
    seed: int = 0,
) -> Dict[str, Dict[str, float]]:
    """Serialized upstream bytes per codec for a random weight blob of the
    baseline's size, with ratios against the reference dense payload."""
    rng = np.random.default_rng(seed)
    blob = rng.standard_normal(spec.param_count).astype(np.float32)
    rows: Dict[str, Dict[str, float]] = {}
    for codec in codecs:
        if codec == CODEC_DENSE:
            payload = DensePayload(blob)
        elif codec == CODEC_4BIT:
            payload = quantize_4bit(blob)
        elif codec == CODEC_TOPK:
            payload = topk_sparsify(blob, np.zeros_like(blob), k_percent)
        else:
            raise ConfigError(f"unknown codec {codec!r}")
        size = len(encode_payload(payload))
        rows[codec] = {
            "bytes": size,
            "mib": size / 2**20,
            "ratio_vs_reference": size / reference_bytes,
        }
        del payload
    return rows
