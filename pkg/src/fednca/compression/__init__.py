"""Lossy update codecs: 4-bit affine quantization and top-k sparsification."""

from .quantize import QuantizedPayload, dequantize, quantize_4bit
from .topk import SparsePayload, apply_sparse_update, topk_sparsify

__all__ = [
    "QuantizedPayload",
    "SparsePayload",
    "apply_sparse_update",
    "dequantize",
    "quantize_4bit",
    "topk_sparsify",
]
