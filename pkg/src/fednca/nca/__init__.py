"""Two-stage neural cellular automaton backbone.

State grids are plain numpy arrays of shape (channels, H, W); batched
variants use (B, channels, H, W). Channel layout: the first ``c_in``
channels hold the (read-only) input image, the next ``c_out`` channels are
the class logits, the remainder is hidden state.
"""

from .config import ModelConfig
from .model import (
    NcaWeights,
    TwoStageModel,
    flatten_model,
    flatten_weights,
    init_model,
    param_count,
    unflatten_model,
)
from .ops import downscale, nca_step, perceive, upscale_and_concat
from .training import (
    Tape,
    backward_bptt,
    cross_entropy_loss,
    fire_mask,
    forward,
    predict,
    sgd_step,
)
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "ModelConfig",
    "NcaWeights",
    "TwoStageModel",
    "Tape",
    "backward_bptt",
    "cross_entropy_loss",
    "downscale",
    "fire_mask",
    "flatten_model",
    "flatten_weights",
    "forward",
    "init_model",
    "load_checkpoint",
    "nca_step",
    "param_count",
    "perceive",
    "predict",
    "save_checkpoint",
    "sgd_step",
    "unflatten_model",
    "upscale_and_concat",
]
