"""Weight containers, initialization, and the flat wire representation."""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from .config import ModelConfig


@dataclass
class NcaWeights:
    """Parameters of one cell update rule (a per-pixel two-layer MLP).

    w1: (hidden_units, perception_channels), b1: (hidden_units,),
    w2: (channels, hidden_units), b2: (channels,).
    """

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def check_shapes(self, config: ModelConfig):
        expected = (
            (self.w1.shape, (config.hidden_units, config.perception_channels)),
            (self.b1.shape, (config.hidden_units,)),
            (self.w2.shape, (config.channels, config.hidden_units)),
            (self.b2.shape, (config.channels,)),
        )
        for got, want in expected:
            if got != want:
                raise ConfigError(f"weight shape {got} does not match config ({want})")

    def copy(self) -> "NcaWeights":
        return NcaWeights(self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy())

    def astype(self, dtype) -> "NcaWeights":
        return NcaWeights(
            self.w1.astype(dtype), self.b1.astype(dtype),
            self.w2.astype(dtype), self.b2.astype(dtype),
        )


@dataclass
class TwoStageModel:
    """Coarse-stage weights (theta), fine-stage weights (omega), shared config."""

    theta: NcaWeights
    omega: NcaWeights
    config: ModelConfig

    def check(self):
        self.theta.check_shapes(self.config)
        self.omega.check_shapes(self.config)

    def copy(self) -> "TwoStageModel":
        return TwoStageModel(self.theta.copy(), self.omega.copy(), self.config)


def stage_param_count(config: ModelConfig) -> int:
    h, p, c = config.hidden_units, config.perception_channels, config.channels
    return h * p + h + c * h + c


def param_count(config: ModelConfig) -> int:
    """Total trainable parameters across both stages."""
    return 2 * stage_param_count(config)


def _init_stage(config: ModelConfig, rng: np.random.Generator, dtype) -> NcaWeights:
    # Zero-initialized output layer makes the initial update rule the
    # identity map, which keeps long unrolled rollouts stable.
    fan_in = config.perception_channels
    bound = 1.0 / np.sqrt(fan_in)
    w1 = rng.uniform(-bound, bound, (config.hidden_units, fan_in)).astype(dtype)
    b1 = np.zeros(config.hidden_units, dtype)
    w2 = np.zeros((config.channels, config.hidden_units), dtype)
    b2 = np.zeros(config.channels, dtype)
    return NcaWeights(w1, b1, w2, b2)


def init_model(config: ModelConfig, seed: int, dtype=np.float32) -> TwoStageModel:
    """Seeded initialization of both stages."""
    rng = np.random.default_rng(seed)
    theta = _init_stage(config, rng, dtype)
    omega = _init_stage(config, rng, dtype)
    return TwoStageModel(theta, omega, config)


def flatten_weights(weights: NcaWeights) -> np.ndarray:
    """Row-major w1, then b1, w2 (row-major), b2."""
    return np.concatenate([
        weights.w1.ravel(), weights.b1.ravel(),
        weights.w2.ravel(), weights.b2.ravel(),
    ])


def unflatten_weights(vec: np.ndarray, config: ModelConfig) -> NcaWeights:
    h, p, c = config.hidden_units, config.perception_channels, config.channels
    if vec.size != stage_param_count(config):
        raise ConfigError(
            f"stage vector length {vec.size} != expected {stage_param_count(config)}"
        )
    o = 0
    w1 = vec[o:o + h * p].reshape(h, p).copy(); o += h * p
    b1 = vec[o:o + h].copy(); o += h
    w2 = vec[o:o + c * h].reshape(c, h).copy(); o += c * h
    b2 = vec[o:o + c].copy()
    return NcaWeights(w1, b1, w2, b2)


def flatten_model(model: TwoStageModel) -> np.ndarray:
    """Theta block first, then omega, each in flatten_weights order."""
    return np.concatenate([flatten_weights(model.theta), flatten_weights(model.omega)])


def unflatten_model(vec: np.ndarray, config: ModelConfig) -> TwoStageModel:
    n = param_count(config)
    if vec.size != n:
        raise ConfigError(f"weight vector length {vec.size} != expected {n}")
    half = n // 2
    theta = unflatten_weights(vec[:half], config)
    omega = unflatten_weights(vec[half:], config)
    return TwoStageModel(theta, omega, config)
