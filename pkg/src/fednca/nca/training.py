"""Forward rollout, cross-entropy loss, and backpropagation through time."""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from ..errors import ConfigError, DataError
from .config import ModelConfig
from .model import NcaWeights, TwoStageModel
from .ops import (
    _batched,
    downscale,
    nca_step,
    nca_step_backward,
    _nn_upscale_adjoint,
    upscale_and_concat,
)


def fire_mask(
    seed: int, stage: int, step: int, shape: Tuple[int, ...], rate: float
) -> np.ndarray:
    """Boolean update mask from a counter-based generator keyed by
    (seed, stage, step); reproducible without storing external RNG state."""
    key = np.array([np.uint64(seed), np.uint64((stage << 32) | step)], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    return rng.random(shape) < rate


@dataclass
class Tape:
    """Everything needed to replay a forward pass in reverse: per-step input
    states and fire masks for both stages, plus the junction record."""

    config: ModelConfig
    seed: int
    deterministic: bool
    coarse_states: List[np.ndarray] = field(default_factory=list)
    coarse_masks: List[np.ndarray] = field(default_factory=list)
    fine_states: List[np.ndarray] = field(default_factory=list)
    fine_masks: List[np.ndarray] = field(default_factory=list)
    junction_state: np.ndarray = None  # coarse state entering the upscale
    final_state: np.ndarray = None

    def __len__(self):
        # one entry per NCA step plus the upscale/concat junction record
        return len(self.coarse_states) + len(self.fine_states) + 1


def _init_state(image: np.ndarray, config: ModelConfig, dtype) -> np.ndarray:
    b, h, w = image.shape
    state = np.zeros((b, config.channels, h, w), dtype)
    state[:, : config.c_in] = image[:, None]
    return state


def forward(
    model: TwoStageModel,
    image: np.ndarray,
    rng_seed: int = 0,
    deterministic: bool = False,
) -> Tuple[np.ndarray, Tape]:
    """Two-stage rollout per the federated client procedure: t0 coarse steps
    on the downscaled image, upscale/concat, then t1 fine steps.

    ``image`` is (H, W) or (B, H, W); logits come back as the c_out channels
    of the final state, (c_out, H, W) or (B, c_out, H, W).
    """
    cfg = model.config
    model.check()
    squeeze = image.ndim == 2
    img = image[None] if squeeze else image
    if img.ndim != 3:
        raise DataError(f"image must be (H, W) or (B, H, W), got {image.shape}")
    h, w = img.shape[-2:]
    f = cfg.downscale_factor
    if h % f or w % f:
        raise DataError(f"image dims {h}x{w} not divisible by downscale factor {f}")

    dtype = model.theta.w1.dtype
    img = img.astype(dtype, copy=False)
    tape = Tape(cfg, rng_seed, deterministic)

    # a diverging rollout overflows float32 before the finiteness check
    # below reports it; the raw numpy warnings add nothing
    with np.errstate(over="ignore", invalid="ignore"):
        coarse_img = downscale(img, f)
        state = _init_state(coarse_img, cfg, dtype)
        b = state.shape[0]
        for step in range(cfg.t0):
            mask = (
                np.ones((b, h // f, w // f), bool)
                if deterministic
                else fire_mask(rng_seed, 0, step, (b, h // f, w // f), cfg.fire_rate)
            )
            tape.coarse_states.append(state)
            tape.coarse_masks.append(mask)
            state = nca_step(model.theta, state, mask, cfg)

        tape.junction_state = state
        state = upscale_and_concat(state, img, f, cfg.c_in)

        for step in range(cfg.t1):
            mask = (
                np.ones((b, h, w), bool)
                if deterministic
                else fire_mask(rng_seed, 1, step, (b, h, w), cfg.fire_rate)
            )
            tape.fine_states.append(state)
            tape.fine_masks.append(mask)
            state = nca_step(model.omega, state, mask, cfg)

    tape.final_state = state
    logits = state[:, cfg.c_in : cfg.c_in + cfg.c_out]
    if not np.all(np.isfinite(state)):
        raise DataError("non-finite values in rollout; lower eta or step counts")
    return (logits[0], tape) if squeeze else (logits, tape)


def cross_entropy_loss(logits: np.ndarray, target_mask: np.ndarray):
    """Mean per-pixel cross entropy and its gradient.

    logits: (c_out, H, W) or (B, c_out, H, W); target_mask holds class
    indices. Returns (loss, dlogits) with dlogits = (softmax - onehot) / P
    where P is the total pixel count (batch included).
    """
    lg, squeeze = _batched(logits)
    tg = target_mask[None] if target_mask.ndim == 2 else target_mask
    if tg.shape != (lg.shape[0],) + lg.shape[2:]:
        raise DataError(f"target shape {target_mask.shape} does not match logits")
    c = lg.shape[1]
    if tg.min() < 0 or tg.max() >= c:
        raise DataError(f"class index out of range [0, {c})")

    shifted = lg - lg.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    soft = exp / exp.sum(axis=1, keepdims=True)
    logp = shifted - np.log(exp.sum(axis=1, keepdims=True))

    b, _, h, w = lg.shape
    n_pix = b * h * w
    onehot_logp = np.take_along_axis(logp, tg[:, None], axis=1)[:, 0]
    loss = -onehot_logp.sum() / n_pix

    dlogits = soft.copy()
    np.put_along_axis(
        dlogits, tg[:, None], np.take_along_axis(dlogits, tg[:, None], axis=1) - 1.0, axis=1
    )
    dlogits /= n_pix
    return float(loss), (dlogits[0] if squeeze else dlogits)


def _zero_grads(weights: NcaWeights):
    return (
        np.zeros(weights.w1.shape, weights.w1.dtype),
        np.zeros(weights.b1.shape, weights.b1.dtype),
        np.zeros(weights.w2.shape, weights.w2.dtype),
        np.zeros(weights.b2.shape, weights.b2.dtype),
    )


def backward_bptt(
    model: TwoStageModel, tape: Tape, dlogits: np.ndarray
) -> Tuple[NcaWeights, NcaWeights]:
    """Exact reverse-mode gradients of the loss w.r.t. theta and omega
    through all recorded steps.

    Per-step weight contributions are summed (the unrolled-loss gradient);
    set config.step_grad_mean to divide each stage by its step count.
    """
    cfg = model.config
    if tape.config != cfg:
        raise ConfigError("tape was recorded with a different model config")
    dl, _ = _batched(dlogits)
    final = tape.final_state
    if dl.shape != (final.shape[0], cfg.c_out) + final.shape[2:]:
        raise ConfigError(f"dlogits shape {dlogits.shape} does not match tape")

    grad_state = np.zeros_like(final)
    grad_state[:, cfg.c_in : cfg.c_in + cfg.c_out] = dl

    gw1o, gb1o, gw2o, gb2o = _zero_grads(model.omega)
    for s_in, mask in zip(reversed(tape.fine_states), reversed(tape.fine_masks)):
        grad_state, dw1, db1, dw2, db2 = nca_step_backward(
            model.omega, s_in, mask, grad_state, cfg
        )
        gw1o += dw1; gb1o += db1; gw2o += dw2; gb2o += db2

    # junction: fine image replaced the input channels (no gradient flows
    # into the coarse input rows); hidden rows upscale by replication, so
    # their adjoint is the block sum.
    f = cfg.downscale_factor
    coarse_grad = np.zeros_like(tape.junction_state)
    coarse_grad[:, cfg.c_in:] = _nn_upscale_adjoint(grad_state[:, cfg.c_in:], f)
    grad_state = coarse_grad

    gw1t, gb1t, gw2t, gb2t = _zero_grads(model.theta)
    for s_in, mask in zip(reversed(tape.coarse_states), reversed(tape.coarse_masks)):
        grad_state, dw1, db1, dw2, db2 = nca_step_backward(
            model.theta, s_in, mask, grad_state, cfg
        )
        gw1t += dw1; gb1t += db1; gw2t += dw2; gb2t += db2

    if cfg.step_grad_mean:
        if cfg.t0:
            for g in (gw1t, gb1t, gw2t, gb2t):
                g /= cfg.t0
        if cfg.t1:
            for g in (gw1o, gb1o, gw2o, gb2o):
                g /= cfg.t1

    grad_theta = NcaWeights(gw1t, gb1t, gw2t, gb2t)
    grad_omega = NcaWeights(gw1o, gb1o, gw2o, gb2o)
    return grad_theta, grad_omega


def sgd_step(weights: NcaWeights, grads: NcaWeights, eta: float) -> NcaWeights:
    """Plain gradient descent: w - eta * g, elementwise."""
    return NcaWeights(
        weights.w1 - eta * grads.w1,
        weights.b1 - eta * grads.b1,
        weights.w2 - eta * grads.w2,
        weights.b2 - eta * grads.b2,
    )


def predict(model: TwoStageModel, image: np.ndarray, rng_seed: int = 0) -> np.ndarray:
    """Deterministic argmax segmentation of one image or a batch."""
    logits, _ = forward(model, image, rng_seed=rng_seed, deterministic=True)
    axis = 0 if image.ndim == 2 else 1
    return np.argmax(logits, axis=axis)
