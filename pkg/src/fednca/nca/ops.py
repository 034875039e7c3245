"""Grid-level operations: perception, one cell update, rescaling.

All functions accept a single grid (C, H, W) or a batch (B, C, H, W) and
return the same rank. Arithmetic follows the input dtype.
"""

import numpy as np

from ..errors import ConfigError, DataError
from .config import ModelConfig
from .model import NcaWeights

_SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
_SOBEL_Y = _SOBEL_X.T.copy()


def _batched(state):
    if state.ndim == 3:
        return state[None], True
    if state.ndim == 4:
        return state, False
    raise DataError(f"state must have 3 or 4 dims, got {state.ndim}")


def _conv3x3_replicate(state, kernel):
    """Correlate every channel with a 3x3 kernel under replicate padding."""
    _, _, h, w = state.shape
    pad = np.pad(state, ((0, 0), (0, 0), (1, 1), (1, 1)), mode="edge")
    out = np.zeros_like(state)
    for di in range(3):
        for dj in range(3):
            k = kernel[di, dj]
            if k != 0.0:
                out += k * pad[:, :, di:di + h, dj:dj + w]
    return out


def perceive(state: np.ndarray) -> np.ndarray:
    """Fixed perception stage: identity + Sobel-x + Sobel-y per channel.

    Output channel 3c is channel c verbatim, 3c+1 its horizontal-gradient
    (Sobel-x) response, 3c+2 its vertical-gradient (Sobel-y) response.
    """
    s, squeeze = _batched(state)
    b, c, h, w = s.shape
    sx = _SOBEL_X.astype(s.dtype)
    sy = _SOBEL_Y.astype(s.dtype)
    out = np.empty((b, 3 * c, h, w), s.dtype)
    out[:, 0::3] = s
    out[:, 1::3] = _conv3x3_replicate(s, sx)
    out[:, 2::3] = _conv3x3_replicate(s, sy)
    return out[0] if squeeze else out


def _conv3x3_replicate_adjoint(grad, kernel):
    """Exact adjoint of _conv3x3_replicate (scatter + fold the pad rows)."""
    b, c, h, w = grad.shape
    gpad = np.zeros((b, c, h + 2, w + 2), grad.dtype)
    for di in range(3):
        for dj in range(3):
            k = kernel[di, dj]
            if k != 0.0:
                gpad[:, :, di:di + h, dj:dj + w] += k * grad
    # replicate padding: border gradients fold onto the edge pixels
    gpad[:, :, 1, :] += gpad[:, :, 0, :]
    gpad[:, :, -2, :] += gpad[:, :, -1, :]
    gpad[:, :, :, 1] += gpad[:, :, :, 0]
    gpad[:, :, :, -2] += gpad[:, :, :, -1]
    return gpad[:, :, 1:-1, 1:-1]


def perceive_adjoint(grad_p: np.ndarray) -> np.ndarray:
    """Backpropagate a gradient w.r.t. perceive() output to the state."""
    g, squeeze = _batched(grad_p)
    sx = _SOBEL_X.astype(g.dtype)
    sy = _SOBEL_Y.astype(g.dtype)
    out = g[:, 0::3].copy()
    out += _conv3x3_replicate_adjoint(np.ascontiguousarray(g[:, 1::3]), sx)
    out += _conv3x3_replicate_adjoint(np.ascontiguousarray(g[:, 2::3]), sy)
    return out[0] if squeeze else out


def _mlp_delta(weights: NcaWeights, p: np.ndarray):
    """Per-pixel two-layer MLP over perception features.

    Returns (delta, hidden) with delta shaped like the state and hidden kept
    for the backward pass.
    """
    b, pc, h, w = p.shape
    pm = p.reshape(b, pc, h * w)
    hid = weights.w1 @ pm + weights.b1[:, None]
    np.maximum(hid, 0.0, out=hid)
    delta = weights.w2 @ hid + weights.b2[:, None]
    c = weights.w2.shape[0]
    return delta.reshape(b, c, h, w), hid


def nca_step(
    weights: NcaWeights,
    state: np.ndarray,
    fire_mask: np.ndarray,
    config: ModelConfig,
) -> np.ndarray:
    """One cell update: state + fire_mask * MLP(perceive(state)).

    The first ``c_in`` channels are re-clamped to their previous values, so
    the conditioning image survives every step unchanged.
    """
    s, squeeze = _batched(state)
    if s.shape[1] != config.channels:
        raise ConfigError(
            f"state has {s.shape[1]} channels, config expects {config.channels}"
        )
    weights.check_shapes(config)
    mask = fire_mask if fire_mask.ndim == s.ndim - 1 else fire_mask[None]
    if mask.shape[-2:] != s.shape[-2:]:
        raise ConfigError(f"fire mask shape {fire_mask.shape} does not match state")
    p = perceive(s)
    delta, _ = _mlp_delta(weights, p)
    out = s + mask[:, None].astype(s.dtype) * delta
    out[:, : config.c_in] = s[:, : config.c_in]
    return out[0] if squeeze else out


def nca_step_backward(
    weights: NcaWeights,
    state_in: np.ndarray,
    fire_mask: np.ndarray,
    grad_out: np.ndarray,
    config: ModelConfig,
):
    """Reverse-mode of nca_step given the recorded input state and mask.

    Returns (grad_state_in, dw1, db1, dw2, db2). The clamp assignment means
    the first c_in rows of the update receive no gradient.
    """
    s, _ = _batched(state_in)
    g, _ = _batched(grad_out)
    mask = fire_mask if fire_mask.ndim == s.ndim - 1 else fire_mask[None]
    b, c, h, w = s.shape
    n = h * w

    # recompute forward internals
    p = perceive(s)
    pm = p.reshape(b, 3 * c, n)
    hpre = weights.w1 @ pm + weights.b1[:, None]
    hid = np.maximum(hpre, 0.0)

    ddelta = g * mask[:, None].astype(g.dtype)
    ddelta[:, : config.c_in] = 0.0
    dd = ddelta.reshape(b, c, n)

    # flatten the batch/pixel axes so every contraction is one BLAS matmul
    dd_2d = np.ascontiguousarray(dd.transpose(1, 0, 2)).reshape(c, b * n)
    hid_2d = np.ascontiguousarray(hid.transpose(1, 0, 2)).reshape(-1, b * n)
    dw2 = dd_2d @ hid_2d.T
    db2 = dd_2d.sum(axis=1)
    dh = weights.w2.T @ dd
    dh *= hpre > 0.0
    dh_2d = np.ascontiguousarray(dh.transpose(1, 0, 2)).reshape(-1, b * n)
    pm_2d = np.ascontiguousarray(pm.transpose(1, 0, 2)).reshape(3 * c, b * n)
    dw1 = dh_2d @ pm_2d.T
    db1 = dh_2d.sum(axis=1)
    dp = (weights.w1.T @ dh).reshape(b, 3 * c, h, w)

    grad_state = g.copy()  # residual path plus the clamp copy for c_in rows
    grad_state += perceive_adjoint(dp)
    if grad_out.ndim == 3:
        grad_state = grad_state[0]
    return grad_state, dw1, db1, dw2, db2


def downscale(image: np.ndarray, factor: int) -> np.ndarray:
    """Average pooling over factor x factor blocks."""
    if factor < 1:
        raise ConfigError("downscale factor must be >= 1")
    if factor == 1:
        return image.copy()
    h, w = image.shape[-2], image.shape[-1]
    if h % factor or w % factor:
        raise DataError(f"dims {h}x{w} not divisible by factor {factor}")
    lead = image.shape[:-2]
    blocks = image.reshape(*lead, h // factor, factor, w // factor, factor)
    return blocks.mean(axis=(-3, -1))


def _nn_upscale(x: np.ndarray, factor: int) -> np.ndarray:
    return np.repeat(np.repeat(x, factor, axis=-2), factor, axis=-1)


def _nn_upscale_adjoint(grad: np.ndarray, factor: int) -> np.ndarray:
    """Sum the gradients of replicated pixels back onto the source pixel."""
    h, w = grad.shape[-2], grad.shape[-1]
    lead = grad.shape[:-2]
    blocks = grad.reshape(*lead, h // factor, factor, w // factor, factor)
    return blocks.sum(axis=(-3, -1))


def upscale_and_concat(
    coarse_state: np.ndarray,
    fine_image: np.ndarray,
    factor: int,
    c_in: int = 1,
) -> np.ndarray:
    """Nearest-neighbor upscale of the non-input channels; input channels
    are replaced by the fine image."""
    s, squeeze = _batched(coarse_state)
    img = fine_image
    if img.ndim == 2:
        img = img[None]
    if img.ndim == 3 and squeeze:
        img = img[None]
    elif img.ndim == 3 and not squeeze:
        img = img[:, None]
    ch, cw = s.shape[-2], s.shape[-1]
    fh, fw = img.shape[-2], img.shape[-1]
    if (ch * factor, cw * factor) != (fh, fw):
        raise DataError(
            f"coarse dims {ch}x{cw} times factor {factor} != fine dims {fh}x{fw}"
        )
    out = np.empty((s.shape[0], s.shape[1], fh, fw), s.dtype)
    out[:, :c_in] = img.astype(s.dtype)
    out[:, c_in:] = _nn_upscale(s[:, c_in:], factor)
    return out[0] if squeeze else out
