"""Grid operation tests against hand-computed and brute-force oracles."""

import numpy as np
import pytest

from fednca.errors import ConfigError, DataError
from fednca.nca import ModelConfig, NcaWeights, downscale, nca_step, perceive, upscale_and_concat
from fednca.nca.ops import perceive_adjoint

SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
SOBEL_Y = SOBEL_X.T


def conv3x3_oracle(img, kernel):
    """Direct per-pixel correlation with replicate padding."""
    h, w = img.shape
    out = np.zeros_like(img)
    for i in range(h):
        for j in range(w):
            acc = 0.0
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    ii = min(max(i + di, 0), h - 1)
                    jj = min(max(j + dj, 0), w - 1)
                    acc += kernel[di + 1, dj + 1] * img[ii, jj]
            out[i, j] = acc
    return out


def test_perceive_constant_grid():
    state = np.full((2, 4, 4), 5.0)
    p = perceive(state)
    assert p.shape == (6, 4, 4)
    np.testing.assert_array_equal(p[0::3], state)
    np.testing.assert_array_equal(p[1::3], 0.0)
    np.testing.assert_array_equal(p[2::3], 0.0)


def test_perceive_vertical_step_edge():
    # single channel 3x3, columns [0, 0, 1]: horizontal response is
    # 4*(v[j+1]-v[j-1]) per column under replicate padding, vertical is 0
    state = np.zeros((1, 3, 3))
    state[0, :, 2] = 1.0
    p = perceive(state)
    expected_x = np.tile([0.0, 4.0, 4.0], (3, 1))
    np.testing.assert_allclose(p[1], expected_x)
    np.testing.assert_array_equal(p[2], 0.0)
    assert np.all(p[1][:, 1:] != 0.0)


def test_perceive_matches_dense_oracle():
    rng = np.random.default_rng(3)
    state = rng.standard_normal((3, 5, 6))
    p = perceive(state)
    for c in range(3):
        np.testing.assert_allclose(p[3 * c], state[c])
        np.testing.assert_allclose(p[3 * c + 1], conv3x3_oracle(state[c], SOBEL_X), atol=1e-12)
        np.testing.assert_allclose(p[3 * c + 2], conv3x3_oracle(state[c], SOBEL_Y), atol=1e-12)


@pytest.mark.parametrize("a", [-2.0, 0.5, 3.0])
def test_perceive_linearity(a):
    rng = np.random.default_rng(0)
    state = rng.standard_normal((2, 4, 4))
    np.testing.assert_allclose(perceive(a * state), a * perceive(state), atol=1e-12)


def test_perceive_adjoint_is_exact_transpose():
    # <perceive(x), y> == <x, adjoint(y)> for random x, y
    rng = np.random.default_rng(7)
    x = rng.standard_normal((2, 4, 5))
    y = rng.standard_normal((6, 4, 5))
    lhs = float(np.sum(perceive(x) * y))
    rhs = float(np.sum(x * perceive_adjoint(y)))
    assert abs(lhs - rhs) < 1e-10


def small_config(**kw):
    base = dict(channels=4, c_in=1, c_out=2, hidden_units=8, t0=2, t1=2,
                fire_rate=0.5, downscale_factor=2, eta=1e-2)
    base.update(kw)
    return ModelConfig(**base)


def random_weights(cfg, rng, dtype=np.float64, scale=0.3):
    return NcaWeights(
        (scale * rng.standard_normal((cfg.hidden_units, cfg.perception_channels))).astype(dtype),
        (scale * rng.standard_normal(cfg.hidden_units)).astype(dtype),
        (scale * rng.standard_normal((cfg.channels, cfg.hidden_units))).astype(dtype),
        (scale * rng.standard_normal(cfg.channels)).astype(dtype),
    )


def nca_step_oracle(weights, state, mask, c_in):
    """Single cell update computed with explicit per-pixel loops."""
    c, h, w = state.shape
    p = np.empty((3 * c, h, w))
    for ch in range(c):
        p[3 * ch] = state[ch]
        p[3 * ch + 1] = conv3x3_oracle(state[ch], SOBEL_X)
        p[3 * ch + 2] = conv3x3_oracle(state[ch], SOBEL_Y)
    out = state.copy()
    for i in range(h):
        for j in range(w):
            hid = np.maximum(weights.w1 @ p[:, i, j] + weights.b1, 0.0)
            delta = weights.w2 @ hid + weights.b2
            if mask[i, j]:
                out[:, i, j] = state[:, i, j] + delta
    out[:c_in] = state[:c_in]
    return out


def test_nca_step_zero_weights_is_identity():
    cfg = small_config()
    w = NcaWeights(
        np.zeros((cfg.hidden_units, cfg.perception_channels)),
        np.zeros(cfg.hidden_units),
        np.zeros((cfg.channels, cfg.hidden_units)),
        np.zeros(cfg.channels),
    )
    rng = np.random.default_rng(0)
    state = rng.standard_normal((cfg.channels, 4, 4))
    out = nca_step(w, state, np.ones((4, 4), bool), cfg)
    np.testing.assert_array_equal(out, state)


def test_nca_step_masked_out_is_identity():
    cfg = small_config()
    rng = np.random.default_rng(1)
    w = random_weights(cfg, rng)
    state = rng.standard_normal((cfg.channels, 4, 4))
    out = nca_step(w, state, np.zeros((4, 4), bool), cfg)
    np.testing.assert_array_equal(out, state)


def test_nca_step_matches_per_pixel_oracle():
    cfg = small_config()
    rng = np.random.default_rng(2)
    w = random_weights(cfg, rng)
    state = rng.standard_normal((cfg.channels, 4, 4))
    mask = rng.random((4, 4)) < 0.7
    got = nca_step(w, state, mask, cfg)
    want = nca_step_oracle(w, state, mask, cfg.c_in)
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_nca_step_shape_mismatch():
    cfg = small_config()
    rng = np.random.default_rng(3)
    w = random_weights(cfg, rng)
    with pytest.raises(ConfigError):
        nca_step(w, rng.standard_normal((cfg.channels + 1, 4, 4)), np.ones((4, 4), bool), cfg)


def test_downscale_constant():
    img = np.full((8, 8), 3.25)
    out = downscale(img, 4)
    assert out.shape == (2, 2)
    np.testing.assert_array_equal(out, 3.25)


def test_downscale_hand_means():
    img = np.arange(16, dtype=float).reshape(4, 4)
    out = downscale(img, 2)
    np.testing.assert_array_equal(out, [[2.5, 4.5], [10.5, 12.5]])


def test_downscale_factor_one_identity():
    img = np.arange(9, dtype=float).reshape(3, 3)
    np.testing.assert_array_equal(downscale(img, 1), img)


def test_downscale_rejects_non_divisible():
    with pytest.raises(DataError):
        downscale(np.zeros((5, 4)), 2)


def test_upscale_factor_one_swaps_input_channels():
    rng = np.random.default_rng(4)
    coarse = rng.standard_normal((4, 3, 3))
    fine = rng.standard_normal((3, 3))
    out = upscale_and_concat(coarse, fine, 1, c_in=1)
    np.testing.assert_array_equal(out[0], fine)
    np.testing.assert_array_equal(out[1:], coarse[1:])


def test_upscale_replicates_blocks():
    coarse = np.zeros((2, 2, 2))
    coarse[1] = [[1.0, 2.0], [3.0, 4.0]]
    fine = np.zeros((4, 4))
    out = upscale_and_concat(coarse, fine, 2, c_in=1)
    expected = np.repeat(np.repeat(coarse[1], 2, 0), 2, 1)
    np.testing.assert_array_equal(out[1], expected)


def test_upscale_input_channels_equal_fine_image_exactly():
    rng = np.random.default_rng(5)
    coarse = rng.standard_normal((3, 2, 2))
    fine = rng.standard_normal((4, 4))
    out = upscale_and_concat(coarse, fine, 2, c_in=1)
    assert out[0].tobytes() == fine.tobytes()


def test_upscale_dimension_mismatch():
    with pytest.raises(DataError):
        upscale_and_concat(np.zeros((3, 2, 2)), np.zeros((5, 4)), 2)
