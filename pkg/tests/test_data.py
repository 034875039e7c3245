"""Synthetic data generation, partitioning, Dice, baseline cost simulation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fednca.data import (
    BaselineSpec,
    DatasetSpec,
    dice,
    generate_dataset,
    load_split,
    mean_foreground_dice,
    partition,
    save_split,
    simulate_baseline_costs,
    split_bytes,
)
from fednca.data.baselines import ALL_CODECS
from fednca.errors import ConfigError, DataError


def test_noise_free_mask_recoverable_by_threshold():
    spec = DatasetSpec(n_samples=5, noise_std=0.0)
    for s in generate_dataset(spec, seed=0):
        threshold = (spec.bg_level + spec.fg_level) / 2
        np.testing.assert_array_equal(s.image > threshold, s.mask.astype(bool))


def test_generation_reproducible_per_seed():
    spec = DatasetSpec(n_samples=6)
    a = generate_dataset(spec, seed=3)
    b = generate_dataset(spec, seed=3)
    for x, y in zip(a, b):
        assert x.image.tobytes() == y.image.tobytes()
        assert x.mask.tobytes() == y.mask.tobytes()
    c = generate_dataset(spec, seed=4)
    assert a[0].image.tobytes() != c[0].image.tobytes()


def test_foreground_area_within_configured_range():
    spec = DatasetSpec(n_samples=100, area_min=0.05, area_max=0.3)
    for s in generate_dataset(spec, seed=1):
        frac = s.mask.mean()
        assert spec.area_min <= frac <= spec.area_max


def test_partition_uniform_sizes_and_coverage():
    spec = DatasetSpec(n_samples=23)
    data = generate_dataset(spec, seed=2)
    shards, test = partition(data, 4, "uniform", seed=5, test_fraction=0.2)
    sizes = [len(s) for s in shards]
    assert max(sizes) - min(sizes) <= 1
    assert sum(sizes) + len(test) == len(data)
    seen = {id(s) for shard in shards for s in shard} | {id(s) for s in test}
    assert len(seen) == len(data)  # disjoint cover


def test_partition_noniid_shard_means_follow_group_shift():
    shift = 0.18
    spec = DatasetSpec(n_samples=60, n_groups=3, group_shift=shift, noise_std=0.01)
    data = generate_dataset(spec, seed=7)
    shards, _ = partition(data, 3, "noniid", seed=8, test_fraction=0.2, n_groups=3)
    means = [np.mean([s.image.mean() for s in shard]) for shard in shards]
    gaps = np.diff(sorted(means))
    # background dominates; shard means separate by roughly the group shift
    assert np.all(gaps > shift * 0.5)


def test_partition_rejects_unknown_strategy():
    data = generate_dataset(DatasetSpec(n_samples=4), seed=0)
    with pytest.raises(ConfigError):
        partition(data, 2, "zipf", seed=0)


def test_dice_identical_and_disjoint():
    a = np.zeros((4, 4), np.uint8)
    a[1:3, 1:3] = 1
    assert dice(a, a.copy(), 1) == 1.0
    b = np.zeros((4, 4), np.uint8)
    b[0, 0] = 1
    a2 = np.zeros((4, 4), np.uint8)
    a2[3, 3] = 1
    assert dice(a2, b, 1) == 0.0


def test_dice_hand_value():
    # |P|=4, |T|=6, |P ∩ T|=3 -> 0.6
    pred = np.zeros(12, np.uint8)
    true = np.zeros(12, np.uint8)
    pred[:4] = 1
    true[1:7] = 1
    assert dice(pred, true, 1) == pytest.approx(0.6)


def test_dice_both_empty_is_one():
    z = np.zeros((3, 3), np.uint8)
    assert dice(z, z, 1) == 1.0


def test_dice_shape_mismatch():
    with pytest.raises(DataError):
        dice(np.zeros((2, 2)), np.zeros((3, 3)), 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_dice_symmetric(seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 2, (6, 6)).astype(np.uint8)
    b = rng.integers(0, 2, (6, 6)).astype(np.uint8)
    assert dice(a, b, 1) == pytest.approx(dice(b, a, 1))


def test_mean_foreground_dice_multiclass():
    pred = np.array([[0, 1], [2, 2]], np.uint8)
    true = np.array([[0, 1], [2, 0]], np.uint8)
    expected = (dice(pred, true, 1) + dice(pred, true, 2)) / 2
    assert mean_foreground_dice(pred, true, 3) == pytest.approx(expected)


def test_baseline_dense_unet_size():
    spec = BaselineSpec("unet", 31_000_000)
    rows = simulate_baseline_costs(spec, ["dense"], 10.0, reference_bytes=1, seed=0)
    # 31e6 params x 4 bytes ≈ 118.26 MiB (plus a few framing bytes)
    assert rows["dense"]["mib"] == pytest.approx(31e6 * 4 / 2**20, rel=1e-6)


def test_baseline_topk_size_formula():
    spec = BaselineSpec("small", 10_000)
    rows = simulate_baseline_costs(spec, ["topk"], 10.0, reference_bytes=1, seed=0)
    assert rows["topk"]["bytes"] == 5 + 8 * 1000


def test_baseline_ratios_use_reference():
    spec = BaselineSpec("unet", 31_000_000)
    ref = 33_417  # dense payload bytes of the default compact model
    rows = simulate_baseline_costs(spec, list(ALL_CODECS), 10.0, ref, seed=0)
    assert rows["dense"]["ratio_vs_reference"] >= 400
    assert rows["topk"]["ratio_vs_reference"] >= 100
    assert rows["4bit"]["bytes"] < rows["dense"]["bytes"] / 7


def test_split_cache_round_trip_and_determinism(tmp_path):
    spec = DatasetSpec(n_samples=4)
    data = generate_dataset(spec, seed=11)
    blob1 = split_bytes(data)
    blob2 = split_bytes(generate_dataset(spec, seed=11))
    assert blob1 == blob2  # regeneration is byte-identical
    path = tmp_path / "train.fnds"
    save_split(data, path)
    loaded = load_split(path)
    assert len(loaded) == len(data)
    for a, b in zip(loaded, data):
        assert a.image.tobytes() == b.image.tobytes()
        assert a.mask.tobytes() == b.mask.tobytes()
