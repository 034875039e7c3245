"""Seeded synthetic segmentation tasks: bright elliptic blobs on a darker
background, with an optional per-group intensity shift as the non-IID knob."""

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..errors import ConfigError, DataError


@dataclass(frozen=True)
class DatasetSpec:
    """Geometry and intensity model of the generated samples.

    Samples are assigned round-robin to ``n_groups`` intensity groups;
    group g is shifted by (g - (n_groups-1)/2) * group_shift. The non-IID
    partition strategy routes each group to one client.
    """

    height: int = 64
    width: int = 64
    n_samples: int = 40
    bg_level: float = 0.25
    fg_level: float = 0.75
    noise_std: float = 0.05
    area_min: float = 0.04
    area_max: float = 0.35
    n_groups: int = 1
    group_shift: float = 0.0

    def __post_init__(self):
        if self.height < 8 or self.width < 8:
            raise ConfigError("images must be at least 8x8")
        if self.n_samples < 1:
            raise ConfigError("n_samples must be >= 1")
        if not 0.0 < self.area_min < self.area_max < 1.0:
            raise ConfigError("need 0 < area_min < area_max < 1")
        if self.n_groups < 1:
            raise ConfigError("n_groups must be >= 1")
        if self.fg_level <= self.bg_level:
            raise ConfigError("fg_level must exceed bg_level")
        half_span = (self.n_groups - 1) / 2 * self.group_shift
        if self.bg_level - half_span < 0.0 or self.fg_level + half_span > 1.0:
            raise ConfigError("group shifts push intensities outside [0, 1]")
        if self.noise_std < 0:
            raise ConfigError("noise_std must be >= 0")


@dataclass
class SegSample:
    """Image in [0, 1] with an integer class mask (0 background, 1 blob)."""

    image: np.ndarray  # (H, W) float32
    mask: np.ndarray  # (H, W) uint8


def group_of(index: int, spec: DatasetSpec) -> int:
    return index % spec.n_groups


def _sample_ellipse(rng, spec):
    h, w = spec.height, spec.width
    for _ in range(200):
        cy = rng.uniform(0.3, 0.7) * h
        cx = rng.uniform(0.3, 0.7) * w
        ry = rng.uniform(0.10, 0.45) * h
        rx = rng.uniform(0.10, 0.45) * w
        yy, xx = np.mgrid[0:h, 0:w]
        mask = (((yy + 0.5 - cy) / ry) ** 2 + ((xx + 0.5 - cx) / rx) ** 2) <= 1.0
        frac = mask.mean()
        if spec.area_min <= frac <= spec.area_max:
            return mask
    raise DataError("could not sample an ellipse within the configured area range")


def generate_dataset(spec: DatasetSpec, seed: int) -> List[SegSample]:
    """Pure function of (spec, seed); every sample gets its own child seed."""
    samples = []
    for i in range(spec.n_samples):
        rng = np.random.default_rng([seed, i])
        shift = (group_of(i, spec) - (spec.n_groups - 1) / 2) * spec.group_shift
        mask = _sample_ellipse(rng, spec)
        image = np.where(mask, spec.fg_level, spec.bg_level) + shift
        if spec.noise_std:
            image = image + rng.normal(0.0, spec.noise_std, image.shape)
        image = np.clip(image, 0.0, 1.0)
        samples.append(SegSample(image.astype(np.float32), mask.astype(np.uint8)))
    return samples


def partition(
    dataset: List[SegSample],
    n_clients: int,
    strategy: str,
    seed: int,
    test_fraction: float = 0.25,
    n_groups: int = None,
) -> Tuple[List[List[SegSample]], List[SegSample]]:
    """Split into n disjoint client shards plus a held-out test set.

    "uniform" shuffles and deals round-robin (shard sizes differ by <= 1);
    "noniid" keeps each round-robin intensity group on one client, so shard
    statistics follow the group shifts. The test set is stratified and is
    never assigned to a client.
    """
    if n_clients < 1:
        raise ConfigError("need at least one client")
    if not 0.0 <= test_fraction < 1.0:
        raise ConfigError("test_fraction must lie in [0, 1)")
    n = len(dataset)
    rng = np.random.default_rng([seed, 0xD1CE])

    if strategy == "uniform":
        order = rng.permutation(n)
        n_test = round(test_fraction * n)
        test_idx = order[:n_test]
        rest = order[n_test:]
        shards_idx = [rest[c::n_clients] for c in range(n_clients)]
    elif strategy == "noniid":
        groups = n_groups or n_clients
        per_group = [[i for i in range(n) if i % groups == g] for g in range(groups)]
        test_idx, shards_idx = [], [[] for _ in range(n_clients)]
        for g, members in enumerate(per_group):
            members = list(rng.permutation(members))
            n_test = round(test_fraction * len(members))
            test_idx.extend(members[:n_test])
            shards_idx[g % n_clients].extend(members[n_test:])
    else:
        raise ConfigError(f"unknown partition strategy {strategy!r}")

    shards = [[dataset[int(i)] for i in sorted(idx)] for idx in shards_idx]
    test = [dataset[int(i)] for i in sorted(test_idx)]
    assigned = sum(len(s) for s in shards) + len(test)
    assert assigned == n, "partition must cover the dataset exactly"
    return shards, test
