"""Synthetic segmentation data, partitioning, metrics, baseline payloads."""

from .synthetic import DatasetSpec, SegSample, generate_dataset, partition
from .metrics import dice, mean_foreground_dice
from .baselines import BaselineSpec, DEFAULT_BASELINES, simulate_baseline_costs
from .cache import load_split, save_split, split_bytes

__all__ = [
    "BaselineSpec",
    "DEFAULT_BASELINES",
    "DatasetSpec",
    "SegSample",
    "dice",
    "generate_dataset",
    "load_split",
    "mean_foreground_dice",
    "partition",
    "save_split",
    "simulate_baseline_costs",
    "split_bytes",
]
