"""Segmentation overlap metrics."""

import numpy as np

from ..errors import DataError


def dice(pred_mask: np.ndarray, true_mask: np.ndarray, class_id: int) -> float:
    """2|P∩T| / (|P| + |T|) for one class; 1.0 when both sets are empty."""
    if pred_mask.shape != true_mask.shape:
        raise DataError(
            f"mask shapes differ: {pred_mask.shape} vs {true_mask.shape}"
        )
    p = pred_mask == class_id
    t = true_mask == class_id
    denom = int(p.sum()) + int(t.sum())
    if denom == 0:
        return 1.0
    return 2.0 * int((p & t).sum()) / denom


def mean_foreground_dice(pred_mask: np.ndarray, true_mask: np.ndarray, n_classes: int) -> float:
    """Mean Dice over classes 1..n_classes-1 (background excluded)."""
    if n_classes < 2:
        raise DataError("need at least one foreground class")
    scores = [dice(pred_mask, true_mask, c) for c in range(1, n_classes)]
    return float(np.mean(scores))
