"""Multi-class soft Dice loss."""
from __future__ import annotations

import numpy as np

from ..errors import ShapeError

DICE_EPS = 1e-6


def one_hot(target: np.ndarray, num_classes: int, dtype=np.float32) -> np.ndarray:
    """(N, H, W) ids -> (N, C, H, W) one-hot."""
    return (target[:, None] == np.arange(num_classes).reshape(1, -1, 1, 1)).astype(dtype)


def dice_loss(probs: np.ndarray, target: np.ndarray, eps: float = DICE_EPS):
    """``1 - mean_c (2*sum(p*g) + eps) / (sum(p) + sum(g) + eps)`` and its gradient.

    Sums run over the batch and all pixels; every class (background included)
    contributes equally, and a class absent from both ``probs`` and ``target``
    scores 1.
    """
    if probs.ndim != 4 or target.shape != (probs.shape[0],) + probs.shape[2:]:
        raise ShapeError(f"probs {probs.shape} and target {target.shape} disagree")
    c = probs.shape[1]
    if target.size and (target.min() < 0 or target.max() >= c):
        raise ShapeError(f"target ids must lie in [0, {c - 1}]")
    g = one_hot(target, c, probs.dtype)
    axes = (0, 2, 3)
    inter = (probs * g).sum(axis=axes, dtype=np.float64)
    denom = probs.sum(axis=axes, dtype=np.float64) + g.sum(axis=axes, dtype=np.float64) + eps
    num = 2.0 * inter + eps
    loss = 1.0 - float(np.mean(num / denom))
    # d(num/denom)/dp = (2 g denom - num) / denom^2
    coef_g = (2.0 / denom).reshape(1, c, 1, 1)
    coef_1 = (num / denom ** 2).reshape(1, c, 1, 1)
    dprobs = -(g * coef_g - coef_1) / c
    return loss, dprobs.astype(probs.dtype)
