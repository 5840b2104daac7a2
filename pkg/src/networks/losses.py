"""Classification losses. Both take scores (B, K) and targets (B, K) and average over B."""
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from src.utils.errors import DataError

EPS = 1e-12


class LossKind(str, Enum):
    EQ3 = "eq3"
    EQ4 = "eq4"


def _check(scores: np.ndarray, targets: np.ndarray):
    if scores.shape != targets.shape or scores.ndim != 2:
        raise DataError(f"Scores {scores.shape} and targets {targets.shape} must be matching (B, K)")


def loss_eq3(scores, targets, weights=None) -> float:
    """Class-weighted cross-entropy -(1/N) sum_n sum_i w_i t_ni ln y_ni on softmax scores."""
    value, _ = weighted_cross_entropy(scores, targets, weights)
    return value


def loss_eq4(scores, targets) -> float:
    """Binary cross-entropy -(1/N) sum_n sum_i [t ln y + (1-t) ln(1-y)] on per-class scores."""
    value, _ = binary_cross_entropy(scores, targets)
    return value


def weighted_cross_entropy(scores, targets, weights: Optional[np.ndarray] = None) -> Tuple[float, np.ndarray]:
    """Loss value and its gradient with respect to the scores."""
    y = np.asarray(scores, dtype=float)
    t = np.asarray(targets, dtype=float)
    _check(y, t)
    n, k = y.shape
    w = np.ones(k) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (k,):
        raise DataError(f"Expected {k} class weights, got {w.shape}")
    clipped = np.clip(y, EPS, 1.0)
    value = -float((w * t * np.log(clipped)).sum()) / n
    grad = -(w * t) / (n * clipped)
    return value, grad


def binary_cross_entropy(scores, targets) -> Tuple[float, np.ndarray]:
    y = np.asarray(scores, dtype=float)
    t = np.asarray(targets, dtype=float)
    _check(y, t)
    n = y.shape[0]
    clipped = np.clip(y, EPS, 1.0 - EPS)
    value = -float((t * np.log(clipped) + (1 - t) * np.log(1 - clipped)).sum()) / n
    grad = (-t / clipped + (1 - t) / (1 - clipped)) / n
    return value, grad


def loss_and_gradient(kind: LossKind, scores, targets, weights=None) -> Tuple[float, np.ndarray]:
    if LossKind(kind) == LossKind.EQ3:
        return weighted_cross_entropy(scores, targets, weights)
    return binary_cross_entropy(scores, targets)
