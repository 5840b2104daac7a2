"""Penalized piecewise-linear segmentation of glint-spacing estimate sequences.

Exact optimal partitioning with PELT pruning. The per-segment cost is the
residual sum of squares of a least-squares line, so a change point marks an
abrupt change in slope and intercept.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.linalg import lstsq
from scipy.stats import median_abs_deviation

from src.utils.errors import ParameterError

logger = logging.getLogger(__name__)

MIN_TRACE = 5
MIN_VARIANCE = 0.25


def segment_cost(y: np.ndarray, start: int, stop: int) -> float:
    """RSS of the least-squares line through y[start:stop]."""
    seg = np.asarray(y[start:stop], dtype=float)
    n = len(seg)
    if n <= 2:
        return 0.0
    x = np.arange(n, dtype=float)
    design = np.column_stack([np.ones(n), x])
    coef, _, _, _ = lstsq(design, seg)
    residual = seg - design @ coef
    return float(residual @ residual)


def default_penalty(y: np.ndarray) -> float:
    """BIC-style penalty sigma^2 * log(n), sigma from the MAD of first differences."""
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n < 2:
        return 0.0
    sigma = median_abs_deviation(np.diff(y), scale="normal") / np.sqrt(2)
    return max(sigma**2, MIN_VARIANCE) * np.log(n)


@dataclass
class Segmentation:
    breakpoints: List[int]
    cost: float
    penalty: float

    @property
    def objective(self) -> float:
        return self.cost + self.penalty * len(self.breakpoints)


def optimal_segmentation(y, penalty: Optional[float] = None, min_size: int = 2) -> Segmentation:
    """Breakpoints minimizing sum of segment costs + penalty per breakpoint.

    A candidate s pruned at time t (F[s] + C(s, t) > F[t]) is dropped only
    once t itself becomes admissible, i.e. from t + min_size on.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    if min_size < 1:
        raise ParameterError("min_size must be >= 1")
    if penalty is None:
        penalty = default_penalty(y)
    if n < 2 * min_size:
        return Segmentation(breakpoints=[], cost=segment_cost(y, 0, n), penalty=penalty)

    best = np.full(n + 1, np.inf)
    best[0] = -penalty
    last = np.zeros(n + 1, dtype=int)
    candidates = [0]
    dropped_at = {}

    for t in range(min_size, n + 1):
        if t - min_size >= min_size:
            candidates.append(t - min_size)
        active = [s for s in candidates if s not in dropped_at or t < dropped_at[s]]
        costs = {s: best[s] + segment_cost(y, s, t) + penalty for s in active}
        s_best = min(costs, key=lambda s: (costs[s], s))
        best[t] = costs[s_best]
        last[t] = s_best
        for s in active:
            if s not in dropped_at and costs[s] - penalty > best[t]:
                dropped_at[s] = t + min_size
        candidates = [s for s in candidates if s not in dropped_at or dropped_at[s] > t]

    breakpoints = []
    t = n
    while t > 0:
        t = int(last[t])
        if t > 0:
            breakpoints.append(t)
    breakpoints.reverse()
    bounds = [0] + breakpoints + [n]
    cost = sum(segment_cost(y, a, b) for a, b in zip(bounds[:-1], bounds[1:]))
    return Segmentation(breakpoints=breakpoints, cost=cost, penalty=penalty)


@dataclass
class ChangePoints:
    raw: List[int]
    verified: List[int] = field(default_factory=list)
    penalty: float = 0.0


def _mode(values: np.ndarray) -> int:
    classes, counts = np.unique(values, return_counts=True)
    return int(classes[np.argmax(counts)])


def detect_change_points(trace, penalty: Optional[float] = None, min_separation: int = 2,
                         min_run: int = 5, min_size: int = 2) -> ChangePoints:
    """Change points of a class-estimate trace that survive verification.

    A raw breakpoint is kept when it lies more than `min_separation` windows
    after the last kept one, starts a run of at least `min_run` windows before
    the next raw breakpoint, and the dominant class after it differs from the
    dominant class before it.
    """
    y = np.asarray(trace, dtype=float)
    if len(y) < MIN_TRACE:
        raise ParameterError(f"Trace needs at least {MIN_TRACE} windows, got {len(y)}")
    seg = optimal_segmentation(y, penalty, min_size)
    raw = seg.breakpoints
    n = len(y)

    verified: List[int] = []
    for i, cp in enumerate(raw):
        if verified and cp - verified[-1] <= min_separation:
            continue
        stop = raw[i + 1] if i + 1 < len(raw) else n
        if stop - cp < min_run:
            continue
        before = verified[-1] if verified else 0
        if _mode(y[before:cp]) == _mode(y[cp:stop]):
            continue
        verified.append(cp)
    if len(raw) != len(verified):
        logger.debug(f"Kept {len(verified)} of {len(raw)} raw change points {raw}")
    return ChangePoints(raw=list(raw), verified=verified, penalty=seg.penalty)
