from itertools import combinations

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from src.analysis.change_points import (
    MIN_VARIANCE,
    default_penalty,
    detect_change_points,
    optimal_segmentation,
    segment_cost,
)
from src.analysis.gs_grid import GsClassGrid
from src.analysis.reconstruction import (
    EstimateTrace,
    reconstruct,
    reconstruct_cochleagram,
    sliding_estimate,
    window_batch,
    write_trace_csv,
)
from src.cochlea.spectrogram import Cochleagram
from src.utils.errors import DataError, ParameterError


class ThresholdNet:
    """Stands in for the spacing network: one class below zero mean, another above."""

    def __init__(self, low: int, high: int, n_classes: int = 32):
        self.low = low
        self.high = high
        self.n_classes = n_classes
        self.batches = []

    def predict(self, batch):
        self.batches.append(batch.shape)
        out = np.zeros((len(batch), self.n_classes))
        means = batch.mean(axis=(1, 2))
        out[np.arange(len(batch)), np.where(means < 0, self.low, self.high)] = 1.0
        return out


def brute_force_objective(y, penalty, min_size=2):
    n = len(y)
    cache = {}

    def cost(a, b):
        if (a, b) not in cache:
            cache[(a, b)] = segment_cost(y, a, b)
        return cache[(a, b)]

    best = cost(0, n)
    positions = range(min_size, n - min_size + 1)
    for k in range(1, n // min_size):
        for breaks in combinations(positions, k):
            bounds = (0,) + breaks + (n,)
            if min(b - a for a, b in zip(bounds[:-1], bounds[1:])) < min_size:
                continue
            total = sum(cost(a, b) for a, b in zip(bounds[:-1], bounds[1:])) + penalty * k
            best = min(best, total)
    return best


def quadratic_objective(y, penalty, min_size=2):
    """Optimal penalized objective by the plain O(n^2) recursion, no pruning."""
    n = len(y)
    best = np.full(n + 1, np.inf)
    best[0] = -penalty
    for t in range(min_size, n + 1):
        starts = [0] + list(range(min_size, t - min_size + 1))
        best[t] = min(best[s] + segment_cost(y, s, t) + penalty for s in starts)
    return best[n]


def piecewise_constant(rng, n=20, max_breaks=2):
    n_breaks = int(rng.integers(0, max_breaks + 1))
    breaks = np.sort(rng.choice(np.arange(1, n), size=n_breaks, replace=False))
    lengths = np.diff(np.concatenate([[0], breaks, [n]]))
    return np.repeat(rng.integers(0, 32, size=n_breaks + 1), lengths).astype(float)



class TestGsClassGrid:
    def test_grid(self):
        grid = GsClassGrid()
        assert len(grid.spacings) == 32
        assert grid.spacings[0] == 0.0
        assert grid.spacings[-1] == pytest.approx(0.07)
        assert grid.step == pytest.approx(0.07 / 31)

    def test_class_round_trip(self):
        grid = GsClassGrid()
        for cls in range(32):
            assert grid.class_of(grid.spacing(cls)) == cls

    def test_nearest_class(self):
        grid = GsClassGrid()
        assert grid.class_of(0.0111) == 5
        assert grid.class_of(0.0368) == 16

    def test_ripple_interval(self):
        grid = GsClassGrid()
        assert grid.ripple_interval(0) == float("inf")
        for cls in (1, 10, 31):
            assert grid.ripple_interval(cls) * 2 * grid.spacing(cls) / 343.0 == pytest.approx(1.0, abs=1e-12)

    def test_out_of_range(self):
        grid = GsClassGrid()
        with pytest.raises(ParameterError):
            grid.spacing(32)
        with pytest.raises(ParameterError):
            grid.class_of(-0.001)


class TestSegmentation:
    def test_line_costs_nothing(self):
        y = 3.0 + 0.5 * np.arange(10)
        assert segment_cost(y, 0, 10) == pytest.approx(0.0, abs=1e-18)
        assert segment_cost(y, 0, 2) == 0.0

    def test_penalty_floor(self):
        assert default_penalty(np.full(20, 7.0)) == pytest.approx(MIN_VARIANCE * np.log(20))

    def test_single_step(self):
        seg = optimal_segmentation([3.0] * 5 + [10.0] * 15)
        assert seg.breakpoints == [5]
        assert seg.cost == pytest.approx(0.0, abs=1e-18)

    def test_constant_sequence(self):
        assert optimal_segmentation(np.full(20, 4.0)).breakpoints == []

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_exhaustive_search(self, seed):
        rng = np.random.default_rng(seed)
        levels = rng.integers(0, 32, size=3)
        y = np.repeat(levels, [4, 4, 4]) + rng.normal(0, 1.0, 12)
        penalty = default_penalty(y)
        seg = optimal_segmentation(y, penalty)
        assert seg.objective == pytest.approx(brute_force_objective(y, penalty), abs=1e-9)

    def test_noiseless_steps_match_quadratic_recursion(self):
        rng = np.random.default_rng(500)
        for _ in range(500):
            y = piecewise_constant(rng)
            assert len(y) == 20
            penalty = default_penalty(y)
            seg = optimal_segmentation(y, penalty)
            assert seg.objective == pytest.approx(quadratic_objective(y, penalty), abs=1e-9)

    def test_segments_respect_min_size(self):
        rng = np.random.default_rng(3)
        y = rng.integers(0, 32, size=40).astype(float)
        bounds = [0] + optimal_segmentation(y, penalty=0.1).breakpoints + [40]
        assert min(np.diff(bounds)) >= 2


class TestChangePoints:
    def test_two_segment_trace(self):
        cps = detect_change_points([5] * 9 + [16] * 11)
        assert cps.raw == [9]
        assert cps.verified == [9]

    def test_single_outlier_is_not_a_change(self):
        trace = [5] * 20
        trace[10] = 16
        cps = detect_change_points(trace)
        assert cps.verified == []

    def test_uniform_trace(self):
        assert detect_change_points([5] * 20).verified == []

    def test_verified_points_are_separated(self):
        rng = np.random.default_rng(7)
        trace = np.repeat(rng.integers(0, 32, size=6), 4)
        verified = detect_change_points(trace).verified
        assert all(b - a > 2 for a, b in zip(verified[:-1], verified[1:]))

    def test_short_trace(self):
        with pytest.raises(ParameterError):
            detect_change_points([1, 2, 3])


class TestReconstruction:
    def test_three_glints(self):
        grid = GsClassGrid()
        trace = EstimateTrace(classes=np.array([5] * 9 + [16] * 11), window_starts=np.arange(20) * 5)
        report = reconstruct(trace, detect_change_points(trace.classes), grid)
        assert report.change_points == [9]
        assert report.segment_classes == [5, 16]
        assert report.glint_count == 3
        assert report.offsets == pytest.approx([0.0, grid.spacing(5), grid.spacing(5) + grid.spacing(16)])
        assert report.offsets[1] == pytest.approx(0.0113, abs=1e-4)
        assert report.offsets[2] == pytest.approx(0.0474, abs=1e-4)

    def test_single_glint(self):
        trace = EstimateTrace(classes=np.zeros(20, dtype=int), window_starts=np.arange(20) * 5)
        report = reconstruct(trace, detect_change_points(trace.classes))
        assert report.glint_count == 1
        assert report.offsets == [0.0]

    def test_evenly_spaced_glints_look_like_two(self):
        trace = EstimateTrace(classes=np.full(20, 5), window_starts=np.arange(20) * 5)
        report = reconstruct(trace, detect_change_points(trace.classes))
        assert report.glint_count == 2
        assert report.segment_classes == [5]

    def test_report_dict(self):
        trace = EstimateTrace(classes=np.array([5] * 9 + [16] * 11), window_starts=np.arange(20) * 5)
        data = reconstruct(trace, detect_change_points(trace.classes)).to_dict()
        assert data["glint_count"] == 3
        assert len(data["offsets_m"]) == 3
        assert len(data["trace"]) == 20


class TestSlidingEstimate:
    @pytest.fixture
    def cochleagram(self):
        values = np.full((161, 100), 0.5)
        values[:, :45] = -0.5
        return Cochleagram(values=values, cfs=20e3 + 500.0 * np.arange(161))

    def test_window_batch(self, cochleagram):
        batch = window_batch(cochleagram)
        assert batch.shape == (20, 161, 5)
        assert_array_equal(batch[3], cochleagram.values[:, 15:20])

    def test_trace(self, cochleagram):
        net = ThresholdNet(low=5, high=16)
        trace = sliding_estimate(cochleagram, net)
        assert net.batches == [(20, 161, 5)]
        assert_array_equal(trace.classes, [5] * 9 + [16] * 11)
        assert_array_equal(trace.window_starts, np.arange(0, 100, 5))

    def test_end_to_end(self, cochleagram):
        report = reconstruct_cochleagram(cochleagram, ThresholdNet(low=5, high=16))
        assert report.glint_count == 3

    def test_wrong_width(self):
        narrow = Cochleagram(values=np.zeros((161, 250)), cfs=np.arange(161.0))
        with pytest.raises(DataError):
            sliding_estimate(narrow, ThresholdNet(1, 2))

    def test_trace_csv(self, tmp_path, cochleagram):
        import pandas as pd

        trace = sliding_estimate(cochleagram, ThresholdNet(low=5, high=16))
        frame = pd.read_csv(write_trace_csv(trace, tmp_path / "trace.csv"))
        assert list(frame.columns) == ["window", "start_bin", "gs_class", "gs_mm"]
        assert frame["gs_mm"].iloc[0] == pytest.approx(GsClassGrid().spacing(5) * 1e3)
