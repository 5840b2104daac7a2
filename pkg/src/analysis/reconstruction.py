"""Target geometry from a cropped cochleagram: sliding GS estimates, change points, offsets."""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from src.analysis.change_points import ChangePoints, detect_change_points
from src.analysis.gs_grid import GsClassGrid
from src.cochlea.spectrogram import Cochleagram
from src.utils.errors import DataError

logger = logging.getLogger(__name__)

WINDOW_BINS = 5
GS_INPUT_BINS = 100


@dataclass
class EstimateTrace:
    classes: np.ndarray
    window_starts: np.ndarray
    probabilities: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.classes)

    def to_frame(self, grid: Optional[GsClassGrid] = None) -> pd.DataFrame:
        grid = grid or GsClassGrid()
        return pd.DataFrame({
            "window": np.arange(len(self.classes)),
            "start_bin": self.window_starts,
            "gs_class": self.classes,
            "gs_mm": grid.spacings[self.classes] * 1e3,
        })


def window_batch(cochleagram: Cochleagram, window: int = WINDOW_BINS) -> np.ndarray:
    """Non-overlapping windows as a (n_windows, channels, window) batch."""
    values = cochleagram.values
    n_windows = values.shape[1] // window
    if n_windows == 0:
        raise DataError(f"Cochleagram of {values.shape[1]} bins is narrower than one {window}-bin window")
    cut = values[:, :n_windows * window]
    return cut.reshape(values.shape[0], n_windows, window).transpose(1, 0, 2)


def sliding_estimate(cochleagram: Cochleagram, gs_net, expected_bins: Optional[int] = GS_INPUT_BINS,
                     window: int = WINDOW_BINS) -> EstimateTrace:
    """Glint-spacing class of every 5-bin window of a cropped cochleagram."""
    if expected_bins is not None and cochleagram.n_bins != expected_bins:
        raise DataError(f"Expected a {expected_bins}-bin cochleagram, got {cochleagram.n_bins}")
    batch = window_batch(cochleagram, window)
    probabilities = gs_net.predict(batch)
    classes = np.argmax(probabilities, axis=1)
    return EstimateTrace(classes=classes, window_starts=np.arange(len(classes)) * window,
                         probabilities=probabilities)


@dataclass
class ReconstructionReport:
    change_points: List[int]
    segment_classes: List[int]
    segment_spacings: List[float]
    glint_count: int
    offsets: List[float]
    trace: List[int] = field(default_factory=list)
    raw_change_points: List[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "trace": [int(c) for c in self.trace],
            "raw_change_points": [int(c) for c in self.raw_change_points],
            "change_points": [int(c) for c in self.change_points],
            "segment_classes": [int(c) for c in self.segment_classes],
            "segment_spacings_m": [float(s) for s in self.segment_spacings],
            "glint_count": self.glint_count,
            "offsets_m": [float(o) for o in self.offsets],
        }


def _mode(values: np.ndarray) -> int:
    classes, counts = np.unique(values, return_counts=True)
    return int(classes[np.argmax(counts)])


def reconstruct(trace: EstimateTrace, change_points: ChangePoints,
                grid: Optional[GsClassGrid] = None) -> ReconstructionReport:
    grid = grid or GsClassGrid()
    classes = np.asarray(trace.classes)
    bounds = [0] + list(change_points.verified) + [len(classes)]
    segment_classes = [_mode(classes[a:b]) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    segment_spacings = [grid.spacing(c) for c in segment_classes]

    nonzero = [s for c, s in zip(segment_classes, segment_spacings) if c != 0]
    offsets = [0.0] + list(np.cumsum(nonzero))
    report = ReconstructionReport(
        change_points=list(change_points.verified),
        segment_classes=segment_classes,
        segment_spacings=segment_spacings,
        glint_count=len(nonzero) + 1,
        offsets=[float(o) for o in offsets],
        trace=[int(c) for c in classes],
        raw_change_points=list(change_points.raw),
    )
    logger.info(f"Reconstructed {report.glint_count} glints at "
                f"{', '.join(f'{o * 1e3:.1f}' for o in report.offsets)} mm")
    return report


def reconstruct_cochleagram(cochleagram: Cochleagram, gs_net,
                            grid: Optional[GsClassGrid] = None) -> ReconstructionReport:
    trace = sliding_estimate(cochleagram, gs_net)
    return reconstruct(trace, detect_change_points(trace.classes), grid)


def write_trace_csv(trace: EstimateTrace, path: Path, grid: Optional[GsClassGrid] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    trace.to_frame(grid).to_csv(path, index=False)
    return path
