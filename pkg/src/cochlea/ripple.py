"""Spectral ripple measurement along the frequency axis of a cochleagram."""
import logging
from typing import Optional

import numpy as np
from scipy.signal import find_peaks

from src.cochlea.spectrogram import Cochleagram
from src.utils.errors import DataError

logger = logging.getLogger(__name__)


def expected_ripple_spacing(glint_spacing: float, c: float = 343.0) -> float:
    """Notch spacing (Hz) of two glints glint_spacing metres apart along the line of sight."""
    if glint_spacing <= 0:
        return float("inf")
    return c / (2 * glint_spacing)


def find_notches(profile: np.ndarray, prominence: float = 0.05) -> np.ndarray:
    """Indices of spectral notches (local minima standing out by `prominence`)."""
    notches, _ = find_peaks(-np.asarray(profile, dtype=float), prominence=prominence)
    return notches


def ripple_spacing(profile: np.ndarray, cfs: np.ndarray, prominence: float = 0.05) -> float:
    """Median distance (Hz) between adjacent notches of a spectral profile.

    Returns inf when fewer than two notches are found (a single-glint echo).
    """
    profile = np.asarray(profile, dtype=float)
    if profile.shape != cfs.shape:
        raise DataError(f"Profile of {profile.shape} does not match {cfs.shape} channel CFs")
    span = profile.max() - profile.min()
    if span == 0:
        return float("inf")
    notches = find_notches((profile - profile.min()) / span, prominence)
    if len(notches) < 2:
        return float("inf")
    return float(np.median(np.diff(cfs[notches])))


def echo_span(cochleagram: Cochleagram, level: float = 0.25) -> slice:
    """Frames from the first to the last whose mean rises `level` of the way from the quietest to the loudest."""
    means = cochleagram.values.mean(axis=0)
    cut = means.min() + level * (means.max() - means.min())
    active = np.flatnonzero(means >= cut)
    return slice(int(active[0]), int(active[-1]) + 1)


def frame_ripple_spacings(cochleagram: Cochleagram, frames: Optional[slice] = None,
                          prominence: float = 0.05, min_notches: int = 3) -> np.ndarray:
    """Notch spacing (Hz) of every frame in `frames`; NaN where fewer than min_notches notches stand out."""
    if frames is None:
        frames = echo_span(cochleagram)
    columns = cochleagram.values[:, frames]
    spacings = np.full(columns.shape[1], np.nan)
    for i, column in enumerate(columns.T):
        span = column.max() - column.min()
        if span == 0:
            continue
        notches = find_notches((column - column.min()) / span, prominence)
        if len(notches) >= min_notches:
            spacings[i] = np.median(np.diff(cochleagram.cfs[notches]))
    return spacings


def cochleagram_ripple_spacing(cochleagram: Cochleagram, prominence: float = 0.05,
                               min_notches: int = 3) -> float:
    """Median notch spacing over the echo frames that show a ripple; inf when none does.

    Two glint echoes only interfere where they overlap in time, which for a
    wide pair is well after the loudest frame.
    """
    spacings = frame_ripple_spacings(cochleagram, prominence=prominence, min_notches=min_notches)
    rippled = spacings[np.isfinite(spacings)]
    if not len(rippled):
        return float("inf")
    spacing = float(np.median(rippled))
    logger.debug(f"Measured ripple spacing {spacing / 1e3:.2f} kHz over {len(rippled)} frames")
    return spacing
