import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.cochlea.dechirp import ThresholdMode, dechirp, detect_crossings
from src.cochlea.filterbank import ChannelBankOutput, FilterbankSpec, filterbank_apply
from src.sonar.scene import TimeSeries
from src.utils.errors import DataError, ParameterError
from src.utils.helpers import read_f32, write_f32

logger = logging.getLogger(__name__)

CLASSIFIER_BINS = 250
GS_CROP = (50, 150)
# shallowest allowed dB floor re the peak
MAX_FLOOR_DB = -10.0


@dataclass
class Cochleagram:
    """Channels x time bins, normalized to [-1, 1], CFs ascending."""
    values: np.ndarray
    cfs: np.ndarray
    time_bin: float = 8e-6

    @property
    def n_bins(self) -> int:
        return self.values.shape[1]

    def save(self, path: Path) -> Path:
        step = float(self.cfs[1] - self.cfs[0]) if len(self.cfs) > 1 else 0.0
        sidecar = {
            "kind": "cochleagram",
            "T": self.n_bins,
            "time_bin_s": self.time_bin,
            "f_low": float(self.cfs[0]),
            "f_high": float(self.cfs[-1]),
            "step": step,
        }
        return write_f32(self.values, path, sidecar)

    @classmethod
    def load(cls, path: Path) -> "Cochleagram":
        values, meta = read_f32(path)
        if meta.get("kind") != "cochleagram":
            raise DataError(f"{path} is not a cochleagram file")
        n_channels = values.shape[0]
        cfs = meta["f_low"] + meta["step"] * np.arange(n_channels)
        return cls(values=values.astype(float), cfs=cfs, time_bin=float(meta["time_bin_s"]))


def normalize(values: np.ndarray) -> np.ndarray:
    """Affine map sending the minimum to -1 and the maximum to +1."""
    lo, hi = values.min(), values.max()
    if hi == lo:
        raise DataError("Cannot normalize a constant spectrogram")
    out = 2.0 * (values - lo) / (hi - lo) - 1.0
    # pin the extremes exactly
    out[values == lo] = -1.0
    out[values == hi] = 1.0
    return out


def frame_energies(matrix: np.ndarray, window: int = 128, hop: int = 8) -> np.ndarray:
    """Energy per channel per frame (sum of squares), frames = floor((n - window) / hop) + 1."""
    if matrix.shape[1] < window:
        raise DataError(f"Signal of {matrix.shape[1]} samples is shorter than one {window}-sample window")
    frames = sliding_window_view(matrix, window, axis=1)[:, ::hop, :]
    return np.einsum("cfw,cfw->cf", frames, frames)


def onset_anchor(values: np.ndarray, level: float = -0.5, fraction: float = 0.5, margin: int = 25) -> int:
    """First frame where `fraction` of channels exceed `level`, minus `margin` frames."""
    active = (values > level).mean(axis=0) >= fraction
    if not active.any():
        return 0
    return max(int(np.argmax(active)) - margin, 0)


def noise_floor_db(relative_energy: np.ndarray, n_frames: int, margin_db: float,
                   quantile: float = 0.95) -> Optional[float]:
    """Noise level (dB re peak) of the first n_frames frames, plus margin_db.

    Takes the loudest frame of each channel and then the `quantile` across
    channels. None when there is nothing to measure.
    """
    if n_frames < 1:
        return None
    loudest = relative_energy[:, :n_frames].max(axis=1)
    level = float(np.quantile(loudest, quantile))
    if level <= 0:
        return None
    return 10 * np.log10(level) + margin_db


def spectrogram(bank: ChannelBankOutput, window: float = 0.128e-3, overlap: float = 0.120e-3,
                n_bins: Optional[int] = CLASSIFIER_BINS, floor_db: float = 60.0,
                pre_onset: float = 1e-3, noise_margin_db: Optional[float] = 6.0,
                noise_guard: float = 0.5e-3) -> Cochleagram:
    """Energy-by-band auditory spectrogram of a dechirped bank, in dB, mapped to [-1, 1].

    Framing starts `pre_onset` seconds before the dechirped echo onset so the
    broadcast stays out of the normalization. Energies are floored `floor_db`
    below the peak, or at the noise level plus `noise_margin_db` when that is
    higher; the noise is read from the frames ending `noise_guard` seconds
    or more before the onset. With n_bins set, the window of n_bins frames
    anchored on the echo onset is cut out and renormalized.
    """
    if not bank.dechirped:
        raise ParameterError("Spectrogram expects a dechirped channel bank")
    fs = bank.sample_rate
    win = int(round(window * fs))
    hop = win - int(round(overlap * fs))
    if hop <= 0:
        raise ParameterError("Overlap must be shorter than the window")

    start = 0
    n_noise_frames = 0
    if bank.echo_onset is not None:
        start = max(bank.echo_onset - int(round(pre_onset * fs)), 0)
        quiet = bank.echo_onset - int(round(noise_guard * fs)) - start
        n_noise_frames = max((quiet - win) // hop + 1, 0)
    energy = frame_energies(bank.matrix[:, start:], win, hop)
    peak = energy.max()
    if peak <= 0:
        raise DataError("Channel bank carries no energy")
    relative = energy / peak

    floor = -floor_db
    if noise_margin_db is not None:
        noise = noise_floor_db(relative, n_noise_frames, noise_margin_db)
        if noise is not None and noise > floor:
            floor = min(noise, MAX_FLOOR_DB)
            if noise > MAX_FLOOR_DB:
                logger.warning(f"Noise floor {noise:.1f} dB re peak; clipped to {MAX_FLOOR_DB} dB")
    db = 10 * np.log10(np.maximum(relative, 10 ** (floor / 10)))
    values = normalize(db)

    if n_bins is not None:
        anchor = onset_anchor(values)
        cut = values[:, anchor:anchor + n_bins]
        if cut.shape[1] < n_bins:
            logger.warning(f"Only {cut.shape[1]} frames after the onset, padding to {n_bins}")
            cut = np.pad(cut, ((0, 0), (0, n_bins - cut.shape[1])), constant_values=-1.0)
        values = normalize(cut)
    return Cochleagram(values=values, cfs=bank.cfs.copy(), time_bin=hop / fs)


def cochleagram_from_timeseries(ts: TimeSeries, spec: Optional[FilterbankSpec] = None,
                                n_bins: Optional[int] = CLASSIFIER_BINS, threshold: Optional[float] = None,
                                mode: ThresholdMode = ThresholdMode.BANK) -> Cochleagram:
    """Filterbank, crossings, dechirp and spectrogram in one call."""
    bank = filterbank_apply(ts, spec)
    crossings = detect_crossings(bank, threshold, mode)
    return spectrogram(dechirp(bank, crossings), n_bins=n_bins)


def crop_bins(cochleagram: Cochleagram, start: int = GS_CROP[0], stop: int = GS_CROP[1]) -> Cochleagram:
    """Keep time bins [start, stop), the slice the glint-spacing network sees."""
    if not 0 <= start < stop <= cochleagram.n_bins:
        raise ParameterError(f"Crop [{start}, {stop}) outside 0..{cochleagram.n_bins}")
    return Cochleagram(values=cochleagram.values[:, start:stop].copy(), cfs=cochleagram.cfs,
                       time_bin=cochleagram.time_bin)
