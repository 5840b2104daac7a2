"""Threshold crossings on broadcast and echo, and per-channel dechirp alignment."""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.linalg import lstsq
from scipy.signal import hilbert

from src.cochlea.filterbank import ChannelBankOutput
from src.utils.errors import DechirpError, ParameterError

logger = logging.getLogger(__name__)

MISSING = -1


class ThresholdMode(str, Enum):
    BANK = "bank"
    CHANNEL = "channel"


@dataclass
class CrossingTable:
    """Per-channel crossing sample indices; MISSING where a channel never crossed."""
    broadcast: np.ndarray
    echo: np.ndarray
    raw_echo: np.ndarray
    corrected: np.ndarray
    threshold: float
    median_delay: Optional[float] = None
    filled_broadcast: Optional[np.ndarray] = None

    @property
    def missing_broadcast(self) -> np.ndarray:
        return self.broadcast == MISSING

    @property
    def missing_echo(self) -> np.ndarray:
        return self.echo == MISSING

    def delays(self) -> np.ndarray:
        """Echo minus broadcast crossing per channel (NaN where either is missing)."""
        delays = (self.echo - self.broadcast).astype(float)
        delays[self.missing_broadcast | self.missing_echo] = np.nan
        return delays


def channel_envelopes(bank: ChannelBankOutput) -> np.ndarray:
    """Magnitude of the analytic signal of every channel."""
    return np.abs(hilbert(bank.matrix, axis=1))


def _first_rising(envelope: np.ndarray, level: float, start: int = 0) -> int:
    above = envelope[start:] > level
    if not above.any():
        return MISSING
    rising = np.flatnonzero(above[1:] & ~above[:-1]) + 1
    if above[0]:
        # already above at the start of the search window: not an onset
        if not len(rising):
            return MISSING
        return int(rising[0]) + start
    return int(np.argmax(above)) + start


def fill_from_sweep(crossings: np.ndarray, cfs: np.ndarray, n_samples: int) -> np.ndarray:
    """Missing broadcast crossings from a least-squares line of crossing index against CF.

    A linear FM sweep reaches each CF at a time linear in the CF. Needs two
    channels with a crossing. Fills `crossings` in place and returns the mask
    of filled channels.
    """
    found = crossings != MISSING
    filled = np.zeros(len(crossings), dtype=bool)
    if found.sum() < 2 or found.all():
        return filled
    design = np.column_stack([np.ones(found.sum()), cfs[found]])
    coef, _, _, _ = lstsq(design, crossings[found].astype(float))
    predicted = np.clip(np.rint(coef[0] + coef[1] * cfs[~found]), 0, n_samples - 1).astype(int)
    crossings[~found] = predicted
    filled[~found] = True
    return filled


def _echo_levels(envelopes: np.ndarray, broadcast: np.ndarray, gate: int, level: float,
                 echo_floor: float, mode: ThresholdMode) -> np.ndarray:
    """Per-channel echo threshold; NaN where the channel has no echo to look for.

    In CHANNEL mode `level` is a fraction of each channel's own echo peak.
    """
    n_channels, n_samples = envelopes.shape
    channel_peaks = envelopes.max(axis=1)
    echo_peaks = np.zeros(n_channels)
    for c in range(n_channels):
        start = broadcast[c] + gate
        if broadcast[c] != MISSING and start < n_samples - 1:
            echo_peaks[c] = envelopes[c, start:].max()

    levels = np.full(n_channels, np.nan)
    if mode == ThresholdMode.CHANNEL:
        usable = (echo_peaks > 0) & (echo_peaks >= echo_floor * channel_peaks)
        levels[usable] = level * echo_peaks[usable]
        return levels

    broadcast_peak = channel_peaks.max()
    bank_echo_peak = echo_peaks.max()
    if bank_echo_peak == 0 or bank_echo_peak < echo_floor * broadcast_peak:
        return levels
    # same level on the echo after bank-wide gain normalization to the broadcast
    usable = echo_peaks >= echo_floor * broadcast_peak
    levels[usable] = level * bank_echo_peak / broadcast_peak
    return levels


def detect_crossings(bank: ChannelBankOutput, threshold: Optional[float] = None,
                     mode: ThresholdMode = ThresholdMode.BANK, fraction: float = 0.1,
                     min_echo_delay: float = 4e-3, echo_floor: float = 1e-3,
                     delay_tolerance: int = 8) -> CrossingTable:
    """Find the broadcast and echo onset in every channel.

    In BANK mode `threshold` is one envelope amplitude used on every channel,
    by default `fraction` of the broadcast's peak envelope across the bank
    (the broadcast is the loudest event of the record). The echo segment is
    scaled by the bank-wide broadcast-to-echo peak ratio and compared with
    the same level. Broadcast crossings still missing are filled from the
    sweep line through the found ones.

    CHANNEL mode puts the level at `threshold` (default `fraction`) times
    each pulse's own peak envelope in each channel.

    The echo is searched from `min_echo_delay` seconds after the broadcast
    crossing and only counts if it peaks above `echo_floor` times the
    broadcast peak. Echo crossings that miss or stray more than
    `delay_tolerance` samples from the median echo delay are replaced by
    broadcast crossing + median delay.
    """
    mode = ThresholdMode(mode)
    if threshold is not None and threshold <= 0:
        raise ParameterError("Crossing threshold must be positive")
    if fraction <= 0:
        raise ParameterError("Threshold fraction must be positive")
    envelopes = channel_envelopes(bank)
    n_channels, n_samples = envelopes.shape
    gate = int(round(min_echo_delay * bank.sample_rate))
    channel_peaks = envelopes.max(axis=1)

    broadcast = np.full(n_channels, MISSING, dtype=int)
    filled = np.zeros(n_channels, dtype=bool)
    if mode == ThresholdMode.BANK:
        level = threshold if threshold is not None else fraction * float(channel_peaks.max())
        if level > 0:
            for c in range(n_channels):
                broadcast[c] = _first_rising(envelopes[c], level)
            filled = fill_from_sweep(broadcast, bank.cfs, n_samples)
            if filled.any():
                logger.debug(f"Filled {filled.sum()} broadcast crossings from the sweep line")
    else:
        level = threshold if threshold is not None else fraction
        for c in range(n_channels):
            if channel_peaks[c] > 0:
                broadcast[c] = _first_rising(envelopes[c], level * channel_peaks[c])

    raw_echo = np.full(n_channels, MISSING, dtype=int)
    echo_levels = _echo_levels(envelopes, broadcast, gate, level, echo_floor, mode)
    for c in np.flatnonzero(~np.isnan(echo_levels)):
        raw_echo[c] = _first_rising(envelopes[c], echo_levels[c], broadcast[c] + gate)

    echo = raw_echo.copy()
    corrected = np.zeros(n_channels, dtype=bool)
    measured = (broadcast != MISSING) & (raw_echo != MISSING)
    reliable = measured & ~filled
    median_delay = None
    if reliable.any():
        median_delay = float(np.median(raw_echo[reliable] - broadcast[reliable]))
        stray = np.zeros(n_channels, dtype=bool)
        stray[measured] = np.abs(raw_echo[measured] - broadcast[measured] - median_delay) > delay_tolerance
        fixable = (broadcast != MISSING) & (stray | (raw_echo == MISSING))
        echo[fixable] = np.minimum(broadcast[fixable] + int(round(median_delay)), n_samples - 1)
        corrected = fixable
        if corrected.any():
            logger.debug(f"Corrected echo crossings on {corrected.sum()} of {n_channels} channels")
    missing = (echo == MISSING).sum()
    if missing:
        logger.debug(f"{missing} channels without echo crossing")
    return CrossingTable(broadcast=broadcast, echo=echo, raw_echo=raw_echo, corrected=corrected,
                         threshold=float(level), median_delay=median_delay, filled_broadcast=filled)


def shift_rows(matrix: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    """Move each row left by its shift (right if negative), filling with zeros."""
    out = np.zeros_like(matrix)
    n = matrix.shape[1]
    for c, s in enumerate(shifts):
        s = int(s)
        if s >= n or -s >= n:
            continue
        if s >= 0:
            out[c, :n - s] = matrix[c, s:]
        else:
            out[c, -s:] = matrix[c, :n + s]
    return out


def dechirp(bank: ChannelBankOutput, crossings: CrossingTable, reference_cf: float = 100e3) -> ChannelBankOutput:
    """Align every channel's echo onset with the reference (highest) channel."""
    ref = bank.channel_index(reference_cf)
    if crossings.echo[ref] == MISSING:
        raise DechirpError(f"No echo crossing on the {bank.cfs[ref] / 1e3:.1f} kHz reference channel")
    shifts = np.where(crossings.missing_echo, 0, crossings.echo - crossings.echo[ref])
    n_unaligned = int(crossings.missing_echo.sum())
    if n_unaligned:
        logger.warning(f"{n_unaligned} channels left unshifted (no echo crossing)")
    return ChannelBankOutput(matrix=shift_rows(bank.matrix, shifts), cfs=bank.cfs,
                             sample_rate=bank.sample_rate, shifts=shifts,
                             echo_onset=int(crossings.echo[ref]))
