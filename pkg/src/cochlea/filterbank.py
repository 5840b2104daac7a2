import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.signal import bilinear_zpk, sosfilt, sosfreqz, zpk2sos

from src.sonar.scene import TimeSeries
from src.utils.errors import DataError, ParameterError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FilterbankSpec:
    f_low: float = 20e3
    f_high: float = 100e3
    step: float = 0.5e3
    order: int = 4
    quality: float = 15.0
    sample_rate: float = 1e6

    def __post_init__(self):
        if self.order < 1:
            raise ParameterError("Filter order must be >= 1")
        if self.quality <= 0:
            raise ParameterError("Quality factor must be positive")
        if not 0 < self.f_low <= self.f_high < self.sample_rate / 2:
            raise ParameterError("Need 0 < f_low <= f_high < Nyquist")

    @property
    def n_channels(self) -> int:
        return int(round((self.f_high - self.f_low) / self.step)) + 1

    def center_frequencies(self) -> np.ndarray:
        """Channel CFs in Hz, ascending."""
        return self.f_low + self.step * np.arange(self.n_channels)

    def to_dict(self) -> dict:
        return {
            "f_low": self.f_low,
            "f_high": self.f_high,
            "step": self.step,
            "order": self.order,
            "quality": self.quality,
            "sample_rate": self.sample_rate,
        }


@dataclass(frozen=True)
class DapgfFilter:
    """Digital DAPGF channel stored as second-order sections."""
    cf: float
    sample_rate: float
    sos: np.ndarray = field(repr=False)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return sosfilt(self.sos, x)

    def response(self, freqs) -> np.ndarray:
        """Complex frequency response at freqs (Hz)."""
        _, h = sosfreqz(self.sos, worN=np.asarray(freqs, dtype=float), fs=self.sample_rate)
        return h

    def poles(self) -> np.ndarray:
        return np.concatenate([np.roots(section[3:]) for section in self.sos])

    def is_stable(self) -> bool:
        return bool(np.all(np.abs(self.poles()) < 1.0))


def design_dapgf(cf: float, spec: Optional[FilterbankSpec] = None) -> DapgfFilter:
    """Bilinear-transform realization of the differentiated all-pole gammatone.

    H(s) = w^(2N-1) s / (s^2 + (w/Q) s + w^2)^N, scaled by 1/Q^N so the gain at
    the pole frequency is 1. w is pre-warped so the analog resonance lands on cf.
    """
    spec = spec or FilterbankSpec()
    fs = spec.sample_rate
    if not 0 < cf < fs / 2:
        raise ParameterError(f"Centre frequency {cf} Hz must lie in (0, {fs / 2}) Hz")
    n, q = spec.order, spec.quality

    omega = 2 * fs * np.tan(np.pi * cf / fs)
    pole = omega * (-1 / (2 * q) + 1j * np.sqrt(1 - 1 / (4 * q * q)))
    poles = np.array([pole, np.conj(pole)] * n)
    zeros = np.array([0.0])
    gain = omega ** (2 * n - 1) / q**n

    z, p, k = bilinear_zpk(zeros, poles, gain, fs)
    return DapgfFilter(cf=float(cf), sample_rate=fs, sos=zpk2sos(z, p, k))


@dataclass
class ChannelBankOutput:
    """Filtered signal per channel (rows ascend in CF) plus the alignment applied so far."""
    matrix: np.ndarray
    cfs: np.ndarray
    sample_rate: float
    shifts: Optional[np.ndarray] = None
    echo_onset: Optional[int] = None

    @property
    def n_channels(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_samples(self) -> int:
        return self.matrix.shape[1]

    @property
    def dechirped(self) -> bool:
        return self.shifts is not None

    def channel_index(self, cf: float) -> int:
        return int(np.argmin(np.abs(self.cfs - cf)))


def design_filterbank(spec: Optional[FilterbankSpec] = None) -> List[DapgfFilter]:
    spec = spec or FilterbankSpec()
    return [design_dapgf(cf, spec) for cf in spec.center_frequencies()]


def filterbank_apply(ts: TimeSeries, spec: Optional[FilterbankSpec] = None,
                     filters: Optional[List[DapgfFilter]] = None) -> ChannelBankOutput:
    spec = spec or FilterbankSpec()
    if abs(ts.sample_rate - spec.sample_rate) > 1e-6:
        raise DataError(f"Sample rate {ts.sample_rate} Hz does not match filterbank {spec.sample_rate} Hz")
    filters = filters or design_filterbank(spec)
    matrix = np.empty((len(filters), len(ts)))
    for i, channel in enumerate(filters):
        matrix[i] = channel.apply(ts.samples)
    return ChannelBankOutput(matrix=matrix, cfs=spec.center_frequencies(), sample_rate=spec.sample_rate)
