from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.signal import chirp

from src.utils.errors import ParameterError

MIN_DURATION = 0.5e-3
MAX_DURATION = 10e-3


class Window(str, Enum):
    WELCH = "welch"
    RECT = "rect"


def welch_window(n_samples: int) -> np.ndarray:
    """w[n] = 1 - ((n - N/2) / (N/2))**2 for n = 0..N, sampled on n_samples points."""
    if n_samples < 2:
        return np.ones(n_samples)
    half = (n_samples - 1) / 2
    n = np.arange(n_samples)
    return 1.0 - ((n - half) / half) ** 2


@dataclass(frozen=True)
class Broadcast:
    duration: float
    f_start: float = 100e3
    f_end: float = 20e3
    sample_rate: float = 1e6
    window: Window = Window.WELCH
    samples: np.ndarray = field(default=None, repr=False)

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    def instantaneous_frequency(self, t):
        """Linear sweep frequency (Hz) at time t seconds."""
        return self.f_start + (self.f_end - self.f_start) * np.asarray(t) / self.duration

    def to_dict(self) -> dict:
        return {
            "duration": self.duration,
            "f_start": self.f_start,
            "f_end": self.f_end,
            "sample_rate": self.sample_rate,
            "window": Window(self.window).value,
        }


def make_broadcast(duration: float, window: Window = Window.WELCH, f_start: float = 100e3,
                   f_end: float = 20e3, sample_rate: float = 1e6) -> Broadcast:
    """Linear FM downsweep, one harmonic, amplitude-shaped by the chosen window."""
    if not MIN_DURATION - 1e-12 <= duration <= MAX_DURATION + 1e-12:
        raise ParameterError(f"Broadcast duration {duration * 1e3:.3f} ms outside 0.5-10 ms")
    if f_start <= f_end:
        raise ParameterError("Broadcast must be a downsweep (f_start > f_end)")
    window = Window(window)
    n_samples = int(round(duration * sample_rate))
    t = np.arange(n_samples) / sample_rate
    samples = chirp(t, f0=f_start, t1=duration, f1=f_end, method="linear", phi=-90)
    if window == Window.WELCH:
        samples = samples * welch_window(n_samples)
    return Broadcast(duration=duration, f_start=f_start, f_end=f_end,
                     sample_rate=sample_rate, window=window, samples=samples)
