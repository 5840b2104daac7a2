import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence

import numpy as np
from scipy import fft
from scipy.signal import correlate, hilbert

from src.sonar.broadcast import Broadcast, Window, make_broadcast
from src.sonar.echo_model import EchoModelConstants, echo_transfer, round_trip_delay
from src.sonar.geometry import SonarGeometry
from src.utils.errors import DataError, ParameterError
from src.utils.helpers import read_f32, write_f32

logger = logging.getLogger(__name__)

MAX_GLINTS = 4
MAX_OFFSET = 0.07
# Samples kept after the last possible echo sample, enough for filter ringing and a 250-bin window.
RECORD_TAIL = 4000


@dataclass(frozen=True)
class Target:
    """Glints on a line behind the first one; offsets (m) along +y from base_position."""
    glint_y_offsets: Sequence[float] = (0.0,)
    base_position: Sequence[float] = (0.0, 1.0, 0.0)

    def __post_init__(self):
        offsets = np.asarray(self.glint_y_offsets, dtype=float)
        if not 1 <= len(offsets) <= MAX_GLINTS:
            raise ParameterError(f"Target needs 1-{MAX_GLINTS} glints, got {len(offsets)}")
        if offsets[0] != 0:
            raise ParameterError("First glint offset must be 0")
        if np.any(np.diff(offsets) <= 0):
            raise ParameterError("Glint offsets must be strictly increasing")
        if offsets[-1] > MAX_OFFSET + 1e-12:
            raise ParameterError(f"Glint offset {offsets[-1] * 1e3:.1f} mm exceeds 70 mm")

    @property
    def glint_count(self) -> int:
        return len(self.glint_y_offsets)

    def glint_positions(self) -> np.ndarray:
        base = np.asarray(self.base_position, dtype=float)
        return np.array([base + np.array([0.0, y, 0.0]) for y in self.glint_y_offsets])

    def spacings(self) -> np.ndarray:
        return np.diff(np.asarray(self.glint_y_offsets, dtype=float))

    def to_dict(self) -> dict:
        return {
            "glint_y_offsets": [float(y) for y in self.glint_y_offsets],
            "base_position": [float(v) for v in self.base_position],
        }


@dataclass
class TimeSeries:
    samples: np.ndarray
    sample_rate: float = 1e6
    metadata: Dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if not np.all(np.isfinite(self.samples)):
            raise DataError("TimeSeries contains non-finite samples")

    def __len__(self):
        return len(self.samples)

    def save(self, path: Path) -> Path:
        sidecar = {"kind": "timeseries", "sample_rate": self.sample_rate, **self.metadata}
        return write_f32(self.samples, path, sidecar)

    @classmethod
    def load(cls, path: Path) -> "TimeSeries":
        data, meta = read_f32(path)
        if meta.get("kind", "timeseries") != "timeseries":
            raise DataError(f"{path} is not a time series file")
        meta = dict(meta)
        meta.pop("kind", None)
        meta.pop("shape", None)
        sample_rate = float(meta.pop("sample_rate"))
        return cls(samples=data.astype(float), sample_rate=sample_rate, metadata=meta)


def record_length(broadcast: Broadcast, target: Target, geom: SonarGeometry,
                  consts: EchoModelConstants) -> int:
    """Record length for any target sharing this base position and broadcast."""
    farthest = np.asarray(target.base_position, dtype=float) + np.array([0.0, MAX_OFFSET, 0.0])
    max_delay = round_trip_delay(farthest, geom, consts)
    return int(np.ceil(max_delay * broadcast.sample_rate)) + broadcast.n_samples + RECORD_TAIL


def synthesize_echo(broadcast: Broadcast, target: Target, geom: SonarGeometry,
                    consts: EchoModelConstants, n_samples: int, ear: str = "left") -> np.ndarray:
    """Noise-free echo: broadcast spectrum times the summed glint transfers, back to time."""
    n_fft = fft.next_fast_len(n_samples + broadcast.n_samples)
    spectrum = fft.rfft(broadcast.samples, n_fft)
    freqs = fft.rfftfreq(n_fft, d=1.0 / broadcast.sample_rate)
    transfer = np.zeros(len(freqs), dtype=complex)
    for glint in target.glint_positions():
        transfer += echo_transfer(freqs, glint, geom, consts, ear)
    return fft.irfft(spectrum * transfer, n_fft)[:n_samples]


def echo_support(echo: np.ndarray, fraction: float = 1e-3) -> slice:
    """Contiguous span where the echo envelope exceeds `fraction` of its peak."""
    envelope = np.abs(hilbert(echo))
    peak = envelope.max() if len(envelope) else 0.0
    if peak == 0:
        return slice(0, 0)
    above = np.flatnonzero(envelope > fraction * peak)
    return slice(int(above[0]), int(above[-1]) + 1)


def simulate_scene(broadcast: Broadcast, target: Target, geom: Optional[SonarGeometry] = None,
                   consts: Optional[EchoModelConstants] = None, snr_db: Optional[float] = 20.0,
                   seed: int = 0, ear: str = "left") -> TimeSeries:
    """Broadcast at t=0 followed by the multi-glint echo, plus white Gaussian noise.

    snr_db=None disables noise. The noise level is set against the echo RMS
    over its support and added to the whole record.
    """
    geom = geom or SonarGeometry()
    consts = consts or EchoModelConstants()
    n_samples = record_length(broadcast, target, geom, consts)

    echo = synthesize_echo(broadcast, target, geom, consts, n_samples, ear)
    record = echo.copy()
    record[:broadcast.n_samples] += broadcast.samples

    if snr_db is not None:
        support = echo_support(echo)
        echo_rms = np.sqrt(np.mean(echo[support] ** 2)) if support.stop > support.start else 0.0
        if echo_rms == 0:
            logger.warning("Echo is silent; skipping noise")
        else:
            noise_rms = echo_rms / 10 ** (snr_db / 20)
            rng = np.random.default_rng(seed)
            record += rng.normal(0.0, noise_rms, n_samples)

    metadata = {
        "seed": int(seed),
        "snr_db": snr_db,
        "target": target.to_dict(),
        "broadcast": broadcast.to_dict(),
        "broadcast_samples": broadcast.n_samples,
        "ear": ear,
    }
    return TimeSeries(samples=record, sample_rate=broadcast.sample_rate, metadata=metadata)


def matched_filter(ts: TimeSeries, broadcast: Broadcast) -> np.ndarray:
    """Pulse compression: cross-correlation of the record with the broadcast, lag 0 first."""
    full = correlate(ts.samples, broadcast.samples, mode="full", method="fft")
    return full[broadcast.n_samples - 1:]


def echo_delay(ts: TimeSeries, broadcast: Broadcast) -> float:
    """Round-trip delay (s) read off the compressed echo after removing the known broadcast."""
    residual = ts.samples.copy()
    residual[:broadcast.n_samples] -= broadcast.samples
    compressed = np.abs(hilbert(matched_filter(TimeSeries(residual, ts.sample_rate), broadcast)))
    return float(np.argmax(compressed)) / ts.sample_rate


def simulate_from_spec(offsets: Sequence[float], duration: float, snr_db: Optional[float] = 20.0,
                       seed: int = 0, window: Window = Window.WELCH,
                       geom: Optional[SonarGeometry] = None,
                       consts: Optional[EchoModelConstants] = None) -> TimeSeries:
    """Convenience wrapper used by the dataset generators and the CLI."""
    broadcast = make_broadcast(duration, window)
    return simulate_scene(broadcast, Target(tuple(offsets)), geom, consts, snr_db, seed)
