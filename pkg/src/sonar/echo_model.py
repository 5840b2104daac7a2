"""Per-frequency echo transfer of one glint: spreading, absorption and aperture directivity."""
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.special import j1

from src.sonar.geometry import SonarGeometry, angle_between
from src.utils.errors import ParameterError


class AbsorptionModel(str, Enum):
    NONE = "none"
    ISO9613 = "iso9613"


@dataclass(frozen=True)
class EchoModelConstants:
    lump_constant: float = 3000.0
    speed_of_sound: float = 343.0
    absorption_model: AbsorptionModel = AbsorptionModel.ISO9613
    temperature_c: float = 20.0
    relative_humidity: float = 50.0

    def __post_init__(self):
        if self.lump_constant <= 0:
            raise ParameterError("lump_constant must be positive")
        if self.speed_of_sound <= 0:
            raise ParameterError("speed_of_sound must be positive")

    def to_dict(self) -> dict:
        return {
            "lump_constant": self.lump_constant,
            "speed_of_sound": self.speed_of_sound,
            "absorption_model": AbsorptionModel(self.absorption_model).value,
            "temperature_c": self.temperature_c,
            "relative_humidity": self.relative_humidity,
        }


def directivity_gain(beta, aperture_radius: float, f, c: float = 343.0):
    """Circular-piston pattern 2*J1(x)/x with x = k*a*sin(beta), k = 2*pi*f/c.

    J1 comes from scipy.special (Cephes rational approximations). x -> 0 gives 1.
    """
    if aperture_radius <= 0:
        raise ParameterError("aperture_radius must be positive")
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ParameterError("Frequency must be non-negative")
    x = 2 * np.pi * f / c * aperture_radius * np.sin(np.asarray(beta, dtype=float))
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    gain = np.where(small, 1.0, 2.0 * j1(safe) / safe)
    return gain if gain.ndim else float(gain)


def iso9613_absorption(f, temperature_c: float = 20.0, relative_humidity: float = 50.0,
                       pressure_kpa: float = 101.325):
    """Atmospheric absorption coefficient in dB/m (ISO 9613-1)."""
    if not -20 <= temperature_c <= 50:
        raise ParameterError("temperature outside ISO 9613-1 range (-20..50 C)")
    if not 10 <= relative_humidity <= 100:
        raise ParameterError("relative humidity outside ISO 9613-1 range (10..100 %)")
    f = np.asarray(f, dtype=float)
    f2 = f * f
    t_kelvin = temperature_c + 273.15
    t_ref = 293.15
    t_triple = 273.16
    p_ratio = pressure_kpa / 101.325
    t_ratio = t_kelvin / t_ref

    c_sat = -6.8346 * (t_triple / t_kelvin) ** 1.261 + 4.6151
    h = relative_humidity * 10**c_sat / p_ratio

    fr_o = p_ratio * (24 + 4.04e4 * h * (0.02 + h) / (0.391 + h))
    fr_n = p_ratio * t_ratio ** (-0.5) * (9 + 280 * h * np.exp(-4.170 * (t_ratio ** (-1 / 3) - 1)))

    return 8.686 * f2 * (
        1.84e-11 / p_ratio * np.sqrt(t_ratio)
        + t_ratio ** (-2.5) * (
            0.01275 * np.exp(-2239.1 / t_kelvin) / (fr_o + f2 / fr_o)
            + 0.1068 * np.exp(-3352.0 / t_kelvin) / (fr_n + f2 / fr_n)
        )
    )


def absorption_factor(f, path_length: float, consts: EchoModelConstants):
    """Amplitude factor alpha(f, r) over a path of path_length metres."""
    if AbsorptionModel(consts.absorption_model) == AbsorptionModel.NONE:
        return np.ones_like(np.asarray(f, dtype=float))
    alpha_db = iso9613_absorption(f, consts.temperature_c, consts.relative_humidity)
    return 10 ** (-alpha_db * path_length / 20)


def glint_ranges(glint, geom: SonarGeometry, ear: str = "left"):
    """(r_m, beta_m, r_e, beta_e) for one glint."""
    glint = np.asarray(glint, dtype=float)
    ear_pos, ear_axis = geom.ear(ear)
    to_glint_m = glint - np.asarray(geom.mouth_pos, dtype=float)
    to_glint_e = glint - ear_pos
    r_m = float(np.linalg.norm(to_glint_m))
    r_e = float(np.linalg.norm(to_glint_e))
    if r_m == 0 or r_e == 0:
        raise ParameterError("Glint coincides with the mouth or the ear")
    beta_m = angle_between(geom.mouth_axis, to_glint_m)
    beta_e = angle_between(ear_axis, to_glint_e)
    return r_m, beta_m, r_e, beta_e


def round_trip_delay(glint, geom: SonarGeometry, consts: EchoModelConstants, ear: str = "left") -> float:
    r_m, _, r_e, _ = glint_ranges(glint, geom, ear)
    return (r_m + r_e) / consts.speed_of_sound


def echo_transfer(f, glint, geom: Optional[SonarGeometry] = None,
                  consts: Optional[EchoModelConstants] = None, ear: str = "left"):
    """Complex gain of a glint echo at frequency f (Hz) as heard at one ear.

    The amplitude term carries the sign of the directivity lobes, the phase
    term is the round-trip propagation delay.
    """
    geom = geom or SonarGeometry()
    consts = consts or EchoModelConstants()
    f = np.asarray(f, dtype=float)
    r_m, beta_m, r_e, beta_e = glint_ranges(glint, geom, ear)
    c = consts.speed_of_sound

    amplitude = (consts.lump_constant * f * geom.mouth_radius**2 * geom.ear_radius**2 / (r_m * r_e)
                 * absorption_factor(f, r_m + r_e, consts)
                 * directivity_gain(beta_m, geom.mouth_radius, f, c)
                 * directivity_gain(beta_e, geom.ear_radius, f, c))
    return amplitude * np.exp(-2j * np.pi * f * (r_m + r_e) / c)
