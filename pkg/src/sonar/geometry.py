from dataclasses import dataclass, field
from math import cos, radians, sin

import numpy as np

from src.utils.errors import ParameterError


def unit_vector(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ParameterError("Cannot normalize a zero vector")
    return v / norm


def boresight(pitch_down_deg: float, yaw_deg: float = 0.0) -> np.ndarray:
    """Axis pointing along +y, pitched down and yawed (positive yaw = toward -x, the left side)."""
    pitch = radians(pitch_down_deg)
    yaw = radians(yaw_deg)
    return unit_vector([-sin(yaw) * cos(pitch), cos(yaw) * cos(pitch), -sin(pitch)])


def angle_between(u, v) -> float:
    """Angle in radians between two vectors; atan2 form stays accurate near 0 and pi."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    cross = np.linalg.norm(np.cross(u, v))
    return float(np.arctan2(cross, np.dot(u, v)))


def distance(p1, p2) -> float:
    return float(np.linalg.norm(np.asarray(p1, dtype=float) - np.asarray(p2, dtype=float)))


@dataclass(frozen=True)
class SonarGeometry:
    """Positions (m) and boresight axes of the mouth and both ears.

    Defaults follow the big brown bat layout: mouth at the origin, ears at
    (±0.75, 0.75, 1.5) cm, 0.5 cm apertures, every axis pitched 5° down and
    the ears yawed 25° outward. x points to the bat's right, z up.
    """
    mouth_pos: np.ndarray = field(default_factory=lambda: np.zeros(3))
    ear_pos_left: np.ndarray = field(default_factory=lambda: np.array([-0.0075, 0.0075, 0.015]))
    ear_pos_right: np.ndarray = field(default_factory=lambda: np.array([0.0075, 0.0075, 0.015]))
    mouth_radius: float = 0.005
    ear_radius: float = 0.005
    mouth_axis: np.ndarray = field(default_factory=lambda: boresight(5.0))
    ear_axis_left: np.ndarray = field(default_factory=lambda: boresight(5.0, 25.0))
    ear_axis_right: np.ndarray = field(default_factory=lambda: boresight(5.0, -25.0))

    def __post_init__(self):
        if self.mouth_radius <= 0 or self.ear_radius <= 0:
            raise ParameterError("Aperture radii must be positive")
        for name in ("mouth_axis", "ear_axis_left", "ear_axis_right"):
            axis = np.asarray(getattr(self, name), dtype=float)
            if abs(np.linalg.norm(axis) - 1.0) > 1e-12:
                raise ParameterError(f"{name} must be a unit vector")

    def ear(self, side: str = "left"):
        """Position and axis of one ear."""
        if side == "left":
            return np.asarray(self.ear_pos_left, dtype=float), np.asarray(self.ear_axis_left, dtype=float)
        if side == "right":
            return np.asarray(self.ear_pos_right, dtype=float), np.asarray(self.ear_axis_right, dtype=float)
        raise ParameterError(f"Unknown ear {side!r}")

    def to_dict(self) -> dict:
        return {
            "mouth_pos": np.asarray(self.mouth_pos).tolist(),
            "ear_pos_left": np.asarray(self.ear_pos_left).tolist(),
            "ear_pos_right": np.asarray(self.ear_pos_right).tolist(),
            "mouth_radius": self.mouth_radius,
            "ear_radius": self.ear_radius,
            "mouth_axis": np.asarray(self.mouth_axis).tolist(),
            "ear_axis_left": np.asarray(self.ear_axis_left).tolist(),
            "ear_axis_right": np.asarray(self.ear_axis_right).tolist(),
        }
