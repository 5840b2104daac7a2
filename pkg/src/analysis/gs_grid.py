from dataclasses import dataclass

import numpy as np

from src.utils.errors import ParameterError

GS_CLASSES = 32
GS_MAX_SPACING = 0.07


@dataclass(frozen=True)
class GsClassGrid:
    """Glint-spacing classes: class k <-> linspace(0, max_spacing, n_classes)[k]."""
    n_classes: int = GS_CLASSES
    max_spacing: float = GS_MAX_SPACING
    speed_of_sound: float = 343.0

    def __post_init__(self):
        if self.n_classes < 2:
            raise ParameterError("Need at least two spacing classes")
        if self.max_spacing <= 0:
            raise ParameterError("max_spacing must be positive")

    @property
    def spacings(self) -> np.ndarray:
        return np.linspace(0.0, self.max_spacing, self.n_classes)

    @property
    def step(self) -> float:
        return self.max_spacing / (self.n_classes - 1)

    def spacing(self, cls: int) -> float:
        if not 0 <= cls < self.n_classes:
            raise ParameterError(f"Class {cls} outside 0..{self.n_classes - 1}")
        return float(self.spacings[cls])

    def class_of(self, spacing: float) -> int:
        """Nearest grid class for a spacing in metres."""
        if spacing < 0:
            raise ParameterError("Spacing must be non-negative")
        return int(np.argmin(np.abs(self.spacings - spacing)))

    def ripple_interval(self, cls: int) -> float:
        """Notch spacing c/(2d) in Hz; inf for the zero-spacing class."""
        d = self.spacing(cls)
        if d == 0:
            return float("inf")
        return self.speed_of_sound / (2 * d)

    def to_dict(self) -> dict:
        return {
            "n_classes": self.n_classes,
            "max_spacing": self.max_spacing,
            "speed_of_sound": self.speed_of_sound,
        }
