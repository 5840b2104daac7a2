from src.sonar.broadcast import Broadcast, Window, make_broadcast
from src.sonar.echo_model import (AbsorptionModel, EchoModelConstants, directivity_gain,
                                  echo_transfer)
from src.sonar.geometry import SonarGeometry
from src.sonar.scene import Target, TimeSeries, simulate_scene

__all__ = [
    "AbsorptionModel",
    "Broadcast",
    "EchoModelConstants",
    "SonarGeometry",
    "Target",
    "TimeSeries",
    "Window",
    "directivity_gain",
    "echo_transfer",
    "make_broadcast",
    "simulate_scene",
]
