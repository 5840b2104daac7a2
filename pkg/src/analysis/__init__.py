from src.analysis.change_points import ChangePoints, detect_change_points, optimal_segmentation
from src.analysis.gs_grid import GsClassGrid
from src.analysis.reconstruction import (EstimateTrace, ReconstructionReport, reconstruct,
                                         reconstruct_cochleagram, sliding_estimate)

__all__ = [
    "ChangePoints",
    "EstimateTrace",
    "GsClassGrid",
    "ReconstructionReport",
    "detect_change_points",
    "optimal_segmentation",
    "reconstruct",
    "reconstruct_cochleagram",
    "sliding_estimate",
]
