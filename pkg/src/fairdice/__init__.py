"""Fair die design: probability models, sphere-model layouts, calibration and meshes."""

from .errors import DiceError
from .models import (BipyramidSpec, BoxSpec, CoinSpec, FaceDistribution, PrismSpec,
                     SharpenedPrismSpec, dynamic_edge_probability, fair_thickness_dynamic,
                     fair_thickness_geometric, geometric_face_distribution,
                     solid_angle_of_polygon)

__version__ = "0.1.0"

__all__ = [
    "BipyramidSpec", "BoxSpec", "CoinSpec", "DiceError", "FaceDistribution", "PrismSpec",
    "SharpenedPrismSpec", "dynamic_edge_probability", "fair_thickness_dynamic",
    "fair_thickness_geometric", "geometric_face_distribution", "solid_angle_of_polygon",
]
