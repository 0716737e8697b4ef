"""Utils Module"""

from .enums import Ablation, ExpertType, FusionMode, ImageFormat, ShapeFamily
from .validation import validate_probability_map, validate_spatial

__all__ = [
    "Ablation",
    "ExpertType",
    "FusionMode",
    "ImageFormat",
    "ShapeFamily",
    "validate_probability_map",
    "validate_spatial",
]
