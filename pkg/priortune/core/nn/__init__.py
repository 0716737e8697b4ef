"""Module system and layers"""

from .module import Module, component_rng
from .layers import Linear, Conv2d, LayerNorm, DepthwiseSeparableConv

__all__ = [
    "Module",
    "component_rng",
    "Linear",
    "Conv2d",
    "LayerNorm",
    "DepthwiseSeparableConv",
]
