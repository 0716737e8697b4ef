"""Frozen task-universal encoder"""

from .backbone import (
    Attention,
    EncoderLayer,
    FrozenBackbone,
    Mlp,
    PatchEmbed,
    sincos_position_encoding,
)

__all__ = [
    "Attention",
    "EncoderLayer",
    "FrozenBackbone",
    "Mlp",
    "PatchEmbed",
    "sincos_position_encoding",
]
