"""Bi-directional interaction adapter"""

from .attention import CdaWeights, CosineDeformableAttention, cosine_similarity
from .enhancement import ChannelAttention, ChannelGate, ReverseAttention, ScaleEnhancement
from .stage import InteractionAdapter, run_adapter_stage

__all__ = [
    "CdaWeights",
    "CosineDeformableAttention",
    "cosine_similarity",
    "ChannelAttention",
    "ChannelGate",
    "ReverseAttention",
    "ScaleEnhancement",
    "InteractionAdapter",
    "run_adapter_stage",
]
