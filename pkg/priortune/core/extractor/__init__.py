"""Task-specific mixed local-prior extractor"""

from .experts import (
    AsymmetricExpert,
    AtrousExpert,
    ExpertBranch,
    SeparableExpert,
    WaveletConv,
    WaveletExpert,
    build_expert,
)
from .extractor import ExtractorStage, MixedPriorExtractor, Stem, StageOutput

__all__ = [
    "AsymmetricExpert",
    "AtrousExpert",
    "ExpertBranch",
    "SeparableExpert",
    "WaveletConv",
    "WaveletExpert",
    "build_expert",
    "ExtractorStage",
    "MixedPriorExtractor",
    "Stem",
    "StageOutput",
]
