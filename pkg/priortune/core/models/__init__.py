"""Package for configuration, feature and result models."""

from .config_models import BackboneConfig, ComponentSet, DatasetSpec, TrainConfig, VALID_STAGES
from .feature_models import (
    AdapterState,
    FlattenedSpecific,
    LocalPriors,
    SpecificPyramid,
    UniversalFeature,
    map_to_tokens,
    pixel_centers,
    tokens_to_map,
)
from .output_models import ImageMetrics, LossBreakdown, ParamReport

__all__ = [
    "BackboneConfig",
    "ComponentSet",
    "DatasetSpec",
    "TrainConfig",
    "VALID_STAGES",
    "AdapterState",
    "FlattenedSpecific",
    "LocalPriors",
    "SpecificPyramid",
    "UniversalFeature",
    "map_to_tokens",
    "pixel_centers",
    "tokens_to_map",
    "ImageMetrics",
    "LossBreakdown",
    "ParamReport",
]
