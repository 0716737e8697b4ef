"""Enums Classes"""

from enum import Enum, IntEnum


class ExpertType(IntEnum):
    """Heterogeneous convolution families of the local-prior extractor."""

    SEPARABLE = 1
    ATROUS = 2
    ASYMMETRIC = 3
    WAVELET = 4


class FusionMode(str, Enum):
    """How expert priors are combined inside one extractor stage."""

    GATE = "gate"
    SUM = "sum"


class Ablation(str, Enum):
    """Named component ablations"""

    NO_DMLP = "no-dmlp"
    NO_CDA = "no-cda"
    NO_CASE = "no-case"
    NO_INJECT = "no-inject"
    NO_EXTRACT = "no-extract"
    BASELINE = "baseline"


class ShapeFamily(str, Enum):
    ELLIPSE = "ellipse"
    POLYGON = "polygon"


class ImageFormat(str, Enum):
    """On-disk encoding of generated images and masks."""

    PNG = "png"
    PNM = "pnm"
