"""Core Package for prior-guided parameter-efficient fine-tuning"""

from .autodiff import Parameter, Tensor, grad_check, no_grad
from .models import ComponentSet, DatasetSpec, TrainConfig
from .loader import AblationCatalog, load_profile, parse_config
from .extractor import MixedPriorExtractor
from .backbone import FrozenBackbone
from .adapter import CosineDeformableAttention, InteractionAdapter, ScaleEnhancement
from .decoder import FPNDecoder, SegmentationLoss
from .network import SegmentationModel
from .optim import AdamW
from .analysis import MetricReport
from .metrics import dice_coeff, evaluate_dataset, iou, mae, weighted_fmeasure
from .data import SegmentationDataset, gen_synthetic_dataset
from .training import Trainer, count_params, hand_count, load_checkpoint, save_checkpoint
from .inference import Predictor, evaluate
from .verification import run_gradient_suite
from .reporter_generator import PDFReporter, ReportGenerator

__all__ = [
    "Parameter",
    "Tensor",
    "grad_check",
    "no_grad",
    "ComponentSet",
    "DatasetSpec",
    "TrainConfig",
    "AblationCatalog",
    "load_profile",
    "parse_config",
    "MixedPriorExtractor",
    "FrozenBackbone",
    "CosineDeformableAttention",
    "InteractionAdapter",
    "ScaleEnhancement",
    "FPNDecoder",
    "SegmentationLoss",
    "SegmentationModel",
    "AdamW",
    "MetricReport",
    "dice_coeff",
    "evaluate_dataset",
    "iou",
    "mae",
    "weighted_fmeasure",
    "SegmentationDataset",
    "gen_synthetic_dataset",
    "Trainer",
    "count_params",
    "hand_count",
    "load_checkpoint",
    "save_checkpoint",
    "Predictor",
    "evaluate",
    "run_gradient_suite",
    "PDFReporter",
    "ReportGenerator",
]
