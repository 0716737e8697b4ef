"""Segmentation measures and dataset evaluation"""

from .evaluation import evaluate_dataset, list_stems, score_image
from .measures import THRESHOLD, dice_coeff, gaussian_kernel, iou, mae, weighted_fmeasure

__all__ = [
    "evaluate_dataset",
    "list_stems",
    "score_image",
    "THRESHOLD",
    "dice_coeff",
    "gaussian_kernel",
    "iou",
    "mae",
    "weighted_fmeasure",
]
