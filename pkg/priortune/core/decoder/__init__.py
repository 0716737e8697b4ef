"""Mask decoder and segmentation loss"""

from .fpn import FPNDecoder, decode_masks
from .loss import DICE_SMOOTH, SegmentationLoss, bce_loss, dice_loss, total_loss

__all__ = [
    "FPNDecoder",
    "decode_masks",
    "DICE_SMOOTH",
    "SegmentationLoss",
    "bce_loss",
    "dice_loss",
    "total_loss",
]
