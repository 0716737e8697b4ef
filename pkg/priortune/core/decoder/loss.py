"""Weighted BCE + Dice segmentation loss."""

from __future__ import annotations

from typing import Tuple

import numpy as np

from priortune.core.autodiff import Tensor, as_tensor, bce_with_logits, sigmoid
from priortune.core.models import LossBreakdown

DICE_SMOOTH = 1.0
DEFAULT_ALPHA = 5.0
DEFAULT_BETA = 2.0


def _check_target(logits: Tensor, gt: np.ndarray) -> np.ndarray:
    gt = np.asarray(gt, dtype=np.float64)
    if gt.shape != logits.shape:
        raise ValueError(f"Mask shape {gt.shape} does not match logits shape {logits.shape}")
    return gt


def bce_loss(logits: Tensor, gt: np.ndarray) -> Tensor:
    """Mean per-pixel binary cross-entropy of ``sigmoid(logits)`` against ``gt``."""
    logits = as_tensor(logits)
    return bce_with_logits(logits, _check_target(logits, gt))


def dice_loss(logits: Tensor, gt: np.ndarray, smooth: float = DICE_SMOOTH) -> Tensor:
    """``1 - (2Σpg + ε) / (Σp + Σg + ε)`` with ``p = sigmoid(logits)``."""
    logits = as_tensor(logits)
    gt = _check_target(logits, gt)
    p = sigmoid(logits)
    intersection = (p * gt).sum()
    return 1.0 - (intersection * 2.0 + smooth) / (p.sum() + (float(gt.sum()) + smooth))


def total_loss(
    bce: float, dice: float, *, alpha: float = DEFAULT_ALPHA, beta: float = DEFAULT_BETA
) -> LossBreakdown:
    return LossBreakdown(
        bce=float(bce),
        dice=float(dice),
        total=float(bce) * alpha + float(dice) * beta,
        alpha=alpha,
        beta=beta,
    )


class SegmentationLoss:
    """
    Differentiable ``alpha·bce + beta·dice`` plus its float breakdown.

    Args:
        alpha: BCE weight.
        beta: Dice weight.
    """

    def __init__(self, alpha: float = DEFAULT_ALPHA, beta: float = DEFAULT_BETA) -> None:
        if alpha <= 0 or beta <= 0:
            raise ValueError(f"Loss weights must be positive, got alpha={alpha}, beta={beta}")
        self.alpha = alpha
        self.beta = beta

    def __call__(self, logits: Tensor, gt: np.ndarray) -> Tuple[Tensor, LossBreakdown]:
        bce = bce_loss(logits, gt)
        dice = dice_loss(logits, gt)
        total = bce * self.alpha + dice * self.beta
        breakdown = total_loss(bce.item(), dice.item(), alpha=self.alpha, beta=self.beta)
        return total, breakdown
