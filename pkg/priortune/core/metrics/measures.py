"""
Binary segmentation measures.

``pred`` is a continuous confidence map in [0, 1]; ``gt`` is a binary mask
(anything above 0.5 counts as foreground).
"""

from __future__ import annotations

from typing import Tuple

import numpy as np
from scipy import ndimage

from priortune.utils.validation import validate_probability_map

THRESHOLD = 0.5
FMEASURE_KERNEL_SIZE = 7
FMEASURE_SIGMA = 5.0
FMEASURE_BETA_SQ = 1.0
_EPS = np.finfo(np.float64).eps


def _prepare(pred: np.ndarray, gt: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise ValueError(f"Prediction shape {pred.shape} does not match ground truth {gt.shape}")
    return pred, gt.astype(np.float64) > 0.5


def _binarize(pred: np.ndarray, threshold: float) -> np.ndarray:
    return pred >= threshold


def iou(pred: np.ndarray, gt: np.ndarray, threshold: float = THRESHOLD) -> float:
    """Intersection over union of the thresholded prediction; 1 when both are empty."""
    pred, gt = _prepare(pred, gt)
    p = _binarize(pred, threshold)
    union = np.logical_or(p, gt).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(p, gt).sum() / union)


def dice_coeff(pred: np.ndarray, gt: np.ndarray, threshold: float = THRESHOLD) -> float:
    """``2|P∩G| / (|P| + |G|)``; 1 when both are empty."""
    pred, gt = _prepare(pred, gt)
    p = _binarize(pred, threshold)
    denom = p.sum() + gt.sum()
    if denom == 0:
        return 1.0
    return float(2.0 * np.logical_and(p, gt).sum() / denom)


def mae(pred: np.ndarray, gt: np.ndarray) -> float:
    pred, gt = _prepare(pred, gt)
    return float(np.abs(pred - gt).mean())


def gaussian_kernel(size: int = FMEASURE_KERNEL_SIZE, sigma: float = FMEASURE_SIGMA) -> np.ndarray:
    """Normalized ``size×size`` Gaussian."""
    half = (size - 1) / 2.0
    y, x = np.mgrid[-half : half + 1, -half : half + 1]
    kernel = np.exp(-(x * x + y * y) / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def weighted_fmeasure(pred: np.ndarray, gt: np.ndarray, beta_sq: float = FMEASURE_BETA_SQ) -> float:
    """
    Weighted F-measure of a continuous prediction.

    Errors are first smoothed along the foreground with a Gaussian dependency
    kernel (keeping the smaller of raw and smoothed error) and background
    errors are amplified with their distance to the nearest foreground pixel.

    Returns:
        The score in [0, 1]; 0 for an empty ground truth.

    Raises:
        ValueError: If ``pred`` lies outside [0, 1] or the shapes differ.
    """
    pred, gt = _prepare(pred, gt)
    if pred.size:
        validate_probability_map("Prediction", float(pred.min()), float(pred.max()))
    if not gt.any():
        return 0.0

    error = np.abs(pred - gt)
    dist, (rows, cols) = ndimage.distance_transform_edt(~gt, return_indices=True)

    # Background pixels take the error of their nearest foreground pixel.
    spread = error.copy()
    bg = ~gt
    spread[bg] = error[rows[bg], cols[bg]]
    smoothed = ndimage.correlate(spread, gaussian_kernel(), mode="constant", cval=0.0)

    dependent = error.copy()
    lower = gt & (smoothed < error)
    dependent[lower] = smoothed[lower]

    importance = np.ones_like(error)
    importance[bg] = 2.0 - np.exp(np.log(0.5) / 5.0 * dist[bg])
    weighted = dependent * importance

    tp = gt.sum() - weighted[gt].sum()
    fp = weighted[bg].sum()
    recall = 1.0 - weighted[gt].mean()
    precision = tp / (_EPS + tp + fp)
    score = (1.0 + beta_sq) * recall * precision / (_EPS + recall + beta_sq * precision)
    return float(np.clip(score, 0.0, 1.0))
