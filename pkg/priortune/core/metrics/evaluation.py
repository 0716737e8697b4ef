"""Directory-level evaluation of predicted confidence maps."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from priortune.core.analysis import MetricReport
from priortune.core.data.image_io import IMAGE_SUFFIXES, read_grayscale, read_mask
from priortune.core.metrics.measures import THRESHOLD, dice_coeff, iou, mae, weighted_fmeasure
from priortune.core.models import ImageMetrics

logger = logging.getLogger(__name__)


def score_image(stem: str, pred: np.ndarray, gt: np.ndarray, threshold: float = THRESHOLD) -> ImageMetrics:
    return ImageMetrics(
        stem=stem,
        iou=iou(pred, gt, threshold),
        dice=dice_coeff(pred, gt, threshold),
        fmeasure=weighted_fmeasure(pred, gt),
        mae=mae(pred, gt),
        empty_gt=not np.asarray(gt, dtype=bool).any(),
    )


def list_stems(directory: Union[str, Path]) -> Dict[str, Path]:
    """Image files by stem; the lexicographically first suffix wins on clashes."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"Directory not found: {directory}")
    stems: Dict[str, Path] = {}
    for path in sorted(directory.iterdir()):
        if path.is_file() and path.suffix.lower() in IMAGE_SUFFIXES:
            stems.setdefault(path.stem, path)
    return stems


def evaluate_dataset(
    pred_dir: Union[str, Path],
    gt_dir: Union[str, Path],
    *,
    threshold: float = THRESHOLD,
    workers: Optional[int] = None,
) -> MetricReport:
    """
    Score every prediction against the ground truth with the same stem.

    Unmatched stems on either side are skipped and listed in the report.

    Raises:
        FileNotFoundError: If either directory is missing.
        ValueError: If no stem matches, listing every unmatched stem.
    """
    preds = list_stems(pred_dir)
    gts = list_stems(gt_dir)
    matched = sorted(set(preds) & set(gts))
    missing_predictions = sorted(set(gts) - set(preds))
    missing_ground_truth = sorted(set(preds) - set(gts))

    if not matched:
        raise ValueError(
            f"No matching stems between {pred_dir} and {gt_dir}; "
            f"unmatched predictions: {missing_ground_truth}, unmatched ground truth: {missing_predictions}"
        )
    if missing_predictions or missing_ground_truth:
        logger.warning(
            "Skipping %d unmatched stem(s): %s",
            len(missing_predictions) + len(missing_ground_truth),
            ", ".join(missing_predictions + missing_ground_truth),
        )

    def _score(stem: str) -> ImageMetrics:
        return score_image(stem, read_grayscale(preds[stem]), read_mask(gts[stem]), threshold)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        images: List[ImageMetrics] = list(pool.map(_score, matched))

    logger.info("Evaluated %d image(s)", len(images))
    return MetricReport(
        images,
        missing_predictions=missing_predictions,
        missing_ground_truth=missing_ground_truth,
    )
