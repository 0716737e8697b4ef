"""Results class for dataset evaluation with easy access methods."""

from __future__ import annotations

import json
from datetime import datetime
from typing import Any, Dict, Iterable, List, Optional

from priortune.core.models import ImageMetrics

METRIC_NAMES = ("iou", "dice", "fmeasure", "mae")


class MetricReport:
    """
    Container for per-image scores and their unweighted means.

    Images are kept in lexicographic stem order so the means are summed in a
    fixed order regardless of how the scores were computed.

    Example:
        >>> report = evaluate_dataset("preds/", "masks/")
        >>> print(f"{report.n_images} images, IoU {report.iou:.3f}")
        >>> for stem in report:
        ...     print(stem, report[stem].dice)
    """

    def __init__(
        self,
        images: Iterable[ImageMetrics],
        *,
        missing_predictions: Optional[List[str]] = None,
        missing_ground_truth: Optional[List[str]] = None,
    ) -> None:
        self._images: Dict[str, ImageMetrics] = {m.stem: m for m in sorted(images, key=lambda m: m.stem)}
        self._missing_predictions = sorted(missing_predictions or [])
        self._missing_ground_truth = sorted(missing_ground_truth or [])

    # ---------------- aggregates ---------------- #

    def _mean(self, name: str) -> float:
        if not self._images:
            return 0.0
        total = 0.0
        for metrics in self._images.values():
            total += getattr(metrics, name)
        return total / len(self._images)

    @property
    def n_images(self) -> int:
        return len(self._images)

    @property
    def iou(self) -> float:
        return self._mean("iou")

    @property
    def dice(self) -> float:
        return self._mean("dice")

    @property
    def fmeasure(self) -> float:
        """Mean weighted F-measure (empty-mask images count as 0)."""
        return self._mean("fmeasure")

    @property
    def mae(self) -> float:
        return self._mean("mae")

    @property
    def means(self) -> Dict[str, float]:
        return {name: self._mean(name) for name in METRIC_NAMES}

    @property
    def empty_gt_stems(self) -> List[str]:
        return [stem for stem, m in self._images.items() if m.empty_gt]

    @property
    def missing_predictions(self) -> List[str]:
        """Ground-truth stems without a prediction."""
        return self._missing_predictions

    @property
    def missing_ground_truth(self) -> List[str]:
        """Prediction stems without a ground truth."""
        return self._missing_ground_truth

    @property
    def has_missing(self) -> bool:
        return bool(self._missing_predictions or self._missing_ground_truth)

    def get_summary_text(self) -> str:
        lines = [
            "Evaluation Summary",
            f"Images evaluated: {self.n_images}",
            f"Mean IoU: {self.iou:.4f}",
            f"Mean Dice: {self.dice:.4f}",
            f"Mean weighted F-measure: {self.fmeasure:.4f}",
            f"Mean MAE: {self.mae:.4f}",
        ]
        if self.empty_gt_stems:
            lines.append(f"Empty ground truth: {', '.join(self.empty_gt_stems)}")
        if self._missing_predictions:
            lines.append(f"Missing predictions: {', '.join(self._missing_predictions)}")
        if self._missing_ground_truth:
            lines.append(f"Missing ground truth: {', '.join(self._missing_ground_truth)}")
        return "\n".join(lines)

    # Dictionary-like access
    def __getitem__(self, stem: str) -> ImageMetrics:
        return self._images[stem]

    def __contains__(self, stem: str) -> bool:
        return stem in self._images

    def __iter__(self):
        return iter(self._images.keys())

    def __len__(self) -> int:
        return len(self._images)

    def items(self):
        return self._images.items()

    def keys(self):
        return self._images.keys()

    def values(self):
        return self._images.values()

    def __str__(self) -> str:
        return f"MetricReport({self.n_images} images, iou={self.iou:.4f})"

    def __repr__(self) -> str:
        return (
            f"MetricReport(n_images={self.n_images}, iou={self.iou}, dice={self.dice}, "
            f"fmeasure={self.fmeasure}, mae={self.mae})"
        )

    # ---------------- JSON Serialization ---------------- #

    def to_dict(self) -> Dict[str, Any]:
        return {
            "metadata": {
                "n_images": self.n_images,
                "evaluation_timestamp": datetime.now().isoformat(),
            },
            "means": self.means,
            "flags": {
                "empty_gt": self.empty_gt_stems,
                "missing_predictions": self._missing_predictions,
                "missing_ground_truth": self._missing_ground_truth,
            },
            "images": {stem: m.to_dict() for stem, m in self._images.items()},
        }

    def to_json(self, indent: int = 2) -> str:
        """
        Raises:
            TypeError: If the report contains values JSON cannot encode.
        """
        try:
            return json.dumps(self.to_dict(), indent=indent, ensure_ascii=False)
        except TypeError as e:
            raise TypeError(f"Failed to serialize results to JSON: {e}") from e
