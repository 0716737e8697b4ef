"""Output models for losses, metrics and parameter accounting."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Dict


# ---------------- Loss ---------------- #


@dataclass(frozen=True, slots=True)
class LossBreakdown:
    """Weighted segmentation loss ``total = alpha·bce + beta·dice``."""

    bce: float
    dice: float
    total: float
    alpha: float = 5.0
    beta: float = 2.0

    def to_dict(self) -> Dict[str, float]:
        return {"bce": self.bce, "dice": self.dice, "total": self.total}


# ---------------- Metrics ---------------- #


@dataclass(slots=True)
class ImageMetrics:
    """Scores of one prediction against its ground truth."""

    stem: str
    iou: float
    dice: float
    fmeasure: float
    mae: float
    empty_gt: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


# ---------------- Parameters ---------------- #


@dataclass(slots=True)
class ParamReport:
    """Parameter counts split by trainability and name prefix."""

    trainable: int
    frozen: int
    by_prefix: Dict[str, Dict[str, int]] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return self.trainable + self.frozen

    @property
    def ratio(self) -> float:
        """Trainable share of all parameters."""
        return self.trainable / self.total if self.total else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "trainable": self.trainable,
            "frozen": self.frozen,
            "total": self.total,
            "ratio": self.ratio,
            "by_prefix": self.by_prefix,
        }

    def get_summary_text(self) -> str:
        lines = [
            "Parameter Summary",
            f"Trainable: {self.trainable:,}",
            f"Frozen: {self.frozen:,}",
            f"Total: {self.total:,}",
            f"Trainable ratio: {self.ratio:.4f}",
        ]
        if self.by_prefix:
            lines.append("\nBy prefix:")
            width = max(len(p) for p in self.by_prefix)
            for prefix, counts in self.by_prefix.items():
                lines.append(
                    f"  {prefix:<{width}}  trainable={counts['trainable']:>10,}  "
                    f"frozen={counts['frozen']:>10,}"
                )
        return "\n".join(lines)
