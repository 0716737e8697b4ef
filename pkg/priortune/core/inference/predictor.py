"""Inference on single images, datasets and checkpoints."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np
from scipy.special import expit

from priortune.core.analysis import MetricReport
from priortune.core.autodiff import no_grad
from priortune.core.data import SegmentationDataset, quantize, read_rgb, write_grayscale
from priortune.core.data.synthetic import MASKS_DIR
from priortune.core.loader import AblationCatalog
from priortune.core.metrics import evaluate_dataset
from priortune.core.models import ComponentSet
from priortune.core.network import SegmentationModel
from priortune.core.training.checkpoint import load_checkpoint

logger = logging.getLogger(__name__)

PAD_MULTIPLE = 32
PREDICTIONS_DIR = "predictions"


class Predictor:
    """
    Gradient-free forward passes returning foreground probabilities.

    Args:
        model: A built (usually restored) model.
        active: Run-time component switches; all built components by default.
    """

    def __init__(self, model: SegmentationModel, active: Optional[ComponentSet] = None) -> None:
        self.model = model
        self.active = active

    @classmethod
    def from_checkpoint(
        cls,
        path: Union[str, Path],
        *,
        ablate: Sequence[str] = (),
        catalog: Optional[AblationCatalog] = None,
    ) -> "Predictor":
        """
        Raises:
            FileNotFoundError: If the checkpoint is missing.
            ValueError: For a version mismatch or an unknown ablation.
        """
        catalog = catalog or AblationCatalog.load()
        record = load_checkpoint(path)
        model = SegmentationModel(record.config, catalog)
        record.restore(model)
        active = model.resolve_active(list(ablate), catalog) if ablate else None
        return cls(model, active)

    def predict(self, image: np.ndarray, *, quantized: bool = False) -> np.ndarray:
        """
        ``[H, W]`` probabilities for a ``[3, H, W]`` image whose extents are
        multiples of 32. ``quantized`` rounds to the 8-bit levels written to disk.
        """
        with no_grad():
            logits = self.model(image, active=self.active).logits.data[0]
        probs = expit(logits)
        if quantized:
            return quantize(probs).astype(np.float64) / 255.0
        return probs

    def infer(self, image_path: Union[str, Path], out_path: Union[str, Path]) -> Dict[str, Any]:
        """
        Write an 8-bit confidence map plus a JSON sidecar recording padding.

        Inputs whose extents are not multiples of 32 are reflect-padded on the
        bottom/right edge and the prediction is cropped back.

        Raises:
            FileNotFoundError: If the image is missing.
            ValueError: If the image cannot be decoded.
        """
        image = read_rgb(image_path)
        _, h, w = image.shape
        pad_h, pad_w = -h % PAD_MULTIPLE, -w % PAD_MULTIPLE
        if pad_h or pad_w:
            image = np.pad(image, ((0, 0), (0, pad_h), (0, pad_w)), mode="reflect")

        probs = self.predict(image)[:h, :w]
        out_path = write_grayscale(out_path, probs)
        metadata = {
            "input": str(image_path),
            "output": str(out_path),
            "size": [h, w],
            "padding": {"bottom": pad_h, "right": pad_w, "mode": "reflect"},
        }
        out_path.with_suffix(".json").write_text(json.dumps(metadata, indent=2), encoding="utf-8")
        logger.info("Wrote %s (padding %d×%d)", out_path, pad_h, pad_w)
        return metadata

    def predict_dataset(self, dataset: SegmentationDataset, out_dir: Union[str, Path]) -> Path:
        out_dir = Path(out_dir)
        for stem, (image, _) in zip(dataset.stems, dataset):
            write_grayscale(out_dir / f"{stem}.png", self.predict(image))
        logger.info("Wrote %d prediction(s) to %s", len(dataset), out_dir)
        return out_dir


def evaluate(
    checkpoint: Union[str, Path],
    dataset_dir: Union[str, Path],
    out_dir: Union[str, Path],
    *,
    ablate: Sequence[str] = (),
    workers: Optional[int] = None,
) -> MetricReport:
    """Predict every dataset image from ``checkpoint`` and score the maps."""
    predictor = Predictor.from_checkpoint(checkpoint, ablate=ablate)
    dataset = SegmentationDataset(dataset_dir)
    pred_dir = predictor.predict_dataset(dataset, Path(out_dir) / PREDICTIONS_DIR)
    return evaluate_dataset(pred_dir, dataset.root / MASKS_DIR, workers=workers)
