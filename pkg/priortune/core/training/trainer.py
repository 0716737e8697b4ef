"""Deterministic single-threaded training loop."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
from tqdm import tqdm

from priortune.core.data import SegmentationDataset
from priortune.core.decoder import SegmentationLoss, total_loss
from priortune.core.loader import AblationCatalog
from priortune.core.models import LossBreakdown, ParamReport, TrainConfig
from priortune.core.network import SegmentationModel
from priortune.core.optim import AdamW
from priortune.core.training.checkpoint import load_checkpoint, save_checkpoint
from priortune.core.training.params import count_params

logger = logging.getLogger(__name__)

LOG_NAME = "train_log.jsonl"
FINAL_CHECKPOINT = "checkpoint_final.ptck"


def checkpoint_name(iteration: int) -> str:
    return f"checkpoint_{iteration:06d}.ptck"


@dataclass(slots=True)
class TrainResult:
    iterations: int
    losses: List[LossBreakdown]
    params: ParamReport
    checkpoint: Path
    final_iou: Optional[float] = None
    checkpoints: List[Path] = field(default_factory=list)


class Trainer:
    """
    Trains the adapter-side parameters of a :class:`SegmentationModel`.

    Every iteration draws ``batch_size`` distinct images from the generator
    seeded with ``config.seed``, accumulates per-image gradients scaled by
    ``1 / batch_size`` and takes one AdamW step.

    Args:
        config: Validated configuration.
        dataset: Training images and masks.
        out_dir: Receives ``train_log.jsonl`` and checkpoints.
        catalog: Ablation catalog; the shipped one when omitted.
        show_progress: Show a tqdm progress bar.
    """

    def __init__(
        self,
        config: TrainConfig,
        dataset: SegmentationDataset,
        out_dir: Union[str, Path],
        *,
        catalog: Optional[AblationCatalog] = None,
        show_progress: bool = False,
    ) -> None:
        config.validate()
        if len(dataset) == 0:
            raise ValueError(f"Dataset at {dataset.root} is empty")
        if dataset.image_size and dataset.image_size != config.image_size:
            raise ValueError(
                f"Dataset image size {dataset.image_size} does not match image_size={config.image_size}"
            )

        self.config = config
        self.dataset = dataset
        self.out_dir = Path(out_dir)
        self.show_progress = show_progress
        self.model = SegmentationModel(config, catalog)
        self.optimizer = AdamW(
            self.model.trainable_parameters(),
            lr=config.lr,
            betas=(config.beta1, config.beta2),
            eps=config.eps,
            weight_decay=config.weight_decay,
        )
        self.loss_fn = SegmentationLoss(config.alpha, config.beta)
        self.rng = np.random.default_rng(config.seed)
        self.iteration = 0

    @classmethod
    def from_checkpoint(
        cls,
        path: Union[str, Path],
        dataset: SegmentationDataset,
        out_dir: Union[str, Path],
        **kwargs,
    ) -> "Trainer":
        """Rebuild a trainer mid-run: weights, moments, sampler state and iteration."""
        record = load_checkpoint(path)
        trainer = cls(record.config, dataset, out_dir, **kwargs)
        record.restore(trainer.model, trainer.optimizer, trainer.rng)
        trainer.iteration = record.iteration
        logger.info("Resumed from %s at iteration %d", path, record.iteration)
        return trainer

    # ---------------- steps ---------------- #

    def train_step(self) -> LossBreakdown:
        """
        Raises:
            RuntimeError: If the loss is not finite.
        """
        batch = min(self.config.batch_size, len(self.dataset))
        indices = self.rng.choice(len(self.dataset), size=batch, replace=False)
        scale = 1.0 / batch

        self.optimizer.zero_grad()
        bce = dice = 0.0
        for i in indices:
            image, mask = self.dataset[int(i)]
            output = self.model(image)
            loss, breakdown = self.loss_fn(output.logits, mask[None])
            if not math.isfinite(breakdown.total):
                raise RuntimeError(
                    f"Non-finite loss {breakdown.total} at iteration {self.iteration + 1}"
                )
            (loss * scale).backward()
            bce += breakdown.bce * scale
            dice += breakdown.dice * scale

        self.optimizer.step()
        self.iteration += 1
        return total_loss(bce, dice, alpha=self.config.alpha, beta=self.config.beta)

    def save(self, name: Optional[str] = None) -> Path:
        return save_checkpoint(
            self.out_dir / (name or checkpoint_name(self.iteration)),
            model=self.model,
            config=self.config,
            iteration=self.iteration,
            optimizer=self.optimizer,
            rng=self.rng,
        )

    # ---------------- loop ---------------- #

    def train(self, iterations: Optional[int] = None, *, evaluate: bool = True) -> TrainResult:
        """
        Run until ``iterations`` (default ``config.iterations``) steps in total.
        """
        target = self.config.iterations if iterations is None else iterations
        params = count_params(self.model)
        logger.info(
            "Training from iteration %d to %d: %s trainable / %s frozen parameters",
            self.iteration,
            target,
            f"{params.trainable:,}",
            f"{params.frozen:,}",
        )

        self.out_dir.mkdir(parents=True, exist_ok=True)
        losses: List[LossBreakdown] = []
        checkpoints: List[Path] = []
        mode = "a" if self.iteration else "w"
        with (self.out_dir / LOG_NAME).open(mode, encoding="utf-8") as log:
            for _ in tqdm(
                range(self.iteration, target),
                desc="train",
                disable=not self.show_progress,
                initial=self.iteration,
                total=target,
            ):
                breakdown = self.train_step()
                losses.append(breakdown)
                log.write(json.dumps({"iteration": self.iteration, **breakdown.to_dict()}) + "\n")

                if self.iteration % self.config.log_every == 0:
                    logger.info(
                        "iter %d: bce=%.5f dice=%.5f total=%.5f",
                        self.iteration,
                        breakdown.bce,
                        breakdown.dice,
                        breakdown.total,
                    )
                if self.iteration % self.config.checkpoint_every == 0:
                    checkpoints.append(self.save())

        final = self.save(FINAL_CHECKPOINT)
        final_iou = self.train_iou() if evaluate else None
        if final_iou is not None:
            logger.info("Final train-set mean IoU: %.6f", final_iou)
        return TrainResult(
            iterations=self.iteration,
            losses=losses,
            params=params,
            checkpoint=final,
            final_iou=final_iou,
            checkpoints=checkpoints,
        )

    def train_iou(self) -> float:
        """Mean IoU over the training set on 8-bit quantized predictions."""
        from priortune.core.inference import Predictor
        from priortune.core.metrics import iou

        predictor = Predictor(self.model)
        scores = [iou(predictor.predict(image, quantized=True), mask) for image, mask in self.dataset]
        return float(np.mean(scores))


def read_loss_log(path: Union[str, Path]) -> List[dict]:
    with Path(path).open("r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]
