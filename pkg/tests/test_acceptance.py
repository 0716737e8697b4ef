"""Desk-profile training runs; minutes each, deselected unless ``-m slow``."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from priortune.core.data import SegmentationDataset, gen_synthetic_dataset
from priortune.core.inference import evaluate
from priortune.core.models import DatasetSpec, TrainConfig
from priortune.core.network import SegmentationModel
from priortune.core.training import FINAL_CHECKPOINT, LOG_NAME, Trainer, load_checkpoint

pytestmark = pytest.mark.slow

MARGIN = 0.02
PINS = Path(__file__).with_name("acceptance_pins.json")


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    root = tmp_path_factory.mktemp("desk_data")
    gen_synthetic_dataset(DatasetSpec(count=200, camouflage=0.5, texture_seed=7), root / "train")
    gen_synthetic_dataset(DatasetSpec(count=50, camouflage=0.5, texture_seed=11), root / "val")
    return root


@pytest.fixture(scope="module")
def runs(data, tmp_path_factory):
    """Trains each variant once and caches ``(result, held-out IoU)``."""
    cache = {}
    dataset = SegmentationDataset(data / "train")

    def run(name, **overrides):
        if name not in cache:
            out = tmp_path_factory.mktemp(name)
            result = Trainer(TrainConfig().with_overrides(**overrides), dataset, out).train()
            held_out = evaluate(result.checkpoint, data / "val", out / "eval").iou
            cache[name] = (result, held_out, out)
        return cache[name]

    return run


def test_desk_profile_learns_the_training_set(runs, data, tmp_path):
    result, _, out = runs("full")
    assert result.iterations == 2000
    assert result.final_iou >= 0.85

    # scoring the written predictions reproduces the in-loop figure
    report = evaluate(out / FINAL_CHECKPOINT, data / "train", tmp_path / "train_eval")
    assert report.iou == pytest.approx(result.final_iou, abs=1e-6)


def _sha256(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_desk_profile_reproduces_its_pinned_run(runs):
    result, _, out = runs("full")
    observed = {
        "final_iou": float(result.final_iou).hex(),
        "loss_log_sha256": _sha256(out / LOG_NAME),
        "final_checkpoint_sha256": _sha256(out / FINAL_CHECKPOINT),
    }
    pinned = json.loads(PINS.read_text())
    if all(value is None for value in pinned.values()):
        # first run on a fresh checkout records the values to commit
        PINS.write_text(json.dumps(observed, indent=2) + "\n")
        pinned = observed
    assert observed == pinned


def test_backbone_is_untouched_after_500_steps(runs):
    _, _, out = runs("full")
    saved = load_checkpoint(out / "checkpoint_000500.ptck").model_tensors
    fresh = SegmentationModel(TrainConfig()).state_dict()
    for name, array in fresh.items():
        if name.startswith("backbone."):
            assert saved[name].tobytes() == array.tobytes(), name
    for prefix in ("dmlp.", "adapter.", "decoder."):
        assert any(
            not np.array_equal(saved[n], fresh[n]) for n in fresh if n.startswith(prefix)
        ), prefix


def test_ablation_ordering(runs):
    full = runs("full")[1]
    no_case = runs("no_case", ablate=("no-case",))[1]
    no_exchange = runs("no_cda_no_case", ablate=("no-cda", "no-case"))[1]
    baseline = runs("baseline", ablate=("baseline",))[1]
    assert full >= no_case + MARGIN
    assert no_case >= no_exchange + MARGIN
    assert no_exchange >= baseline + MARGIN


def test_runtime_cda_bypass_hurts_a_trained_model(runs, data, tmp_path):
    _, held_out, out = runs("full")
    bypassed = evaluate(out / FINAL_CHECKPOINT, data / "val", tmp_path / "no_cda", ablate=["no-cda"]).iou
    assert bypassed < held_out


def test_more_interaction_stages_do_not_hurt(runs):
    sweep = [runs("full" if s == 4 else f"stages_{s}", stages=s) for s in (0, 2, 4)]
    ious = [held_out for _, held_out, _ in sweep]
    trainable = [result.params.trainable for result, _, _ in sweep]
    assert ious == sorted(ious)
    assert trainable[0] < trainable[1] < trainable[2]
