from __future__ import annotations

import numpy as np
import pytest

from priortune.core.data import SegmentationDataset
from priortune.core.training import FINAL_CHECKPOINT, LOG_NAME, Trainer, load_checkpoint, read_loss_log
from tests.conftest import tiny_config


def _weights(trainer):
    return trainer.model.state_dict()


def test_training_is_deterministic(tmp_path, dataset, config):
    a = Trainer(config, dataset, tmp_path / "a")
    b = Trainer(config, dataset, tmp_path / "b")
    ra = a.train(evaluate=False)
    rb = b.train(evaluate=False)
    assert [l.total for l in ra.losses] == [l.total for l in rb.losses]
    wa, wb = _weights(a), _weights(b)
    assert all(wa[k].tobytes() == wb[k].tobytes() for k in wa)
    assert (tmp_path / "a" / FINAL_CHECKPOINT).read_bytes() == (tmp_path / "b" / FINAL_CHECKPOINT).read_bytes()


def test_log_and_checkpoints(tmp_path, dataset, config):
    result = Trainer(config, dataset, tmp_path).train(evaluate=False)
    assert result.iterations == 3
    rows = read_loss_log(tmp_path / LOG_NAME)
    assert [r["iteration"] for r in rows] == [1, 2, 3]
    for row, breakdown in zip(rows, result.losses):
        assert row["total"] == pytest.approx(5.0 * row["bce"] + 2.0 * row["dice"])
        assert row["total"] == breakdown.total
    assert [p.name for p in result.checkpoints] == ["checkpoint_000002.ptck"]
    assert load_checkpoint(result.checkpoint).iteration == 3


def test_resume_matches_an_uninterrupted_run(tmp_path, dataset, config):
    full = Trainer(config, dataset, tmp_path / "full")
    full.train(evaluate=False)

    resumed = Trainer.from_checkpoint(tmp_path / "full" / "checkpoint_000002.ptck", dataset, tmp_path / "resumed")
    assert resumed.iteration == 2
    resumed.train(evaluate=False)

    wf, wr = _weights(full), _weights(resumed)
    assert all(wf[k].tobytes() == wr[k].tobytes() for k in wf)
    assert resumed.optimizer.step_counts() == full.optimizer.step_counts()
    assert [r["iteration"] for r in read_loss_log(tmp_path / "resumed" / LOG_NAME)] == [3]
    assert (tmp_path / "full" / FINAL_CHECKPOINT).read_bytes() == (tmp_path / "resumed" / FINAL_CHECKPOINT).read_bytes()


def test_backbone_stays_frozen_and_side_modules_learn(tmp_path, dataset, config):
    trainer = Trainer(config, dataset, tmp_path)
    before = _weights(trainer)
    trainer.train(evaluate=False)
    after = _weights(trainer)

    for name in before:
        if name.startswith("backbone."):
            assert before[name].tobytes() == after[name].tobytes(), name
    for prefix in ("dmlp.", "adapter.", "decoder."):
        assert any(
            not np.array_equal(before[n], after[n]) for n in before if n.startswith(prefix)
        ), prefix
    assert not np.array_equal(before["adapter.1.cda_in.psi"], after["adapter.1.cda_in.psi"])


def test_zero_iterations_still_writes_a_final_checkpoint(tmp_path, dataset):
    result = Trainer(tiny_config(iterations=0), dataset, tmp_path).train(evaluate=False)
    assert result.iterations == 0 and result.losses == []
    assert load_checkpoint(tmp_path / FINAL_CHECKPOINT).iteration == 0


def test_final_train_iou_is_reported(tmp_path, dataset):
    result = Trainer(tiny_config(iterations=1), dataset, tmp_path).train()
    assert 0.0 <= result.final_iou <= 1.0


def test_non_finite_loss_stops_training(tmp_path, dataset, config):
    trainer = Trainer(config, dataset, tmp_path)
    trainer.model.decoder.head.bias.data[...] = np.nan
    with pytest.raises(RuntimeError, match="Non-finite loss"):
        trainer.train_step()


def test_dataset_and_config_must_agree(tmp_path, dataset):
    with pytest.raises(ValueError, match="does not match image_size"):
        Trainer(tiny_config(image_size=64), dataset, tmp_path)


def test_ablated_run_trains_fewer_parameters(tmp_path, dataset):
    full = Trainer(tiny_config(iterations=1), dataset, tmp_path / "full").train(evaluate=False)
    ablated = Trainer(tiny_config(iterations=1, ablate=("no-case",)), dataset, tmp_path / "ablated").train(
        evaluate=False
    )
    assert ablated.params.trainable < full.params.trainable
    assert ablated.params.frozen == full.params.frozen


def test_missing_dataset(tmp_path):
    with pytest.raises(FileNotFoundError):
        SegmentationDataset(tmp_path / "nothing")
