from __future__ import annotations

import struct

import numpy as np
import pytest

from priortune.core.network import SegmentationModel
from priortune.core.optim import AdamW
from priortune.core.training import FORMAT_VERSION, load_checkpoint, save_checkpoint
from tests.conftest import tiny_config


@pytest.fixture
def model():
    return SegmentationModel(tiny_config())


def _step_once(model, rng):
    optimizer = AdamW(model.trainable_parameters(), lr=0.01)
    for p in model.trainable_parameters():
        p.grad = rng.normal(size=p.shape)
    optimizer.step()
    return optimizer


def test_round_trip_is_bitwise(tmp_path, model, rng):
    optimizer = _step_once(model, rng)
    sampler = np.random.default_rng(3)
    sampler.integers(10, size=5)
    path = save_checkpoint(
        tmp_path / "c.ptck", model=model, config=model.config, iteration=7, optimizer=optimizer, rng=sampler
    )

    record = load_checkpoint(path)
    assert record.version == FORMAT_VERSION
    assert record.iteration == 7
    assert record.config == model.config
    state = model.state_dict()
    assert set(record.model_tensors) == set(state)
    for name, array in state.items():
        assert record.model_tensors[name].tobytes() == array.tobytes()
    assert set(record.optimizer_tensors) == set(optimizer.state_arrays())

    restored = SegmentationModel(tiny_config())
    other_optimizer = AdamW(restored.trainable_parameters(), lr=0.01)
    other_sampler = np.random.default_rng(99)
    record.restore(restored, other_optimizer, other_sampler)
    assert all(np.array_equal(restored.state_dict()[k], v) for k, v in state.items())
    assert other_optimizer.step_counts() == optimizer.step_counts()
    assert other_sampler.integers(1000) == sampler.integers(1000)


def test_single_precision_storage(tmp_path, model):
    path = save_checkpoint(tmp_path / "c.ptck", model=model, config=model.config, dtype="<f4")
    record = load_checkpoint(path)
    for name, array in model.state_dict().items():
        np.testing.assert_allclose(record.tensors[name], array, rtol=1e-6, atol=1e-7)
        assert record.tensors[name].dtype == np.float64
    with pytest.raises(ValueError, match="Unsupported checkpoint dtype"):
        save_checkpoint(tmp_path / "d.ptck", model=model, config=model.config, dtype="<f2")


def test_other_format_version_is_refused(tmp_path, model):
    path = save_checkpoint(tmp_path / "c.ptck", model=model, config=model.config)
    blob = bytearray(path.read_bytes())
    blob[4:8] = struct.pack("<I", FORMAT_VERSION + 1)
    path.write_bytes(bytes(blob))
    with pytest.raises(ValueError, match=f"format version {FORMAT_VERSION + 1}.*reads version {FORMAT_VERSION}"):
        load_checkpoint(path)


def test_foreign_and_damaged_files(tmp_path, model):
    foreign = tmp_path / "foreign.ptck"
    foreign.write_bytes(b"PK\x03\x04 zip archive")
    with pytest.raises(ValueError, match="not a checkpoint"):
        load_checkpoint(foreign)

    path = save_checkpoint(tmp_path / "c.ptck", model=model, config=model.config)
    blob = path.read_bytes()
    path.write_bytes(blob[:-8])
    with pytest.raises(ValueError, match="truncated"):
        load_checkpoint(path)
    path.write_bytes(blob[:10])
    with pytest.raises(ValueError, match="truncated"):
        load_checkpoint(path)

    with pytest.raises(FileNotFoundError):
        load_checkpoint(tmp_path / "absent.ptck")


def test_loading_into_a_different_geometry_fails(tmp_path, model):
    path = save_checkpoint(tmp_path / "c.ptck", model=model, config=model.config)
    other = SegmentationModel(tiny_config(extractor_dim=8))
    with pytest.raises(ValueError, match="Shape mismatch"):
        load_checkpoint(path).restore(other)
