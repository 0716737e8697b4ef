from __future__ import annotations

import json

import numpy as np
import pytest

from priortune.core.data import read_grayscale, write_rgb
from priortune.core.inference import Predictor, evaluate
from priortune.core.models import ComponentSet
from priortune.core.network import SegmentationModel
from priortune.core.training import save_checkpoint
from tests.conftest import tiny_config


@pytest.fixture
def checkpoint(tmp_path, rng):
    model = SegmentationModel(tiny_config())
    # open every residual gate so each component affects the output
    for adapter in model.adapter.values():
        adapter.cda_in.psi.data[...] = rng.normal(size=adapter.cda_in.psi.shape)
        adapter.cda_out.psi.data[...] = rng.normal(size=adapter.cda_out.psi.shape)
    return save_checkpoint(tmp_path / "model.ptck", model=model, config=model.config)


@pytest.fixture
def odd_image(tmp_path, rng):
    return write_rgb(tmp_path / "odd.png", rng.uniform(size=(3, 40, 50)))


def test_infer_pads_and_crops(tmp_path, checkpoint, odd_image):
    predictor = Predictor.from_checkpoint(checkpoint)
    metadata = predictor.infer(odd_image, tmp_path / "out" / "odd.png")
    probs = read_grayscale(tmp_path / "out" / "odd.png")
    assert probs.shape == (40, 50)
    assert metadata["size"] == [40, 50]
    assert metadata["padding"] == {"bottom": 24, "right": 14, "mode": "reflect"}
    sidecar = json.loads((tmp_path / "out" / "odd.json").read_text())
    assert sidecar == metadata


def test_infer_is_reproducible(tmp_path, checkpoint, odd_image):
    Predictor.from_checkpoint(checkpoint).infer(odd_image, tmp_path / "a.png")
    Predictor.from_checkpoint(checkpoint).infer(odd_image, tmp_path / "b.png")
    assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()


def test_aligned_input_is_not_padded(tmp_path, checkpoint, rng):
    image = write_rgb(tmp_path / "even.png", rng.uniform(size=(3, 32, 64)))
    metadata = Predictor.from_checkpoint(checkpoint).infer(image, tmp_path / "even_out.png")
    assert metadata["padding"]["bottom"] == 0 and metadata["padding"]["right"] == 0


def test_runtime_ablation_changes_the_prediction(checkpoint, rng):
    image = rng.uniform(size=(3, 32, 32))
    full = Predictor.from_checkpoint(checkpoint).predict(image)
    no_cda = Predictor.from_checkpoint(checkpoint, ablate=["no-cda"])
    assert no_cda.active == ComponentSet(inject=False, extract=False)
    assert not np.allclose(full, no_cda.predict(image))


def test_runtime_baseline_needs_a_separate_model(checkpoint, rng):
    predictor = Predictor.from_checkpoint(checkpoint, ablate=["baseline"])
    with pytest.raises(ValueError, match="baseline"):
        predictor.predict(rng.uniform(size=(3, 32, 32)))


def test_quantized_prediction_uses_eight_bit_levels(checkpoint, rng):
    probs = Predictor.from_checkpoint(checkpoint).predict(rng.uniform(size=(3, 32, 32)), quantized=True)
    np.testing.assert_allclose(probs * 255.0, np.round(probs * 255.0), atol=1e-9)


def test_evaluate_checkpoint_on_dataset(tmp_path, checkpoint, dataset_dir):
    report = evaluate(checkpoint, dataset_dir, tmp_path / "eval")
    assert report.n_images == 4
    assert not report.has_missing
    assert sorted(p.name for p in (tmp_path / "eval" / "predictions").iterdir()) == [
        "0000.png",
        "0001.png",
        "0002.png",
        "0003.png",
    ]
    for stem in report:
        assert 0.0 <= report[stem].iou <= 1.0


def test_missing_inputs(tmp_path, checkpoint):
    with pytest.raises(FileNotFoundError):
        Predictor.from_checkpoint(tmp_path / "absent.ptck")
    with pytest.raises(FileNotFoundError):
        Predictor.from_checkpoint(checkpoint).infer(tmp_path / "absent.png", tmp_path / "o.png")
    with pytest.raises(ValueError, match="Unknown ablation"):
        Predictor.from_checkpoint(checkpoint, ablate=["no-such"])
