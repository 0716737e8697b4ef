from __future__ import annotations

import json

import pytest

from priortune.cli import build_parser, main, resolve_config
from priortune.core.data import write_rgb
from priortune.core.training import FINAL_CHECKPOINT

TINY_CFG = """\
image_size = 32
embed_dim = 16
depth = 4
num_heads = 2
extractor_dim = 4
adapter_heads = 2
adapter_points = 2
decoder_dim = 4
iterations = 2
batch_size = 2
checkpoint_every = 1
log_every = 1
"""


@pytest.fixture
def cfg(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY_CFG, encoding="utf-8")
    return path


@pytest.fixture
def trained(tmp_path, dataset_dir, cfg):
    out = tmp_path / "run"
    assert main(["train", str(dataset_dir), str(out), "--config", str(cfg), "--no-eval"]) == 0
    return out


def test_gen_data(tmp_path, capsys):
    out = tmp_path / "data"
    assert main(["gen-data", str(out), "--count", "2", "--image-size", "32", "--shape", "polygon"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["spec"]["shape"] == "polygon" and len(manifest["samples"]) == 2
    assert "Wrote 2 samples" in capsys.readouterr().out


def test_gen_data_rejects_bad_strength(tmp_path):
    assert main(["gen-data", str(tmp_path), "--camouflage", "2"]) == 1


def test_params_text(capsys):
    assert main(["params"]) == 0
    out = capsys.readouterr().out
    assert "Trainable: 209,801" in out
    assert "Closed-form trainable: 209,801" in out


def test_params_json_with_overrides(capsys):
    assert main(["params", "--json", "--stages", "2", "--ablate", "no-case"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["counted"]["trainable"] == data["hand_count"]["trainable"]
    assert data["counted"]["trainable"] < 156_165


def test_params_profile():
    args = build_parser().parse_args(["params", "--profile", "large", "--iterations", "10"])
    config = resolve_config(args)
    assert config.depth == 24 and config.iterations == 10


def test_config_errors_exit_with_one(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("image_size = 100\n")
    assert main(["params", "--config", str(bad)]) == 1
    assert main(["params", "--config", str(tmp_path / "absent.cfg")]) == 1


def test_argument_errors_exit_with_two():
    with pytest.raises(SystemExit) as e:
        main(["params", "--ablate", "no-such"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["params", "--stages", "3"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["eval", "data", "out"])
    assert e.value.code == 2


def test_train_and_resume(tmp_path, dataset_dir, trained):
    assert (trained / FINAL_CHECKPOINT).is_file()
    assert (trained / "checkpoint_000001.ptck").is_file()
    resumed = tmp_path / "resumed"
    args = ["train", str(dataset_dir), str(resumed), "--resume", str(trained / "checkpoint_000001.ptck"), "--no-eval"]
    assert main(args) == 0
    assert (trained / FINAL_CHECKPOINT).read_bytes() == (resumed / FINAL_CHECKPOINT).read_bytes()


def test_train_on_missing_dataset(tmp_path, cfg):
    assert main(["train", str(tmp_path / "nothing"), str(tmp_path / "out"), "--config", str(cfg)]) == 1


def test_eval_with_checkpoint_writes_reports(tmp_path, dataset_dir, trained, capsys):
    out = tmp_path / "eval"
    assert main(["eval", str(dataset_dir), str(out), "--checkpoint", str(trained / FINAL_CHECKPOINT)]) == 0
    assert "Images evaluated: 4" in capsys.readouterr().out
    assert json.loads((out / "evaluation_report.json").read_text())["metadata"]["n_images"] == 4
    assert (out / "evaluation_report.txt").is_file()


def test_eval_predictions_with_missing_stems(tmp_path, dataset_dir, trained):
    first = tmp_path / "first"
    assert main(["eval", str(dataset_dir), str(first), "--checkpoint", str(trained / FINAL_CHECKPOINT)]) == 0
    predictions = first / "predictions"
    (predictions / "0003.png").unlink()

    out = tmp_path / "partial"
    assert main(["eval", str(dataset_dir), str(out), "--predictions", str(predictions)]) == 1
    assert main(["eval", str(dataset_dir), str(out), "--predictions", str(predictions), "--allow-missing"]) == 0
    flags = json.loads((out / "evaluation_report.json").read_text())["flags"]
    assert flags["missing_predictions"] == ["0003"]


def test_eval_pdf(tmp_path, dataset_dir, trained):
    out = tmp_path / "pdf"
    args = ["eval", str(dataset_dir), str(out), "--checkpoint", str(trained / FINAL_CHECKPOINT), "--pdf"]
    assert main(args) == 0
    assert (out / "evaluation_report.pdf").read_bytes().startswith(b"%PDF")


def test_infer(tmp_path, trained, rng, capsys):
    image = write_rgb(tmp_path / "in.png", rng.uniform(size=(3, 48, 32)))
    out = tmp_path / "pred.png"
    assert main(["infer", str(trained / FINAL_CHECKPOINT), str(image), str(out), "--ablate", "no-case"]) == 0
    metadata = json.loads(capsys.readouterr().out)
    assert metadata["padding"]["bottom"] == 16 and metadata["padding"]["right"] == 0
    assert out.is_file() and out.with_suffix(".json").is_file()


def test_infer_missing_checkpoint(tmp_path):
    assert main(["infer", str(tmp_path / "x.ptck"), str(tmp_path / "i.png"), str(tmp_path / "o.png")]) == 1


def test_gradcheck_ops_only(capsys):
    assert main(["gradcheck", "--ops-only"]) == 0
    assert "checks passed" in capsys.readouterr().out
