from __future__ import annotations

import json
import re

import pytest

from priortune.core.analysis import MetricReport
from priortune.core.models import ImageMetrics, ParamReport
from priortune.core.reporter_generator import ReportGenerator


@pytest.fixture
def report():
    images = [
        ImageMetrics(stem="b", iou=0.5, dice=2 / 3, fmeasure=0.4, mae=0.2),
        ImageMetrics(stem="a", iou=1.0, dice=1.0, fmeasure=0.0, mae=0.0, empty_gt=True),
    ]
    return MetricReport(images, missing_predictions=["c"])


def test_means_and_order(report):
    assert list(report) == ["a", "b"]
    assert report.iou == pytest.approx(0.75)
    assert report.fmeasure == pytest.approx(0.2)
    assert report.means == pytest.approx({"iou": 0.75, "dice": 5 / 6, "fmeasure": 0.2, "mae": 0.1})
    assert report.empty_gt_stems == ["a"]
    assert report.has_missing and "b" in report and len(report) == 2


def test_empty_report_has_zero_means():
    empty = MetricReport([])
    assert empty.n_images == 0 and empty.iou == 0.0 and not empty.has_missing


def test_summary_lists_flags(report):
    text = report.get_summary_text()
    assert "Mean IoU: 0.7500" in text
    assert "Empty ground truth: a" in text
    assert "Missing predictions: c" in text


def test_json_report(tmp_path, report):
    path = ReportGenerator(tmp_path).generate_json_report(report, "r.json")
    data = json.loads(path.read_text())
    assert data["means"]["iou"] == pytest.approx(0.75)
    assert data["flags"] == {"empty_gt": ["a"], "missing_predictions": ["c"], "missing_ground_truth": []}
    assert set(data["images"]) == {"a", "b"}


def test_text_report_has_per_image_rows(tmp_path, report):
    path = ReportGenerator(tmp_path).generate_text_report(report, "r.txt")
    text = path.read_text()
    assert "PER-IMAGE SCORES" in text
    assert re.search(r"^b\s+0\.5000\s+0\.6667\s+0\.4000\s+0\.2000$", text, re.MULTILINE)
    brief = ReportGenerator(tmp_path).generate_text_report(report, "brief.txt", include_details=False)
    assert "PER-IMAGE" not in brief.read_text()


def test_default_names_are_timestamped(tmp_path, report):
    path = ReportGenerator(tmp_path / "nested").generate_json_report(report)
    assert re.fullmatch(r"evaluation_report_\d{8}_\d{6}\.json", path.name)


def test_pdf_report_with_parameters(tmp_path, report):
    params = ParamReport(trainable=10, frozen=90, by_prefix={"decoder": {"trainable": 10, "frozen": 0}})
    path = ReportGenerator(tmp_path).generate_pdf_report(report, "r.pdf", params=params)
    assert path.read_bytes()[:4] == b"%PDF"


def test_param_report_ratio():
    params = ParamReport(trainable=1, frozen=3)
    assert params.total == 4 and params.ratio == 0.25
    assert "Trainable: 1" in params.get_summary_text()
    assert ParamReport(trainable=0, frozen=0).ratio == 0.0
