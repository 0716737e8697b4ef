from __future__ import annotations

import pytest

from priortune.core.verification import CHECKS, GradCheckResult, GradientSuiteReport, run_gradient_suite

COMPOSITE = [name for name, _, composite in CHECKS if composite]


def test_operation_checks_pass():
    report = run_gradient_suite(include_components=False)
    assert len(report.results) == sum(1 for _, _, composite in CHECKS if not composite)
    assert report.passed, report.get_summary_text()


def test_composite_checks_cover_each_network_part():
    assert {"stem", "extractor", "cda", "case", "adapter stage", "decoder", "full model"} <= set(COMPOSITE)


@pytest.mark.parametrize("name", [n for n in COMPOSITE if n != "full model"])
def test_component_checks_pass(name):
    report = run_gradient_suite(only=[name])
    assert [r.name for r in report.results] == [name]
    assert report.passed, report.get_summary_text()


@pytest.mark.slow
def test_full_model_check_passes():
    report = run_gradient_suite(only=["full model"])
    assert report.passed, report.get_summary_text()


def test_suite_is_seeded():
    a = run_gradient_suite(seed=3, only=["softmax", "bilinear_sample"])
    b = run_gradient_suite(seed=3, only=["softmax", "bilinear_sample"])
    assert [r.error for r in a.results] == [r.error for r in b.results]


def test_report_summary_and_failures():
    report = GradientSuiteReport(
        [GradCheckResult(name="ok", error=1e-9, tolerance=1e-4), GradCheckResult(name="bad", error=0.3, tolerance=1e-4)]
    )
    assert not report.passed
    assert [r.name for r in report.failures] == ["bad"]
    text = report.get_summary_text()
    assert "FAIL" in text and "1/2 checks passed" in text
    assert report.to_dict()["checks"][1] == {"name": "bad", "error": 0.3, "tolerance": 1e-4, "passed": False}
