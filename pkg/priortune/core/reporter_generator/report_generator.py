"""Writes evaluation reports as text, JSON or PDF."""

from __future__ import annotations

from datetime import datetime
from pathlib import Path
from typing import Optional

from priortune.core.analysis import MetricReport
from priortune.core.models import ParamReport
from priortune.core.reporter_generator.pdf_generator import PDFReporter


def _timestamped(stem: str, suffix: str) -> str:
    return f"{stem}_{datetime.now().strftime('%Y%m%d_%H%M%S')}{suffix}"


class ReportGenerator:
    """
    Generates reports from evaluation results.

    Args:
        output_dir: Directory for the reports; created if needed. Defaults
            to the current directory.
    """

    def __init__(self, output_dir: Optional[Path | str] = None) -> None:
        self.output_dir = Path(output_dir) if output_dir else Path.cwd()
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def generate_pdf_report(
        self,
        results: MetricReport,
        filename: Optional[str] = None,
        *,
        params: Optional[ParamReport] = None,
        include_details: bool = True,
    ) -> Path:
        output_path = self.output_dir / (filename or _timestamped("evaluation_report", ".pdf"))
        PDFReporter().create_report(
            results, output_path, params=params, include_details=include_details
        )
        return output_path

    def generate_json_report(
        self,
        results: MetricReport,
        filename: Optional[str] = None,
        indent: int = 2,
    ) -> Path:
        """
        Raises:
            TypeError: If the report cannot be serialized.
        """
        output_path = self.output_dir / (filename or _timestamped("evaluation_report", ".json"))
        output_path.write_text(results.to_json(indent=indent), encoding="utf-8")
        return output_path

    def generate_text_report(
        self,
        results: MetricReport,
        filename: Optional[str] = None,
        include_details: bool = True,
    ) -> Path:
        output_path = self.output_dir / (filename or _timestamped("evaluation_report", ".txt"))
        output_path.write_text(self._format_text_report(results, include_details), encoding="utf-8")
        return output_path

    def _format_text_report(self, results: MetricReport, include_details: bool) -> str:
        lines = [
            "SEGMENTATION EVALUATION REPORT",
            "=" * 50,
            f"Generated: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}",
            "",
            results.get_summary_text(),
        ]
        if include_details and results.n_images:
            width = max(len(stem) for stem in results)
            lines += ["", "PER-IMAGE SCORES", "-" * 50]
            lines.append(f"{'image':<{width}}  {'iou':>7}  {'dice':>7}  {'f_w':>7}  {'mae':>7}")
            for stem, m in results.items():
                lines.append(
                    f"{stem:<{width}}  {m.iou:>7.4f}  {m.dice:>7.4f}  {m.fmeasure:>7.4f}  {m.mae:>7.4f}"
                )
        return "\n".join(lines) + "\n"
