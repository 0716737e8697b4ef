"""PDF evaluation reports using ReportLab."""

from __future__ import annotations

from datetime import datetime
from pathlib import Path
from typing import List, Optional

from reportlab.lib import colors
from reportlab.lib.pagesizes import A4
from reportlab.lib.styles import ParagraphStyle, getSampleStyleSheet
from reportlab.lib.units import inch
from reportlab.platypus import PageBreak, Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle

from priortune.core.analysis import MetricReport
from priortune.core.models import ParamReport

_HEADER_STYLE = [
    ("BACKGROUND", (0, 0), (-1, 0), colors.grey),
    ("TEXTCOLOR", (0, 0), (-1, 0), colors.whitesmoke),
    ("ALIGN", (0, 0), (-1, -1), "LEFT"),
    ("FONTNAME", (0, 0), (-1, 0), "Helvetica-Bold"),
    ("FONTSIZE", (0, 0), (-1, -1), 9),
    ("BOTTOMPADDING", (0, 0), (-1, -1), 6),
    ("BACKGROUND", (0, 1), (-1, -1), colors.beige),
    ("GRID", (0, 0), (-1, -1), 1, colors.black),
]


class PDFReporter:
    """Renders a :class:`MetricReport` (and optionally a parameter summary) to PDF."""

    def __init__(self, page_size=A4) -> None:
        self.page_size = page_size
        self.styles = getSampleStyleSheet()
        self._setup_custom_styles()

    def _setup_custom_styles(self) -> None:
        self.styles.add(ParagraphStyle(
            name="CustomTitle",
            parent=self.styles["Heading1"],
            fontSize=22,
            spaceAfter=30,
            alignment=1,
            textColor=colors.darkblue,
        ))
        self.styles.add(ParagraphStyle(
            name="SectionHeader",
            parent=self.styles["Heading2"],
            fontSize=16,
            spaceAfter=12,
            spaceBefore=20,
            textColor=colors.darkblue,
        ))

    def create_report(
        self,
        results: MetricReport,
        output_path: Path,
        *,
        title: str = "Segmentation Evaluation Report",
        params: Optional[ParamReport] = None,
        include_details: bool = True,
    ) -> None:
        """
        Args:
            results: Scores to render.
            output_path: Destination file.
            title: Heading of the first page.
            params: Parameter accounting of the evaluated model, if known.
            include_details: Add the per-image table.
        """
        doc = SimpleDocTemplate(
            str(output_path),
            pagesize=self.page_size,
            rightMargin=72,
            leftMargin=72,
            topMargin=72,
            bottomMargin=18,
        )

        story: List = []
        self._add_title_page(story, results, title)
        if params is not None:
            self._add_params(story, params)
        if include_details and results.n_images:
            story.append(PageBreak())
            self._add_per_image(story, results)
        doc.build(story)

    def _add_title_page(self, story: list, results: MetricReport, title: str) -> None:
        story.append(Paragraph(title, self.styles["CustomTitle"]))
        story.append(Spacer(1, 0.4 * inch))

        rows = [
            ["Generated:", datetime.now().strftime("%Y-%m-%d %H:%M:%S")],
            ["Images evaluated:", str(results.n_images)],
            ["Mean IoU:", f"{results.iou:.4f}"],
            ["Mean Dice:", f"{results.dice:.4f}"],
            ["Mean weighted F-measure:", f"{results.fmeasure:.4f}"],
            ["Mean MAE:", f"{results.mae:.4f}"],
        ]
        table = Table(rows, colWidths=[2.2 * inch, 3.8 * inch])
        table.setStyle(TableStyle([
            ("BACKGROUND", (0, 0), (0, -1), colors.lightgrey),
            ("FONTNAME", (0, 0), (-1, -1), "Helvetica"),
            ("FONTSIZE", (0, 0), (-1, -1), 10),
            ("BOTTOMPADDING", (0, 0), (-1, -1), 10),
            ("GRID", (0, 0), (-1, -1), 1, colors.black),
        ]))
        story.append(table)
        story.append(Spacer(1, 0.3 * inch))

        flags = []
        if results.empty_gt_stems:
            flags.append(f"Empty ground truth (F-measure scored 0): {', '.join(results.empty_gt_stems)}")
        if results.missing_predictions:
            flags.append(f"Missing predictions: {', '.join(results.missing_predictions)}")
        if results.missing_ground_truth:
            flags.append(f"Missing ground truth: {', '.join(results.missing_ground_truth)}")
        for text in flags:
            story.append(Paragraph(text, self.styles["Normal"]))

    def _add_params(self, story: list, params: ParamReport) -> None:
        story.append(Paragraph("Parameters", self.styles["SectionHeader"]))
        rows = [["Group", "Trainable", "Frozen"]]
        for prefix, counts in params.by_prefix.items():
            rows.append([prefix, f"{counts['trainable']:,}", f"{counts['frozen']:,}"])
        rows.append(["total", f"{params.trainable:,}", f"{params.frozen:,}"])
        table = Table(rows, colWidths=[2.5 * inch, 1.5 * inch, 1.5 * inch])
        table.setStyle(TableStyle(_HEADER_STYLE))
        story.append(table)
        story.append(Paragraph(f"Trainable ratio: {params.ratio:.4f}", self.styles["Normal"]))

    def _add_per_image(self, story: list, results: MetricReport) -> None:
        story.append(Paragraph("Per-image Scores", self.styles["SectionHeader"]))
        rows = [["Image", "IoU", "Dice", "F-measure", "MAE"]]
        for stem, m in results.items():
            rows.append([stem, f"{m.iou:.4f}", f"{m.dice:.4f}", f"{m.fmeasure:.4f}", f"{m.mae:.4f}"])
        table = Table(rows, colWidths=[2 * inch] + [1 * inch] * 4, repeatRows=1)
        table.setStyle(TableStyle(_HEADER_STYLE))
        story.append(table)
