"""Text, JSON and PDF evaluation reports"""

from .pdf_generator import PDFReporter
from .report_generator import ReportGenerator

__all__ = ["PDFReporter", "ReportGenerator"]
