"""Evaluation results"""

from .analysis_results import METRIC_NAMES, MetricReport

__all__ = ["METRIC_NAMES", "MetricReport"]
