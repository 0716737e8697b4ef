"""Prediction, inference and checkpoint evaluation"""

from .predictor import PAD_MULTIPLE, Predictor, evaluate

__all__ = ["PAD_MULTIPLE", "Predictor", "evaluate"]
