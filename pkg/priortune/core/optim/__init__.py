"""Optimizers"""

from .adamw import AdamW, AdamWState, MomentState, adamw_step

__all__ = ["AdamW", "AdamWState", "MomentState", "adamw_step"]
