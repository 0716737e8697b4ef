"""Full segmentation network"""

from .model import ModelOutput, SegmentationModel

__all__ = ["ModelOutput", "SegmentationModel"]
