"""Synthetic data generation and image IO"""

from .dataset import SegmentationDataset
from .image_io import (
    IMAGE_SUFFIXES,
    quantize,
    read_grayscale,
    read_mask,
    read_rgb,
    write_grayscale,
    write_mask,
    write_rgb,
)
from .synthetic import MANIFEST_NAME, Sample, Texture, gen_synthetic_dataset, render_sample

__all__ = [
    "SegmentationDataset",
    "IMAGE_SUFFIXES",
    "quantize",
    "read_grayscale",
    "read_mask",
    "read_rgb",
    "write_grayscale",
    "write_mask",
    "write_rgb",
    "MANIFEST_NAME",
    "Sample",
    "Texture",
    "gen_synthetic_dataset",
    "render_sample",
]
