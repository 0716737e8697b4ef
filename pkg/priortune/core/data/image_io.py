"""Reading and writing 8-bit images and masks through Pillow."""

from __future__ import annotations

from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from priortune.utils.enums import ImageFormat

PathLike = Union[str, Path]

IMAGE_SUFFIXES = (".png", ".ppm", ".pgm", ".pnm")
_PIL_FORMATS = {".png": "PNG", ".ppm": "PPM", ".pgm": "PPM", ".pnm": "PPM"}


def image_suffix(fmt: str, *, grayscale: bool) -> str:
    if ImageFormat(fmt) is ImageFormat.PNG:
        return ".png"
    return ".pgm" if grayscale else ".ppm"


def quantize(values: np.ndarray) -> np.ndarray:
    """Map [0, 1] confidences to 8-bit levels, rounding half up."""
    return np.floor(np.clip(values, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def _open(path: PathLike, mode: str) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Image not found: {path}")
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert(mode))
    except (UnidentifiedImageError, OSError) as e:
        raise ValueError(f"Cannot read image {path}: {e}") from e


def read_rgb(path: PathLike) -> np.ndarray:
    """``[3, H, W]`` float64 in [0, 1]."""
    pixels = _open(path, "RGB").astype(np.float64) / 255.0
    return np.ascontiguousarray(pixels.transpose(2, 0, 1))


def read_grayscale(path: PathLike) -> np.ndarray:
    """``[H, W]`` float64 in [0, 1] (8-bit value / 255)."""
    return _open(path, "L").astype(np.float64) / 255.0


def read_mask(path: PathLike) -> np.ndarray:
    """Binary ``[H, W]`` mask; levels above 127 are foreground."""
    return _open(path, "L") > 127


def _save(path: PathLike, pixels: np.ndarray) -> Path:
    path = Path(path)
    fmt = _PIL_FORMATS.get(path.suffix.lower())
    if fmt is None:
        raise ValueError(f"Unsupported image suffix '{path.suffix}', expected one of {IMAGE_SUFFIXES}")
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(pixels).save(path, format=fmt)
    return path


def write_rgb(path: PathLike, image: np.ndarray) -> Path:
    """Write a ``[3, H, W]`` image in [0, 1]."""
    return _save(path, np.ascontiguousarray(quantize(image).transpose(1, 2, 0)))


def write_grayscale(path: PathLike, values: np.ndarray) -> Path:
    """Write an ``[H, W]`` confidence map in [0, 1] as 8-bit grayscale."""
    return _save(path, quantize(values))


def write_mask(path: PathLike, mask: np.ndarray) -> Path:
    return _save(path, np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8))
