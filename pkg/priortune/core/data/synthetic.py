"""
Synthetic camouflage segmentation data.

Each image is a sum of oriented sinusoids; one convex shape is filled with
the same texture shifted in phase by ``π·(1 - camouflage)``, so strength 1
hides the object completely and strength 0 gives the largest contrast.
Every sample is a pure function of ``(texture_seed, index)``.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np

from priortune.core.data.image_io import image_suffix, write_mask, write_rgb
from priortune.core.models import DatasetSpec, pixel_centers
from priortune.utils.enums import ShapeFamily

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
IMAGES_DIR = "images"
MASKS_DIR = "masks"
NUM_WAVES = 4


@dataclass(slots=True)
class Sample:
    image: np.ndarray
    mask: np.ndarray
    area: float
    perimeter: float


# ---------------- texture ---------------- #


@dataclass(frozen=True, slots=True)
class Texture:
    frequency: np.ndarray
    orientation: np.ndarray
    phase: np.ndarray
    amplitude: np.ndarray
    gains: np.ndarray

    @classmethod
    def draw(cls, rng: np.random.Generator) -> "Texture":
        return cls(
            frequency=rng.uniform(1.5, 6.0, NUM_WAVES),
            orientation=rng.uniform(0.0, math.pi, NUM_WAVES),
            phase=rng.uniform(0.0, 2.0 * math.pi, NUM_WAVES),
            amplitude=rng.uniform(0.5, 1.0, NUM_WAVES),
            gains=rng.uniform(0.3, 1.0, (NUM_WAVES, 3)),
        )

    def render(self, size: int, shift: float = 0.0) -> np.ndarray:
        """``[3, size, size]`` texture in [0, 1]."""
        centers = pixel_centers(size, size)
        x, y = centers[:, 0], centers[:, 1]
        direction = np.outer(x, np.cos(self.orientation)) + np.outer(y, np.sin(self.orientation))
        waves = np.sin(2.0 * math.pi * self.frequency * direction + self.phase + shift)
        rgb = (waves * self.amplitude) @ self.gains
        rgb = 0.5 + 0.5 * rgb / self.amplitude.sum()
        return np.ascontiguousarray(rgb.T.reshape(3, size, size))


# ---------------- shapes ---------------- #


def _ellipse(rng: np.random.Generator, size: int) -> Tuple[np.ndarray, float, float]:
    cx, cy = rng.uniform(0.35, 0.65, 2) * size
    a, b = rng.uniform(0.12, 0.28, 2) * size
    rho = rng.uniform(0.0, math.pi)

    pts = pixel_centers(size, size) * size
    dx, dy = pts[:, 0] - cx, pts[:, 1] - cy
    u = (dx * math.cos(rho) + dy * math.sin(rho)) / a
    v = (-dx * math.sin(rho) + dy * math.cos(rho)) / b
    mask = (u * u + v * v <= 1.0).reshape(size, size)

    h = ((a - b) / (a + b)) ** 2
    perimeter = math.pi * (a + b) * (1.0 + 3.0 * h / (10.0 + math.sqrt(4.0 - 3.0 * h)))
    return mask, math.pi * a * b, perimeter


def _polygon(rng: np.random.Generator, size: int) -> Tuple[np.ndarray, float, float]:
    # Vertices on a circle in angular order give a convex polygon.
    n = int(rng.integers(5, 9))
    cx, cy = rng.uniform(0.35, 0.65, 2) * size
    radius = rng.uniform(0.15, 0.3) * size
    angles = np.sort(rng.uniform(0.0, 2.0 * math.pi, n))
    vx = cx + radius * np.cos(angles)
    vy = cy + radius * np.sin(angles)

    pts = pixel_centers(size, size) * size
    inside = np.ones(len(pts), dtype=bool)
    for k in range(n):
        ex, ey = vx[(k + 1) % n] - vx[k], vy[(k + 1) % n] - vy[k]
        inside &= ex * (pts[:, 1] - vy[k]) - ey * (pts[:, 0] - vx[k]) >= 0.0
    mask = inside.reshape(size, size)

    area = 0.5 * abs(float(np.dot(vx, np.roll(vy, -1)) - np.dot(vy, np.roll(vx, -1))))
    perimeter = float(np.hypot(np.roll(vx, -1) - vx, np.roll(vy, -1) - vy).sum())
    return mask, area, perimeter


_SHAPES = {ShapeFamily.ELLIPSE: _ellipse, ShapeFamily.POLYGON: _polygon}


# ---------------- generation ---------------- #


def render_sample(spec: DatasetSpec, index: int) -> Sample:
    rng = np.random.default_rng([spec.texture_seed, index])
    texture = Texture.draw(rng)
    mask, area, perimeter = _SHAPES[ShapeFamily(spec.shape)](rng, spec.image_size)

    background = texture.render(spec.image_size)
    foreground = texture.render(spec.image_size, shift=math.pi * (1.0 - spec.camouflage))
    image = np.where(mask[None], foreground, background)
    return Sample(image=image, mask=mask, area=area, perimeter=perimeter)


def gen_synthetic_dataset(spec: DatasetSpec, out_dir: Union[str, Path]) -> Dict[str, Any]:
    """
    Write ``images/``, ``masks/`` and ``manifest.json`` under ``out_dir``.

    Returns:
        The manifest that was written.

    Raises:
        ValueError: For an invalid spec.
        OSError: If ``out_dir`` cannot be written.
    """
    spec.validate()
    root = Path(out_dir)
    image_ext = image_suffix(spec.image_format, grayscale=False)
    mask_ext = image_suffix(spec.image_format, grayscale=True)

    samples: List[Dict[str, Any]] = []
    for i in range(spec.count):
        stem = f"{i:04d}"
        sample = render_sample(spec, i)
        image_path = write_rgb(root / IMAGES_DIR / f"{stem}{image_ext}", sample.image)
        mask_path = write_mask(root / MASKS_DIR / f"{stem}{mask_ext}", sample.mask)
        samples.append(
            {
                "stem": stem,
                "image": image_path.relative_to(root).as_posix(),
                "mask": mask_path.relative_to(root).as_posix(),
                "mask_pixels": int(sample.mask.sum()),
                "area": sample.area,
                "perimeter": sample.perimeter,
            }
        )

    manifest = {"spec": spec.to_dict(), "samples": samples}
    (root / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    logger.info("Generated %d samples in %s", spec.count, root)
    return manifest
