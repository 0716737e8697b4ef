"""Validation helpers"""

from __future__ import annotations

from typing import Tuple


def validate_spatial(shape: Tuple[int, ...], multiple: int, what: str = "input") -> Tuple[int, int]:
    """Check that the last two extents are positive multiples of ``multiple``."""
    if len(shape) < 2:
        raise ValueError(f"{what} needs at least two spatial axes, got shape {shape}")

    h, w = int(shape[-2]), int(shape[-1])
    if h <= 0 or w <= 0:
        raise ValueError(f"{what} has empty spatial extents {(h, w)}")

    if h % multiple or w % multiple:
        raise ValueError(
            f"{what} spatial extents {(h, w)} are not divisible by {multiple}"
        )

    return h, w


def validate_probability_map(name: str, low: float, high: float) -> None:
    if not (0.0 <= low and high <= 1.0):
        raise ValueError(f"{name} values must lie in [0, 1], got range [{low}, {high}]")
