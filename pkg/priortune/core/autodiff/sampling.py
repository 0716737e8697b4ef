"""Bilinear point sampling and bilinear resizing."""

from __future__ import annotations

from typing import Tuple

import numpy as np

from priortune.core.autodiff import ops
from priortune.core.autodiff.ops import ArrayLike, as_tensor
from priortune.core.autodiff.tensor import Tensor


def _axis_coords(coord: np.ndarray, extent: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Lower index, upper index, fraction and in-range mask along one axis."""
    pixel = coord * extent - 0.5
    inside = (pixel >= 0.0) & (pixel <= extent - 1)
    pixel = np.clip(pixel, 0.0, extent - 1)
    if extent == 1:
        zeros = np.zeros(pixel.shape, dtype=np.intp)
        return zeros, zeros, np.zeros_like(pixel), np.zeros_like(inside)
    lower = np.minimum(np.floor(pixel).astype(np.intp), extent - 2)
    return lower, lower + 1, pixel - lower, inside


def bilinear_sample(grid: ArrayLike, points: ArrayLike) -> Tensor:
    """
    Sample a ``[C, H, W]`` grid at ``[N, 2]`` normalized ``(x, y)`` points.

    Pixel ``(i, j)`` has its centre at ``((j + 0.5) / W, (i + 0.5) / H)``.
    Points beyond the outermost centres are clamped to the border and get a
    zero gradient along the clamped axis.

    Returns:
        Tensor of shape ``[N, C]``.
    """
    grid, points = as_tensor(grid), as_tensor(points)
    if grid.ndim != 3:
        raise ValueError(f"bilinear_sample expects a [C,H,W] grid, got shape {grid.shape}")
    if points.ndim != 2 or points.shape[1] != 2:
        raise ValueError(f"bilinear_sample expects [N,2] points, got shape {points.shape}")

    c, h, w = grid.shape
    n = points.shape[0]
    if n == 0:
        return Tensor(np.zeros((0, c)))

    x0, x1, fx, in_x = _axis_coords(points.data[:, 0], w)
    y0, y1, fy, in_y = _axis_coords(points.data[:, 1], h)

    g = grid.data
    v00, v01 = g[:, y0, x0].T, g[:, y0, x1].T
    v10, v11 = g[:, y1, x0].T, g[:, y1, x1].T
    wx, wy = fx[:, None], fy[:, None]
    out = (1 - wy) * ((1 - wx) * v00 + wx * v01) + wy * ((1 - wx) * v10 + wx * v11)

    def backward(gout, needs):
        g_grid = g_points = None
        if needs[0]:
            flat = np.zeros((h * w, c))
            for rows, cols, weight in (
                (y0, x0, (1 - fy) * (1 - fx)),
                (y0, x1, (1 - fy) * fx),
                (y1, x0, fy * (1 - fx)),
                (y1, x1, fy * fx),
            ):
                np.add.at(flat, rows * w + cols, gout * weight[:, None])
            g_grid = flat.T.reshape(c, h, w)
        if needs[1]:
            d_fx = (1 - wy) * (v01 - v00) + wy * (v11 - v10)
            d_fy = (1 - wx) * (v10 - v00) + wx * (v11 - v01)
            g_points = np.stack(
                [
                    (gout * d_fx).sum(axis=1) * w * in_x,
                    (gout * d_fy).sum(axis=1) * h * in_y,
                ],
                axis=1,
            )
        return g_grid, g_points

    return ops._make("bilinear_sample", out, (grid, points), backward)


def resize_matrix(src: int, dst: int) -> np.ndarray:
    """Half-pixel bilinear interpolation matrix of shape ``[dst, src]``."""
    matrix = np.zeros((dst, src))
    scale = src / dst
    for i in range(dst):
        pos = max((i + 0.5) * scale - 0.5, 0.0)
        lo = min(int(np.floor(pos)), src - 1)
        hi = min(lo + 1, src - 1)
        frac = pos - lo
        matrix[i, lo] += 1.0 - frac
        matrix[i, hi] += frac
    return matrix


def upsample_bilinear(x: ArrayLike, size: Tuple[int, int]) -> Tensor:
    """Resize a ``[C, h, w]`` map to ``[C, H, W]`` (half-pixel centres)."""
    x = as_tensor(x)
    _, h, w = x.shape
    out_h, out_w = size
    rows = ops.einsum("Hh,chw->cHw", resize_matrix(h, out_h), x)
    return ops.einsum("cHw,Ww->cHW", rows, resize_matrix(w, out_w))
