"""
Convolution family: grouped/dilated 2-D cross-correlation, asymmetric
(k×1 then 1×k) convolution, orthonormal Haar transforms and wavelet-domain
depthwise convolution.
"""

from __future__ import annotations

from typing import Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from priortune.core.autodiff import ops
from priortune.core.autodiff.ops import ArrayLike, as_tensor
from priortune.core.autodiff.tensor import Tensor

Padding = Union[int, str, Tuple[int, int]]

# rows: LL, LH, HL, HH; columns: a=x[2i,2j], b=x[2i,2j+1], c=x[2i+1,2j], d=x[2i+1,2j+1]
HAAR_MATRIX = 0.5 * np.array(
    [
        [1.0, 1.0, 1.0, 1.0],
        [1.0, -1.0, 1.0, -1.0],
        [1.0, 1.0, -1.0, -1.0],
        [1.0, -1.0, -1.0, 1.0],
    ]
)


def same_padding(kernel: int, dilation: int = 1) -> int:
    """Symmetric padding ⌊(k_eff − 1)/2⌋ with k_eff = dilation·(k − 1) + 1."""
    return (dilation * (kernel - 1)) // 2


def _resolve_padding(padding: Padding, kh: int, kw: int, dilation: int) -> Tuple[int, int]:
    if padding == "same":
        return same_padding(kh, dilation), same_padding(kw, dilation)
    if isinstance(padding, str):
        raise ValueError(f"Unknown padding mode '{padding}'")
    if isinstance(padding, int):
        return padding, padding
    return int(padding[0]), int(padding[1])


def conv2d(
    x: ArrayLike,
    weight: ArrayLike,
    bias: Optional[ArrayLike] = None,
    *,
    stride: int = 1,
    dilation: int = 1,
    groups: int = 1,
    padding: Padding = "same",
) -> Tensor:
    """
    2-D cross-correlation over ``[C, H, W]`` or ``[N, C, H, W]`` inputs.

    Args:
        x: Input feature map.
        weight: Kernel of shape ``[C_out, C_in / groups, kh, kw]``.
        bias: Optional ``[C_out]`` bias.
        stride: Positive step between output positions.
        dilation: Positive spacing between kernel taps.
        groups: Number of channel groups; ``groups = C_in`` is depthwise.
        padding: Symmetric zero padding, a ``(ph, pw)`` pair or ``"same"``.

    Returns:
        Tensor of shape ``[C_out, H', W']`` (batched input keeps its batch axis).

    Raises:
        ValueError: On non-positive stride or dilation, or when the kernel
            shape is inconsistent with ``groups`` and the input channels.
    """
    x, weight = as_tensor(x), as_tensor(weight)

    if stride < 1 or dilation < 1:
        raise ValueError(f"stride and dilation must be positive, got {stride} and {dilation}")
    if x.ndim not in (3, 4):
        raise ValueError(f"conv2d expects [C,H,W] or [N,C,H,W] input, got shape {x.shape}")
    if weight.ndim != 4:
        raise ValueError(f"conv2d expects a [C_out,C_in/g,kh,kw] kernel, got shape {weight.shape}")

    batched = x.ndim == 4
    n = x.shape[0] if batched else 1
    c_in, h, w = x.shape[-3:]
    c_out, c_per_group, kh, kw = weight.shape

    if groups < 1 or c_in % groups or c_out % groups or c_per_group * groups != c_in:
        raise ValueError(
            f"Kernel shape {weight.shape} is incompatible with input shape {x.shape} "
            f"and groups={groups}"
        )

    ph, pw = _resolve_padding(padding, kh, kw, dilation)
    eff_h, eff_w = dilation * (kh - 1) + 1, dilation * (kw - 1) + 1
    out_h = (h + 2 * ph - eff_h) // stride + 1
    out_w = (w + 2 * pw - eff_w) // stride + 1
    if out_h < 1 or out_w < 1:
        raise ValueError(
            f"Input spatial extent {(h, w)} is too small for kernel {(kh, kw)} "
            f"with dilation {dilation} and padding {(ph, pw)}"
        )

    o_per_group = c_out // groups
    xg = x.data.reshape(n, groups, c_per_group, h, w)
    padded = np.pad(xg, ((0, 0), (0, 0), (0, 0), (ph, ph), (pw, pw)))
    windows = sliding_window_view(padded, (eff_h, eff_w), axis=(3, 4))
    windows = windows[
        :, :, :, : (out_h - 1) * stride + 1 : stride, : (out_w - 1) * stride + 1 : stride,
        ::dilation, ::dilation,
    ]
    kernel = weight.data.reshape(groups, o_per_group, c_per_group, kh, kw)

    out = np.einsum("ngchwij,gocij->ngohw", windows, kernel, optimize=True)
    out = out.reshape(n, c_out, out_h, out_w)
    if not batched:
        out = out[0]

    parents: Tuple[Tensor, ...] = (x, weight)
    if bias is not None:
        bias = as_tensor(bias)
        out = out + bias.data.reshape(-1, 1, 1)
        parents = parents + (bias,)

    def backward(g, needs):
        gb4 = g.reshape(n, groups, o_per_group, out_h, out_w)
        grads = []

        if needs[0]:
            cols = np.einsum("ngohw,gocij->ngchwij", gb4, kernel, optimize=True)
            gpad = np.zeros_like(padded)
            for i in range(kh):
                for j in range(kw):
                    r0, c0 = i * dilation, j * dilation
                    gpad[
                        :, :, :,
                        r0 : r0 + (out_h - 1) * stride + 1 : stride,
                        c0 : c0 + (out_w - 1) * stride + 1 : stride,
                    ] += cols[..., i, j]
            gx = gpad[:, :, :, ph : ph + h, pw : pw + w].reshape(n, c_in, h, w)
            grads.append(gx if batched else gx[0])
        else:
            grads.append(None)

        if needs[1]:
            gw = np.einsum("ngohw,ngchwij->gocij", gb4, windows, optimize=True)
            grads.append(gw.reshape(weight.shape))
        else:
            grads.append(None)

        if len(parents) == 3:
            grads.append(g.sum(axis=(-2, -1)).reshape(n, c_out).sum(axis=0) if needs[2] else None)
        return grads

    return ops._make("conv2d", out, parents, backward)


def asymmetric_conv(
    x: ArrayLike,
    vertical: ArrayLike,
    horizontal: ArrayLike,
    *,
    vertical_bias: Optional[ArrayLike] = None,
    horizontal_bias: Optional[ArrayLike] = None,
    groups: int = 1,
) -> Tensor:
    """
    A ``k×1`` convolution followed by a ``1×k`` convolution, both same-padded.

    Without biases the composition equals one ``k×k`` convolution whose
    kernel is the outer product of the two 1-D kernels.

    Raises:
        ValueError: If ``k`` is even or the two kernels disagree on ``k``.
    """
    vertical, horizontal = as_tensor(vertical), as_tensor(horizontal)
    k = vertical.shape[2]
    if vertical.shape[3] != 1 or horizontal.shape[2] != 1 or horizontal.shape[3] != k:
        raise ValueError(
            f"Expected kernels of shape [*,*,k,1] and [*,*,1,k], "
            f"got {vertical.shape} and {horizontal.shape}"
        )
    if k % 2 == 0:
        raise ValueError(f"Asymmetric convolution needs an odd kernel size, got {k}")

    mid = conv2d(x, vertical, vertical_bias, groups=groups, padding=(k // 2, 0))
    return conv2d(mid, horizontal, horizontal_bias, groups=groups, padding=(0, k // 2))


# ---------------- Haar wavelets ---------------- #


def haar_dwt(x: ArrayLike) -> Tensor:
    """
    One level of the orthonormal Haar transform over the last two axes.

    ``[..., H, W]`` becomes ``[..., 4, H/2, W/2]`` with sub-bands ordered
    LL, LH, HL, HH.
    """
    x = as_tensor(x)
    h, w = x.shape[-2:]
    if h % 2 or w % 2:
        raise ValueError(f"Haar transform needs even spatial extents, got {(h, w)}")
    lead = x.shape[:-2]
    k = len(lead)

    blocks = x.reshape(lead + (h // 2, 2, w // 2, 2))
    axes = tuple(range(k)) + (k, k + 2, k + 1, k + 3)
    flat = ops.transpose(blocks, axes).reshape((-1, 4))
    bands = ops.einsum("bq,nq->bn", HAAR_MATRIX, flat).reshape((4,) + lead + (h // 2, w // 2))
    return ops.transpose(bands, tuple(range(1, k + 1)) + (0, k + 1, k + 2))


def haar_idwt(bands: ArrayLike) -> Tensor:
    """Inverse of :func:`haar_dwt`: ``[..., 4, h, w]`` → ``[..., 2h, 2w]``."""
    bands = as_tensor(bands)
    if bands.ndim < 3 or bands.shape[-3] != 4:
        raise ValueError(f"Expected [..., 4, h, w] sub-bands, got shape {bands.shape}")
    lead = bands.shape[:-3]
    k = len(lead)
    h, w = bands.shape[-2:]

    moved = ops.transpose(bands, (k,) + tuple(range(k)) + (k + 1, k + 2))
    blocks = ops.einsum("bq,bn->nq", HAAR_MATRIX, moved.reshape((4, -1)))
    blocks = blocks.reshape(lead + (h, w, 2, 2))
    axes = tuple(range(k)) + (k, k + 2, k + 1, k + 3)
    return ops.transpose(blocks, axes).reshape(lead + (2 * h, 2 * w))


def wavelet_conv(x: ArrayLike, kernels: Sequence[ArrayLike]) -> Tensor:
    """
    Depthwise 3×3 convolution in the Haar domain.

    ``kernels[i]`` belongs to decomposition level ``i + 1``. The deepest level
    convolves all four sub-bands (``[4C, 1, 3, 3]``); shallower levels convolve
    the three detail sub-bands (``[3C, 1, 3, 3]``) and take their approximation
    band from the reconstruction of the level below.

    Raises:
        ValueError: If the spatial extents are not divisible by ``2**level``.
    """
    x = as_tensor(x)
    level = len(kernels)
    if level < 1:
        raise ValueError("wavelet_conv needs at least one decomposition level")
    h, w = x.shape[-2:]
    if h % (2**level) or w % (2**level):
        raise ValueError(
            f"Spatial extents {(h, w)} are not divisible by 2**{level} = {2**level}"
        )
    return _wavelet_level(x, [as_tensor(k) for k in kernels], 0)


def _wavelet_level(x: Tensor, kernels: Sequence[Tensor], depth: int) -> Tensor:
    c = x.shape[-3]
    lead = x.shape[:-3]
    bands = haar_dwt(x)
    h, w = bands.shape[-2:]
    kernel = kernels[depth]

    if depth == len(kernels) - 1:
        flat = bands.reshape(lead + (4 * c, h, w))
        filtered = conv2d(flat, kernel, groups=4 * c, padding="same")
        return haar_idwt(filtered.reshape(lead + (c, 4, h, w)))

    approx = _wavelet_level(bands[..., 0, :, :], kernels, depth + 1)
    details = bands[..., 1:, :, :].reshape(lead + (3 * c, h, w))
    details = conv2d(details, kernel, groups=3 * c, padding="same").reshape(lead + (c, 3, h, w))
    approx = approx.reshape(lead + (c, 1, h, w))
    return haar_idwt(ops.concat([approx, details], axis=-3))
