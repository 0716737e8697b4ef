"""Basic trainable layers."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from priortune.core.autodiff import (
    Parameter,
    Tensor,
    conv2d,
    einsum,
    gelu,
    layer_norm,
)
from priortune.core.autodiff.conv import Padding
from priortune.core.nn.module import Module


class Linear(Module):
    """
    Affine map over the last axis, weight stored ``[out, in]``.

    Args:
        in_features: Input width.
        out_features: Output width.
        rng: Generator for the weight draw.
        bias: Whether to add a bias.
        zero_init: Start with all-zero weights and bias.
        std: Weight standard deviation, ``1/sqrt(in_features)`` by default.
    """

    def __init__(
        self,
        in_features: int,
        out_features: int,
        *,
        rng: np.random.Generator,
        bias: bool = True,
        zero_init: bool = False,
        std: Optional[float] = None,
    ) -> None:
        self.in_features = in_features
        self.out_features = out_features
        if zero_init:
            weight = np.zeros((out_features, in_features))
        else:
            scale = std if std is not None else 1.0 / math.sqrt(in_features)
            weight = rng.normal(0.0, scale, size=(out_features, in_features))
        self.weight = Parameter(weight)
        self.bias = Parameter(np.zeros(out_features)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        lead = x.shape[:-1]
        flat = x.reshape((-1, self.in_features))
        out = einsum("ni,oi->no", flat, self.weight)
        if self.bias is not None:
            out = out + self.bias
        return out.reshape(lead + (self.out_features,))


class Conv2d(Module):
    """Convolution layer over ``[C, H, W]`` maps with He-normal init."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int | tuple[int, int],
        *,
        rng: np.random.Generator,
        stride: int = 1,
        dilation: int = 1,
        groups: int = 1,
        padding: Padding = "same",
        bias: bool = True,
        zero_init: bool = False,
    ) -> None:
        kh, kw = (kernel_size, kernel_size) if isinstance(kernel_size, int) else kernel_size
        if in_channels % groups or out_channels % groups:
            raise ValueError(
                f"Channels ({in_channels} -> {out_channels}) are not divisible by groups={groups}"
            )
        shape = (out_channels, in_channels // groups, kh, kw)
        fan_in = shape[1] * kh * kw

        self.stride = stride
        self.dilation = dilation
        self.groups = groups
        self.padding = padding
        if zero_init:
            self.weight = Parameter(np.zeros(shape))
        else:
            self.weight = Parameter(rng.normal(0.0, math.sqrt(2.0 / fan_in), size=shape))
        self.bias = Parameter(np.zeros(out_channels)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        return conv2d(
            x,
            self.weight,
            self.bias,
            stride=self.stride,
            dilation=self.dilation,
            groups=self.groups,
            padding=self.padding,
        )


class LayerNorm(Module):
    def __init__(self, dim: int) -> None:
        self.weight = Parameter(np.ones(dim))
        self.bias = Parameter(np.zeros(dim))

    def forward(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.weight, self.bias)


class DepthwiseSeparableConv(Module):
    """Depthwise ``k×k`` followed by a pointwise ``1×1`` convolution."""

    def __init__(
        self,
        channels: int,
        out_channels: Optional[int] = None,
        kernel_size: int = 3,
        *,
        rng: np.random.Generator,
        stride: int = 1,
        dilation: int = 1,
        activate: bool = False,
    ) -> None:
        out_channels = out_channels or channels
        self.depthwise = Conv2d(
            channels,
            channels,
            kernel_size,
            rng=rng,
            stride=stride,
            dilation=dilation,
            groups=channels,
        )
        self.pointwise = Conv2d(channels, out_channels, 1, rng=rng)
        self.activate = activate

    def forward(self, x: Tensor) -> Tensor:
        out = self.pointwise(self.depthwise(x))
        return gelu(out) if self.activate else out
