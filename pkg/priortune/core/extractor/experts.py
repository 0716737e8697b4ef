"""
Heterogeneous convolution experts.

Each expert projects its input with a 1×1 convolution ``l1`` and then runs a
three-step ladder ``l_{2k+1} = ZC_{2k+1}(l1 + l_{2k-1})`` whose receptive
field grows 3 → 5 → 7. A channel-grouped 1×1 convolution fuses
``[l1, l3, l5, l7]`` into the expert prior.
"""

from __future__ import annotations

import math
from typing import List, Sequence

import numpy as np

from priortune.core.autodiff import (
    Parameter,
    Tensor,
    asymmetric_conv,
    pad2d,
    stack,
    wavelet_conv,
)
from priortune.core.models import LocalPriors
from priortune.core.nn import Conv2d, DepthwiseSeparableConv, Module
from priortune.utils.enums import ExpertType

LADDER_KERNELS = (3, 5, 7)


class ExpertBranch(Module):
    """Shared base/ladder/fusion plumbing; subclasses define one ladder step."""

    expert_type: ExpertType

    def __init__(self, channels: int, *, rng: np.random.Generator) -> None:
        self.channels = channels
        self.base = Conv2d(channels, channels, 1, rng=rng)
        self.ladder: List[Module] = self._build_ladder(channels, rng)
        self.fusion = Conv2d(4 * channels, channels, 1, rng=rng, groups=channels)

    def _build_ladder(self, channels: int, rng: np.random.Generator) -> List[Module]:
        raise NotImplementedError

    def priors(self, x: Tensor) -> LocalPriors:
        l1 = self.base(x)
        ladder: List[Tensor] = []
        previous = l1
        for step in self.ladder:
            previous = step(l1 + previous)
            ladder.append(previous)

        c, h, w = l1.shape
        # channel-major interleave so each fusion group sees (l1, l3, l5, l7) of one channel
        stacked = stack([l1, *ladder], axis=1).reshape((4 * c, h, w))
        return LocalPriors(base=l1, ladder=ladder, expert=self.fusion(stacked))

    def forward(self, x: Tensor) -> Tensor:
        return self.priors(x).expert


# ---------------- ladder steps ---------------- #


class AsymmetricConv(Module):
    """Depthwise ``k×1`` then ``1×k`` convolution with biases."""

    def __init__(self, channels: int, kernel: int, *, rng: np.random.Generator) -> None:
        std = math.sqrt(2.0 / kernel)
        self.vertical = Parameter(rng.normal(0.0, std, size=(channels, 1, kernel, 1)))
        self.vertical_bias = Parameter(np.zeros(channels))
        self.horizontal = Parameter(rng.normal(0.0, std, size=(channels, 1, 1, kernel)))
        self.horizontal_bias = Parameter(np.zeros(channels))
        self.groups = channels

    def forward(self, x: Tensor) -> Tensor:
        return asymmetric_conv(
            x,
            self.vertical,
            self.horizontal,
            vertical_bias=self.vertical_bias,
            horizontal_bias=self.horizontal_bias,
            groups=self.groups,
        )


class WaveletConv(Module):
    """
    Depthwise convolution in the Haar domain at a fixed decomposition level.

    Maps whose extents are not divisible by ``2**level`` are zero-padded on the
    bottom/right edge and cropped back afterwards.
    """

    def __init__(self, channels: int, level: int, *, rng: np.random.Generator) -> None:
        self.level = level
        std = math.sqrt(2.0 / 9.0)
        self.kernels = [
            Parameter(
                rng.normal(0.0, std, size=((4 if depth == level - 1 else 3) * channels, 1, 3, 3))
            )
            for depth in range(level)
        ]

    def forward(self, x: Tensor) -> Tensor:
        h, w = x.shape[-2:]
        block = 2**self.level
        pad_h, pad_w = -h % block, -w % block
        if pad_h or pad_w:
            padded = pad2d(x, (0, pad_h, 0, pad_w))
            return wavelet_conv(padded, self.kernels)[..., :h, :w]
        return wavelet_conv(x, self.kernels)


# ---------------- expert families ---------------- #


class SeparableExpert(ExpertBranch):
    expert_type = ExpertType.SEPARABLE

    def _build_ladder(self, channels: int, rng: np.random.Generator) -> List[Module]:
        return [DepthwiseSeparableConv(channels, kernel_size=k, rng=rng) for k in LADDER_KERNELS]


class AtrousExpert(ExpertBranch):
    """3×3 depthwise kernels dilated 1/2/3 for receptive fields 3/5/7."""

    expert_type = ExpertType.ATROUS

    def __init__(
        self,
        channels: int,
        *,
        rng: np.random.Generator,
        dilations: Sequence[int] = (1, 2, 3),
    ) -> None:
        self.dilations = tuple(dilations)
        super().__init__(channels, rng=rng)

    def _build_ladder(self, channels: int, rng: np.random.Generator) -> List[Module]:
        return [
            Conv2d(channels, channels, 3, rng=rng, dilation=d, groups=channels)
            for d in self.dilations
        ]


class AsymmetricExpert(ExpertBranch):
    expert_type = ExpertType.ASYMMETRIC

    def _build_ladder(self, channels: int, rng: np.random.Generator) -> List[Module]:
        return [AsymmetricConv(channels, k, rng=rng) for k in LADDER_KERNELS]


class WaveletExpert(ExpertBranch):
    """Haar-domain ladder with decomposition levels 1/1/2."""

    expert_type = ExpertType.WAVELET
    levels = (1, 1, 2)

    def _build_ladder(self, channels: int, rng: np.random.Generator) -> List[Module]:
        return [WaveletConv(channels, level, rng=rng) for level in self.levels]


EXPERT_FAMILIES = {
    ExpertType.SEPARABLE: SeparableExpert,
    ExpertType.ATROUS: AtrousExpert,
    ExpertType.ASYMMETRIC: AsymmetricExpert,
    ExpertType.WAVELET: WaveletExpert,
}


def build_expert(expert_type: int, channels: int, *, rng: np.random.Generator) -> ExpertBranch:
    """
    Raises:
        ValueError: For a type index outside 1..4.
    """
    try:
        family = EXPERT_FAMILIES[ExpertType(expert_type)]
    except ValueError as e:
        raise ValueError(
            f"Unknown expert type {expert_type}; expected one of {[t.value for t in ExpertType]}"
        ) from e
    return family(channels, rng=rng)
