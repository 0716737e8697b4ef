"""
Task-specific branch: stem, four gated mixed-prior stages, and the
projection/flattening that feeds the adapters.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from priortune.core.autodiff import Tensor, gelu, softmax
from priortune.core.extractor.experts import ExpertBranch, build_expert
from priortune.core.models import FlattenedSpecific, LocalPriors, SpecificPyramid
from priortune.core.nn import Conv2d, DepthwiseSeparableConv, Linear, Module, component_rng
from priortune.utils.enums import FusionMode
from priortune.utils.validation import validate_spatial

logger = logging.getLogger(__name__)

NUM_STAGES = 4


class Stem(Module):
    """Two stride-2 3×3 convolutions with GELU: ``[3, H, W]`` → ``[C, H/4, W/4]``."""

    def __init__(self, channels: int, *, rng: np.random.Generator) -> None:
        self.conv1 = Conv2d(3, channels, 3, rng=rng, stride=2)
        self.conv2 = Conv2d(channels, channels, 3, rng=rng, stride=2)

    def forward(self, image: Tensor) -> Tensor:
        return gelu(self.conv2(gelu(self.conv1(image))))


@dataclass(slots=True)
class StageOutput:
    feature: Tensor
    weights: Optional[Tensor]
    priors: List[LocalPriors]


class ExtractorStage(Module):
    """
    One stage of local-prior extraction with dynamic expert fusion.

    ``f = C1(x + Σ_n w_n · E_n)`` where ``w = softmax(W_g · mean(x) + b_g)``.
    In ``sum`` fusion the experts are added without weights; without experts
    the stage reduces to ``C1(x)``.
    """

    def __init__(
        self,
        channels: int,
        *,
        seed: int,
        prefix: str,
        experts: Sequence[int],
        fusion: str = FusionMode.GATE.value,
        use_experts: bool = True,
        downsample: bool = False,
    ) -> None:
        self.fusion_mode = FusionMode(fusion)
        self.downsample = (
            DepthwiseSeparableConv(
                channels,
                kernel_size=3,
                rng=component_rng(seed, f"{prefix}.downsample"),
                stride=2,
                activate=True,
            )
            if downsample
            else None
        )
        self.experts: List[ExpertBranch] = (
            [
                build_expert(n, channels, rng=component_rng(seed, f"{prefix}.experts.{n}"))
                for n in experts
            ]
            if use_experts
            else []
        )
        self.gate = (
            Linear(channels, len(self.experts), rng=component_rng(seed, f"{prefix}.gate"), zero_init=True)
            if self.experts and self.fusion_mode is FusionMode.GATE
            else None
        )
        self.fuse = Conv2d(channels, channels, 1, rng=component_rng(seed, f"{prefix}.fuse"))

    # ---------------- public API ---------------- #

    def gate_weights(self, x: Tensor) -> Tensor:
        """Softmax expert weights from the spatially pooled stage input."""
        if self.gate is None:
            raise ValueError("This stage has no gate (sum fusion or no experts)")
        return softmax(self.gate(x.mean(axis=(1, 2))), axis=0)

    def extract_local_priors(self, x: Tensor, expert_type: int) -> LocalPriors:
        """
        Raises:
            ValueError: If no expert of ``expert_type`` is configured.
        """
        for expert in self.experts:
            if int(expert.expert_type) == int(expert_type):
                return expert.priors(x)
        raise ValueError(
            f"Unknown expert type {expert_type}; configured: "
            f"{[int(e.expert_type) for e in self.experts]}"
        )

    def fuse_priors(
        self, x: Tensor, experts: Sequence[Tensor], weights: Optional[Tensor] = None
    ) -> Tensor:
        """
        Raises:
            ValueError: If the weight count differs from the expert count.
        """
        if weights is not None and weights.shape[0] != len(experts):
            raise ValueError(
                f"Got {weights.shape[0]} gate weights for {len(experts)} experts"
            )
        acc = x
        for i, prior in enumerate(experts):
            acc = acc + (weights[i] * prior if weights is not None else prior)
        return self.fuse(acc)

    def forward(self, x: Tensor, use_experts: bool = True) -> StageOutput:
        if self.downsample is not None:
            x = self.downsample(x)
        if not use_experts:
            return StageOutput(feature=self.fuse(x), weights=None, priors=[])
        priors = [expert.priors(x) for expert in self.experts]
        weights = self.gate_weights(x) if self.gate is not None else None
        feature = self.fuse_priors(x, [p.expert for p in priors], weights)
        return StageOutput(feature=feature, weights=weights, priors=priors)


class MixedPriorExtractor(Module):
    """
    Four-stage extractor producing maps at 1/4, 1/8, 1/16 and 1/32 resolution.

    Args:
        channels: Constant stage width ``C_s``.
        embed_dim: Width ``D`` of the flattened tokens.
        seed: Initialization seed.
        experts: Expert family indices used in every stage.
        fusion: ``"gate"`` or ``"sum"``.
        use_experts: ``False`` removes every expert (plain ``C1`` stages).
    """

    def __init__(
        self,
        *,
        channels: int,
        embed_dim: int,
        seed: int,
        experts: Sequence[int] = (1, 2, 3, 4),
        fusion: str = FusionMode.GATE.value,
        use_experts: bool = True,
    ) -> None:
        self.channels = channels
        self.embed_dim = embed_dim
        self.stem = Stem(channels, rng=component_rng(seed, "dmlp.stem"))
        self.stages = [
            ExtractorStage(
                channels,
                seed=seed,
                prefix=f"dmlp.stages.{i}",
                experts=experts,
                fusion=fusion,
                use_experts=use_experts,
                downsample=i > 0,
            )
            for i in range(NUM_STAGES)
        ]
        self.projections = [
            Conv2d(channels, embed_dim, 1, rng=component_rng(seed, f"dmlp.projections.{i}"))
            for i in range(NUM_STAGES - 1)
        ]

    def extract_pyramid(self, image: Tensor, use_experts: bool = True) -> SpecificPyramid:
        """``use_experts=False`` bypasses every expert without touching its weights."""
        validate_spatial(image.shape, 32, "image")
        stem = self.stem(image)

        levels: List[Tensor] = []
        gates: List[Optional[np.ndarray]] = []
        x = stem
        for stage in self.stages:
            out = stage(x, use_experts)
            levels.append(out.feature)
            gates.append(out.weights.data.copy() if out.weights is not None else None)
            x = out.feature

        projected = [proj(level) for proj, level in zip(self.projections, levels[1:])]
        return SpecificPyramid(stem=stem, levels=levels, projected=projected, gates=gates)

    def flatten_pyramid(self, pyramid: SpecificPyramid) -> FlattenedSpecific:
        """Tokens of the projected 1/8, 1/16 and 1/32 maps, in that order."""
        return FlattenedSpecific.from_maps(pyramid.projected)

    def forward(
        self, image: Tensor, use_experts: bool = True
    ) -> tuple[SpecificPyramid, FlattenedSpecific]:
        pyramid = self.extract_pyramid(image, use_experts)
        return pyramid, self.flatten_pyramid(pyramid)
