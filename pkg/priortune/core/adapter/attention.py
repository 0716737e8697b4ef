"""
Cosine-aligned deformable attention.

Each query samples ``heads × levels × points`` locations around its
reference point. Two softmax factors weight the samples: predicted
attention weights (normalized per head over levels·points) and a cosine
term comparing the query with every sampled value (normalized over all
samples). Their product aggregates the projected samples; the result is
scaled by a zero-initialized gate vector and added to the raw query.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from priortune.core.autodiff import (
    Parameter,
    Tensor,
    bilinear_sample,
    concat,
    einsum,
    softmax,
    sqrt,
    stack,
)
from priortune.core.models import tokens_to_map
from priortune.core.nn import LayerNorm, Linear, Module

COSINE_EPS = 1e-8


@dataclass(slots=True)
class CdaWeights:
    """Attention factors of the latest call, ``[N_q, heads, levels·points]`` each."""

    attention: np.ndarray
    modulation: np.ndarray


def cosine_similarity(query: Tensor, samples: Tensor, eps: float = COSINE_EPS) -> Tensor:
    """
    Cosine between each query ``[N, D]`` and its samples ``[N, P, D]``.

    Norms are guarded as ``sqrt(Σx² + eps²)``.
    """
    dot = einsum("nd,npd->np", query, samples)
    q_norm = sqrt((query * query).sum(axis=-1) + eps * eps)
    s_norm = sqrt((samples * samples).sum(axis=-1) + eps * eps)
    return dot / (q_norm.reshape((-1, 1)) * s_norm)


class CosineDeformableAttention(Module):
    """
    Args:
        dim: Token width ``D`` of both streams.
        num_heads: Sampling heads.
        num_levels: Value scales sampled per head.
        num_points: Points per head and level.
        value_dim: Width of the projected values, split across heads.
        rng: Generator for the projection weights.
    """

    def __init__(
        self,
        dim: int,
        *,
        num_heads: int,
        num_levels: int,
        num_points: int,
        value_dim: int,
        rng: np.random.Generator,
    ) -> None:
        if value_dim % num_heads:
            raise ValueError(f"value_dim {value_dim} is not divisible by {num_heads} heads")
        self.num_heads = num_heads
        self.num_levels = num_levels
        self.num_points = num_points
        self.value_dim = value_dim
        total = num_heads * num_levels * num_points

        self.query_norm = LayerNorm(dim)
        self.value_norm = LayerNorm(dim)
        self.sampling_offsets = Linear(dim, 2 * total, rng=rng, zero_init=True)
        self.attention_weights = Linear(dim, total, rng=rng, zero_init=True)
        self.cosine_scale = Parameter(np.ones(total))
        self.cosine_bias = Parameter(np.zeros(total))
        self.value_proj = Linear(dim, value_dim, rng=rng)
        self.output_proj = Linear(value_dim, dim, rng=rng)
        self.psi = Parameter(np.zeros(dim))
        self._last_weights: Optional[CdaWeights] = None

    @property
    def num_samples(self) -> int:
        return self.num_heads * self.num_levels * self.num_points

    @property
    def last_weights(self) -> Optional[CdaWeights]:
        return self._last_weights

    # ---------------- public API ---------------- #

    def cosine_alignment(self, query: Tensor, samples: Tensor) -> Tensor:
        """Softmax over ``P`` of the affinely mapped cosine, ``[N_q, P]``."""
        cos = cosine_similarity(query, samples)
        return softmax(cos * self.cosine_scale + self.cosine_bias, axis=-1)

    def sample(
        self,
        query: Tensor,
        reference_points: np.ndarray,
        value_tokens: Tensor,
        extents: Sequence[Tuple[int, int]],
    ) -> Tensor:
        """
        Bilinear samples ``[N_q, heads, levels·points, D]`` of the value stream.

        Offsets are predicted in pixels of each level and normalized by its extents.
        """
        n = query.shape[0]
        h, lv, k = self.num_heads, self.num_levels, self.num_points
        offsets = self.sampling_offsets(query).reshape((n, h, lv, k, 2))

        grids: List[Tensor] = []
        start = 0
        for gh, gw in extents:
            grids.append(tokens_to_map(value_tokens[start : start + gh * gw], gh, gw))
            start += gh * gw

        refs = reference_points[:, None, :]
        heads: List[Tensor] = []
        for head in range(h):
            per_level: List[Tensor] = []
            for level, ((gh, gw), grid) in enumerate(zip(extents, grids)):
                scale = np.array([1.0 / gw, 1.0 / gh])
                points = offsets[:, head, level] * scale + refs
                sampled = bilinear_sample(grid, points.reshape((n * k, 2)))
                per_level.append(sampled.reshape((n, k, grid.shape[0])))
            heads.append(concat(per_level, axis=1))
        return stack(heads, axis=1)

    def forward(
        self,
        query: Tensor,
        reference_points: np.ndarray,
        value_tokens: Tensor,
        extents: Sequence[Tuple[int, int]],
    ) -> Tensor:
        """
        Raises:
            ValueError: If ``extents`` do not account for every value token or
                the level count differs from the configured one.
        """
        expected = sum(gh * gw for gh, gw in extents)
        if expected != value_tokens.shape[0]:
            raise ValueError(
                f"Value extents {tuple(extents)} cover {expected} tokens, "
                f"got {value_tokens.shape[0]}"
            )
        if len(extents) != self.num_levels:
            raise ValueError(f"Expected {self.num_levels} value levels, got {len(extents)}")
        if reference_points.shape != (query.shape[0], 2):
            raise ValueError(
                f"Reference points {reference_points.shape} do not match {query.shape[0]} queries"
            )

        n, d = query.shape
        h, per_head = self.num_heads, self.num_levels * self.num_points
        q = self.query_norm(query)
        v = self.value_norm(value_tokens)

        samples = self.sample(q, reference_points, v, extents)

        attention = softmax(self.attention_weights(q).reshape((n, h, per_head)), axis=-1)
        modulation = self.cosine_alignment(q, samples.reshape((n, h * per_head, d)))
        modulation = modulation.reshape((n, h, per_head))
        weights = attention * modulation
        self._last_weights = CdaWeights(attention.data.copy(), modulation.data.copy())

        head_dim = self.value_dim // h
        w_v = self.value_proj.weight.reshape((h, head_dim, d))
        b_v = self.value_proj.bias.reshape((1, h, 1, head_dim))
        values = einsum("nhpd,hed->nhpe", samples, w_v) + b_v
        pooled = einsum("nhp,nhpe->nhe", weights, values).reshape((n, self.value_dim))

        return query + self.output_proj(pooled) * self.psi
