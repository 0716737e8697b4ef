"""Channel-oriented adaptive scale enhancement of the flattened specific stream."""

from __future__ import annotations

from typing import List, Optional

import numpy as np

from priortune.core.autodiff import Tensor, concat, gelu, sigmoid, softmax
from priortune.core.models import FlattenedSpecific, map_to_tokens
from priortune.core.nn import DepthwiseSeparableConv, LayerNorm, Linear, Module


class ChannelGate(Module):
    """Squeeze-excitation MLP ``D → D/r → D`` over the spatial mean."""

    def __init__(self, channels: int, reduction: int, *, rng: np.random.Generator) -> None:
        hidden = max(1, channels // reduction)
        self.fc1 = Linear(channels, hidden, rng=rng)
        self.fc2 = Linear(hidden, channels, rng=rng)

    def logits(self, x: Tensor) -> Tensor:
        return self.fc2(gelu(self.fc1(x.mean(axis=(1, 2)))))

    def forward(self, x: Tensor) -> Tensor:
        return sigmoid(self.logits(x))


class ChannelAttention(Module):
    """``x ⊗ g`` with ``g = sigmoid(MLP(avgpool(x)))`` broadcast over space."""

    def __init__(self, channels: int, reduction: int, *, rng: np.random.Generator) -> None:
        self.excitation = ChannelGate(channels, reduction, rng=rng)

    def forward(self, x: Tensor) -> Tensor:
        g = self.excitation(x)
        return x * g.reshape((-1, 1, 1))


class ReverseAttention(Module):
    """Complement gate: ``x ⊗ (1 - g)``."""

    def __init__(self, channels: int, reduction: int, *, rng: np.random.Generator) -> None:
        self.excitation = ChannelGate(channels, reduction, rng=rng)

    def forward(self, x: Tensor) -> Tensor:
        g = self.excitation(x)
        return x * (1.0 - g).reshape((-1, 1, 1))


class ScaleEnhancement(Module):
    """
    Split the stream into its scales, refine each with a shared depthwise
    separable convolution and mix a channel-attention and a reverse-attention
    expert with a two-way softmax gate. The result is added back residually.

    Args:
        dim: Token width ``D``.
        reduction: Hidden-width divisor of both attention MLPs.
        rng: Generator for the layer weights.
    """

    def __init__(self, dim: int, reduction: int, *, rng: np.random.Generator) -> None:
        self.norm = LayerNorm(dim)
        self.conv = DepthwiseSeparableConv(dim, kernel_size=3, rng=rng)
        self.channel_attention = ChannelAttention(dim, reduction, rng=rng)
        self.reverse_attention = ReverseAttention(dim, reduction, rng=rng)
        self.gate = Linear(dim, 2, rng=rng, zero_init=True)
        self._last_gate: Optional[np.ndarray] = None

    @property
    def last_gate(self) -> Optional[np.ndarray]:
        return self._last_gate

    def gate_weights(self, stream: FlattenedSpecific) -> Tensor:
        """``[w_ca, w_ra]`` from the token mean of the un-normalized stream."""
        return softmax(self.gate(stream.tokens.mean(axis=0)), axis=0)

    def forward(self, stream: FlattenedSpecific) -> FlattenedSpecific:
        stream.validate()
        weights = self.gate_weights(stream)
        self._last_gate = weights.data.copy()
        normed = stream.with_tokens(self.norm(stream.tokens))

        branches: List[Tensor] = []
        for i in range(len(stream.extents)):
            y = self.conv(normed.level(i))
            mixed = weights[0] * self.channel_attention(y) + weights[1] * self.reverse_attention(y)
            branches.append(map_to_tokens(mixed))

        return stream.with_tokens(stream.tokens + concat(branches, axis=0))
