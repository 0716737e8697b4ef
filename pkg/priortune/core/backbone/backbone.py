"""Frozen plain transformer encoder split into equal-depth blocks."""

from __future__ import annotations

import logging
import math
from typing import List, Optional

import numpy as np

from priortune.core.autodiff import Tensor, einsum, gelu, softmax
from priortune.core.models import BackboneConfig, UniversalFeature
from priortune.core.nn import LayerNorm, Linear, Module, component_rng
from priortune.utils.validation import validate_spatial

logger = logging.getLogger(__name__)


def sincos_position_encoding(h: int, w: int, dim: int) -> np.ndarray:
    """
    Fixed 2-D sine/cosine encoding of shape ``[h·w, dim]``.

    A quarter of the channels each carries ``sin(y·ω)``, ``cos(y·ω)``,
    ``sin(x·ω)`` and ``cos(x·ω)`` with ``ω_k = 10000^(-k / (dim/4))``.
    """
    if dim % 4:
        raise ValueError(f"Position encoding width must be divisible by 4, got {dim}")
    quarter = dim // 4
    omega = 1.0 / (10000.0 ** (np.arange(quarter) / quarter))
    ys, xs = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    y = ys.reshape(-1, 1) * omega
    x = xs.reshape(-1, 1) * omega
    return np.concatenate([np.sin(y), np.cos(y), np.sin(x), np.cos(x)], axis=1)


class PatchEmbed(Module):
    """Non-overlapping ``p×p`` patches, linearly projected to ``D``."""

    def __init__(self, dim: int, patch_size: int, *, rng: np.random.Generator) -> None:
        self.patch_size = patch_size
        self.proj = Linear(3 * patch_size * patch_size, dim, rng=rng)

    def forward(self, image: Tensor) -> UniversalFeature:
        p = self.patch_size
        c, height, width = image.shape
        validate_spatial(image.shape, p, "image")
        gh, gw = height // p, width // p

        patches = image.reshape((c, gh, p, gw, p)).transpose(1, 3, 0, 2, 4)
        tokens = self.proj(patches.reshape((gh * gw, c * p * p)))
        tokens = tokens + sincos_position_encoding(gh, gw, self.proj.out_features)
        return UniversalFeature(tokens=tokens, grid=(gh, gw))


class Attention(Module):
    def __init__(self, dim: int, num_heads: int, *, rng: np.random.Generator) -> None:
        self.num_heads = num_heads
        self.head_dim = dim // num_heads
        self.qkv = Linear(dim, 3 * dim, rng=rng)
        self.proj = Linear(dim, dim, rng=rng)
        self._last_attention: Optional[np.ndarray] = None

    @property
    def last_attention(self) -> Optional[np.ndarray]:
        """Row-stochastic ``[heads, N, N]`` map of the latest call."""
        return self._last_attention

    def forward(self, x: Tensor) -> Tensor:
        n, d = x.shape
        qkv = self.qkv(x).reshape((n, 3, self.num_heads, self.head_dim)).transpose(1, 2, 0, 3)
        q, k, v = qkv[0], qkv[1], qkv[2]

        scores = einsum("hnd,hmd->hnm", q, k) * (1.0 / math.sqrt(self.head_dim))
        attn = softmax(scores, axis=-1)
        self._last_attention = attn.data.copy()

        out = einsum("hnm,hmd->hnd", attn, v).transpose(1, 0, 2).reshape((n, d))
        return self.proj(out)


class Mlp(Module):
    def __init__(self, dim: int, hidden: int, *, rng: np.random.Generator) -> None:
        self.fc1 = Linear(dim, hidden, rng=rng)
        self.fc2 = Linear(hidden, dim, rng=rng)

    def forward(self, x: Tensor) -> Tensor:
        return self.fc2(gelu(self.fc1(x)))


class EncoderLayer(Module):
    """Pre-norm layer: ``x + attn(norm1(x))`` then ``x + mlp(norm2(x))``."""

    def __init__(self, dim: int, num_heads: int, mlp_ratio: int, *, rng: np.random.Generator) -> None:
        self.norm1 = LayerNorm(dim)
        self.attn = Attention(dim, num_heads, rng=rng)
        self.norm2 = LayerNorm(dim)
        self.mlp = Mlp(dim, mlp_ratio * dim, rng=rng)

    def forward(self, x: Tensor) -> Tensor:
        x = x + self.attn(self.norm1(x))
        return x + self.mlp(self.norm2(x))


class FrozenBackbone(Module):
    """
    Seeded random encoder whose layers are grouped into ``num_blocks`` blocks.

    Args:
        config: Encoder geometry and init seed.
        num_blocks: Number of equal-depth blocks; ``0`` means one block
            spanning every layer.
    """

    def __init__(self, config: BackboneConfig, num_blocks: int = 4) -> None:
        blocks = num_blocks or 1
        if config.depth % blocks:
            raise ValueError(
                f"Backbone depth {config.depth} is not divisible into {blocks} blocks"
            )
        self.config = config
        self.num_blocks = blocks
        self.layers_per_block = config.depth // blocks
        self.patch_embed = PatchEmbed(
            config.embed_dim,
            config.patch_size,
            rng=component_rng(config.seed, "backbone.patch_embed"),
        )
        self.layers = [
            EncoderLayer(
                config.embed_dim,
                config.num_heads,
                config.mlp_ratio,
                rng=component_rng(config.seed, f"backbone.layers.{i}"),
            )
            for i in range(config.depth)
        ]

    # ---------------- public API ---------------- #

    def freeze_all(self) -> None:
        self.freeze()
        logger.debug("Backbone frozen: %d parameters", sum(p.size for p in self.parameters()))

    def embed(self, image: Tensor) -> UniversalFeature:
        return self.patch_embed(image)

    def run_block(self, i: int, x: UniversalFeature) -> UniversalFeature:
        """
        Run the layers of block ``i`` (1-based).

        Raises:
            ValueError: For an out-of-range block index or a token count that
                does not match the stream's grid.
        """
        if not 1 <= i <= self.num_blocks:
            raise ValueError(f"Block index must lie in 1..{self.num_blocks}, got {i}")
        expected = x.grid[0] * x.grid[1]
        if x.tokens.ndim != 2 or x.num_tokens != expected or x.tokens.shape[1] != self.config.embed_dim:
            raise ValueError(
                f"Block {i} expects [{expected}, {self.config.embed_dim}] tokens, "
                f"got {x.tokens.shape}"
            )

        tokens = x.tokens
        start = (i - 1) * self.layers_per_block
        for layer in self.layers[start : start + self.layers_per_block]:
            tokens = layer(tokens)
        return x.with_tokens(tokens)

    def run_all(self, image: Tensor) -> List[UniversalFeature]:
        """All block taps ``f_u^1 .. f_u^{blocks+1}`` without any adapter."""
        taps = [self.embed(image)]
        for i in range(1, self.num_blocks + 1):
            taps.append(self.run_block(i, taps[-1]))
        return taps

    def attention_maps(self) -> List[Optional[np.ndarray]]:
        return [layer.attn.last_attention for layer in self.layers]
