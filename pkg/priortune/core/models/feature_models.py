"""Feature containers flowing between the two encoding branches."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from priortune.core.autodiff import Tensor, concat


def pixel_centers(h: int, w: int) -> np.ndarray:
    """Normalized ``(x, y)`` centres of an ``h×w`` grid in row-major order."""
    ys = (np.arange(h) + 0.5) / h
    xs = (np.arange(w) + 0.5) / w
    gx, gy = np.meshgrid(xs, ys)
    return np.stack([gx.reshape(-1), gy.reshape(-1)], axis=1)


def map_to_tokens(feature: Tensor) -> Tensor:
    """``[D, h, w]`` → ``[h·w, D]``."""
    d, h, w = feature.shape
    return feature.reshape((d, h * w)).transpose(1, 0)


def tokens_to_map(tokens: Tensor, h: int, w: int) -> Tensor:
    """``[h·w, D]`` → ``[D, h, w]``."""
    n, d = tokens.shape
    if n != h * w:
        raise ValueError(f"Cannot fold {n} tokens into a {h}x{w} grid")
    return tokens.transpose(1, 0).reshape((d, h, w))


# ---------------- Task-specific branch ---------------- #


@dataclass(slots=True)
class LocalPriors:
    """Base projection and ladder outputs of one expert family."""

    base: Tensor
    ladder: List[Tensor]
    expert: Tensor

    @property
    def all_levels(self) -> List[Tensor]:
        return [self.base, *self.ladder]


@dataclass(slots=True)
class SpecificPyramid:
    """
    Multi-resolution output of the local-prior extractor.

    ``levels[i]`` is the stage-``i + 1`` map at ``1/2**(i + 2)`` resolution;
    ``projected`` holds the embedding-width copies of levels 2..4.
    """

    stem: Tensor
    levels: List[Tensor]
    projected: List[Tensor]
    gates: List[Optional[np.ndarray]] = field(default_factory=list)

    @property
    def shapes(self) -> List[Tuple[int, ...]]:
        return [level.shape for level in self.levels]


@dataclass(slots=True)
class FlattenedSpecific:
    """
    Token sequence built from the 1/8, 1/16 and 1/32 specific maps.

    ``extents`` records each scale's grid; segments follow one another in that
    order inside ``tokens``.
    """

    tokens: Tensor
    extents: Tuple[Tuple[int, int], ...]

    @classmethod
    def from_maps(cls, maps: Sequence[Tensor]) -> "FlattenedSpecific":
        extents = tuple((m.shape[1], m.shape[2]) for m in maps)
        tokens = concat([map_to_tokens(m) for m in maps], axis=0)
        return cls(tokens=tokens, extents=extents)

    @property
    def sizes(self) -> Tuple[int, ...]:
        return tuple(h * w for h, w in self.extents)

    @property
    def offsets(self) -> Tuple[int, ...]:
        """Start index of each scale segment."""
        return tuple(int(x) for x in np.concatenate([[0], np.cumsum(self.sizes)[:-1]]))

    @property
    def boundaries(self) -> Tuple[int, ...]:
        """End index of each scale segment; the last equals the token count."""
        return tuple(int(x) for x in np.cumsum(self.sizes))

    @property
    def num_tokens(self) -> int:
        return self.tokens.shape[0]

    def validate(self) -> None:
        """
        Raises:
            ValueError: If the recorded scale boundaries disagree with the tokens.
        """
        if self.tokens.ndim != 2:
            raise ValueError(f"Specific tokens must be [N, D], got shape {self.tokens.shape}")
        if not self.extents or self.boundaries[-1] != self.num_tokens:
            raise ValueError(
                f"Scale boundaries {self.boundaries} do not match {self.num_tokens} tokens"
            )

    def segment(self, i: int) -> Tensor:
        start, end = self.offsets[i], self.boundaries[i]
        return self.tokens[start:end]

    def level(self, i: int) -> Tensor:
        """Scale ``i`` folded back into a ``[D, h, w]`` map."""
        h, w = self.extents[i]
        return tokens_to_map(self.segment(i), h, w)

    def unflatten(self) -> List[Tensor]:
        self.validate()
        return [self.level(i) for i in range(len(self.extents))]

    def with_tokens(self, tokens: Tensor) -> "FlattenedSpecific":
        updated = FlattenedSpecific(tokens=tokens, extents=self.extents)
        updated.validate()
        return updated

    def reference_points(self) -> np.ndarray:
        """Each token's own pixel centre within its scale."""
        return np.concatenate([pixel_centers(h, w) for h, w in self.extents], axis=0)


# ---------------- Task-universal branch ---------------- #


@dataclass(slots=True)
class UniversalFeature:
    """Frozen-branch tokens on the constant 1/16 grid."""

    tokens: Tensor
    grid: Tuple[int, int]

    @property
    def num_tokens(self) -> int:
        return self.tokens.shape[0]

    def as_map(self) -> Tensor:
        return tokens_to_map(self.tokens, *self.grid)

    def with_tokens(self, tokens: Tensor) -> "UniversalFeature":
        if tokens.shape[0] != self.num_tokens:
            raise ValueError(
                f"Universal stream expects {self.num_tokens} tokens, got {tokens.shape[0]}"
            )
        return UniversalFeature(tokens=tokens, grid=self.grid)

    def reference_points(self) -> np.ndarray:
        return pixel_centers(*self.grid)


@dataclass(slots=True)
class AdapterState:
    """Running pair of streams between adapter stages."""

    universal: UniversalFeature
    specific: Optional[FlattenedSpecific]
    stage: int = 0
