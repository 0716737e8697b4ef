"""
Top-down convolutional mask decoder.

The flattened specific stream is folded back into its 1/8, 1/16 and 1/32
maps, the final universal grid joins the 1/16 level, and a feature pyramid
merges everything down to the 1/4 stage-one map before a single-channel
head and bilinear upsampling to the input resolution.
"""

from __future__ import annotations

from typing import Optional, Tuple

from priortune.core.autodiff import Tensor, gelu, upsample_bilinear
from priortune.core.models import FlattenedSpecific, UniversalFeature
from priortune.core.nn import Conv2d, Module, component_rng


class FPNDecoder(Module):
    """
    Args:
        embed_dim: Width ``D`` of both token streams.
        extractor_dim: Width ``C_s`` of the stage-one map.
        decoder_dim: Pyramid width ``C_d``.
        seed: Initialization seed.
        use_specific: ``False`` builds the universal-only decoder (no
            specific laterals).
    """

    def __init__(
        self,
        *,
        embed_dim: int,
        extractor_dim: int,
        decoder_dim: int,
        seed: int,
        use_specific: bool = True,
    ) -> None:
        def conv(name: str, cin: int, cout: int, k: int) -> Conv2d:
            return Conv2d(cin, cout, k, rng=component_rng(seed, f"decoder.{name}"))

        self.use_specific = use_specific
        self.lateral8 = conv("lateral8", embed_dim, decoder_dim, 1) if use_specific else None
        self.lateral16 = conv("lateral16", embed_dim, decoder_dim, 1)
        self.lateral32 = conv("lateral32", embed_dim, decoder_dim, 1) if use_specific else None
        self.lateral4 = conv("lateral4", extractor_dim, decoder_dim, 1) if use_specific else None
        self.smooth8 = conv("smooth8", decoder_dim, decoder_dim, 3)
        self.smooth4 = conv("smooth4", decoder_dim, decoder_dim, 3)
        self.head = conv("head", decoder_dim, 1, 1)

    def forward(
        self,
        final_ts: Optional[FlattenedSpecific],
        f_s1: Optional[Tensor],
        f_u5: UniversalFeature,
        output_size: Tuple[int, int],
    ) -> Tensor:
        return decode_masks(self, final_ts, f_s1, f_u5, output_size)


def decode_masks(
    decoder: FPNDecoder,
    final_ts: Optional[FlattenedSpecific],
    f_s1: Optional[Tensor],
    f_u5: UniversalFeature,
    output_size: Tuple[int, int],
) -> Tensor:
    """
    Logit map ``[1, H, W]``.

    Raises:
        ValueError: If the specific stream's scale boundaries disagree with
            its tokens, its 1/16 extent differs from the universal grid, or
            a specific decoder is called without the specific features.
    """
    u_map = f_u5.as_map()
    gh, gw = f_u5.grid

    if not decoder.use_specific:
        p16 = decoder.lateral16(u_map)
        p8 = gelu(decoder.smooth8(upsample_bilinear(p16, (2 * gh, 2 * gw))))
        p4 = gelu(decoder.smooth4(upsample_bilinear(p8, (4 * gh, 4 * gw))))
        return upsample_bilinear(decoder.head(p4), output_size)

    if final_ts is None or f_s1 is None:
        raise ValueError("Decoder with specific laterals needs the flattened stream and stage-one map")
    s8, s16, s32 = final_ts.unflatten()
    if tuple(s16.shape[1:]) != (gh, gw):
        raise ValueError(
            f"Specific 1/16 level {tuple(s16.shape[1:])} does not match universal grid {(gh, gw)}"
        )

    p32 = decoder.lateral32(s32)
    p16 = decoder.lateral16(s16 + u_map) + upsample_bilinear(p32, (gh, gw))
    p8 = decoder.lateral8(s8) + upsample_bilinear(p16, tuple(s8.shape[1:]))
    p8 = gelu(decoder.smooth8(p8))
    p4 = decoder.lateral4(f_s1) + upsample_bilinear(p8, tuple(f_s1.shape[1:]))
    p4 = gelu(decoder.smooth4(p4))
    return upsample_bilinear(decoder.head(p4), output_size)

