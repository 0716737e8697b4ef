"""One bi-directional interaction stage around a frozen backbone block."""

from __future__ import annotations

import logging
from typing import Optional

from priortune.core.adapter.attention import CosineDeformableAttention
from priortune.core.adapter.enhancement import ScaleEnhancement
from priortune.core.backbone import FrozenBackbone
from priortune.core.models import AdapterState, ComponentSet
from priortune.core.nn import Module, component_rng

logger = logging.getLogger(__name__)

SPECIFIC_LEVELS = 3


class InteractionAdapter(Module):
    """
    Inject → frozen block → extract → enhance.

    ``cda_in`` lets the universal tokens query the three specific scales,
    ``cda_out`` lets the specific tokens query the updated universal grid and
    ``case`` re-weights the specific stream. Components disabled at
    construction are absent (``None``); ``active`` switches them off at call
    time without touching the parameters.

    Args:
        index: 1-based stage number, also the backbone block it wraps.
        dim: Token width ``D``.
        num_heads: Deformable-attention heads.
        num_points: Sampling points per head and level.
        value_dim: Reduced value width of both attentions.
        reduction: Hidden-width divisor of the enhancement MLPs.
        components: Which parts to build.
        seed: Initialization seed.
    """

    def __init__(
        self,
        index: int,
        *,
        dim: int,
        num_heads: int,
        num_points: int,
        value_dim: int,
        reduction: int,
        components: ComponentSet,
        seed: int,
    ) -> None:
        self.index = index
        prefix = f"adapter.{index}"
        self.cda_in: Optional[CosineDeformableAttention] = None
        self.cda_out: Optional[CosineDeformableAttention] = None
        self.case: Optional[ScaleEnhancement] = None

        if components.inject:
            self.cda_in = CosineDeformableAttention(
                dim,
                num_heads=num_heads,
                num_levels=SPECIFIC_LEVELS,
                num_points=num_points,
                value_dim=value_dim,
                rng=component_rng(seed, f"{prefix}.cda_in"),
            )
        if components.extract:
            self.cda_out = CosineDeformableAttention(
                dim,
                num_heads=num_heads,
                num_levels=1,
                num_points=num_points,
                value_dim=value_dim,
                rng=component_rng(seed, f"{prefix}.cda_out"),
            )
        if components.case:
            self.case = ScaleEnhancement(dim, reduction, rng=component_rng(seed, f"{prefix}.case"))

    def forward(
        self,
        state: AdapterState,
        backbone: FrozenBackbone,
        active: Optional[ComponentSet] = None,
    ) -> AdapterState:
        return run_adapter_stage(self.index, state, backbone, self, active=active)


def run_adapter_stage(
    i: int,
    state: AdapterState,
    backbone: FrozenBackbone,
    adapter: InteractionAdapter,
    *,
    active: Optional[ComponentSet] = None,
) -> AdapterState:
    """
    Run stage ``i`` on the running pair of streams.

    Raises:
        ValueError: If ``i`` differs from the adapter's own index, or from
            the backbone's block range.
    """
    if i != adapter.index:
        raise ValueError(f"Adapter {adapter.index} cannot run stage {i}")
    active = active or ComponentSet()

    universal = state.universal
    specific = state.specific
    if specific is not None:
        specific.validate()

    if adapter.cda_in is not None and active.inject and specific is not None:
        universal = universal.with_tokens(
            adapter.cda_in(
                universal.tokens,
                universal.reference_points(),
                specific.tokens,
                specific.extents,
            )
        )

    universal = backbone.run_block(i, universal)

    if specific is not None:
        if adapter.cda_out is not None and active.extract:
            specific = specific.with_tokens(
                adapter.cda_out(
                    specific.tokens,
                    specific.reference_points(),
                    universal.tokens,
                    (universal.grid,),
                )
            )
        if adapter.case is not None and active.case:
            specific = adapter.case(specific)

    logger.debug("Adapter stage %d done (%d universal tokens)", i, universal.num_tokens)
    return AdapterState(universal=universal, specific=specific, stage=i)
