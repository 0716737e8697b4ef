"""
Full segmentation network: extractor, frozen backbone, interaction
adapters and mask decoder.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from priortune.core.adapter import InteractionAdapter
from priortune.core.autodiff import Parameter, Tensor, as_tensor
from priortune.core.backbone import FrozenBackbone
from priortune.core.decoder import FPNDecoder
from priortune.core.extractor import MixedPriorExtractor
from priortune.core.loader import AblationCatalog
from priortune.core.models import AdapterState, ComponentSet, SpecificPyramid, TrainConfig
from priortune.core.nn import Module
from priortune.utils.validation import validate_spatial

logger = logging.getLogger(__name__)


@dataclass(slots=True)
class ModelOutput:
    logits: Tensor
    state: AdapterState
    pyramid: Optional[SpecificPyramid]


class SegmentationModel(Module):
    """
    Parameters are named under ``dmlp.``, ``backbone.``, ``adapter.{i}.`` and
    ``decoder.``. Components removed by the config's ablations are never
    built; ``forward(..., active=...)`` can switch off further components
    of an already trained model.

    Args:
        config: Validated training configuration.
        catalog: Ablation catalog; the shipped one when omitted.
    """

    def __init__(self, config: TrainConfig, catalog: Optional[AblationCatalog] = None) -> None:
        config.validate()
        catalog = catalog or AblationCatalog.load()
        self.config = config
        self.components = catalog.resolve_components(config.ablate)
        comp = self.components

        self.dmlp: Optional[MixedPriorExtractor] = None
        if comp.specific:
            self.dmlp = MixedPriorExtractor(
                channels=config.extractor_dim,
                embed_dim=config.embed_dim,
                seed=config.seed,
                experts=config.experts,
                fusion=config.fusion,
                use_experts=comp.experts,
            )

        self.backbone = FrozenBackbone(config.backbone, num_blocks=config.stages)

        self.adapter: Dict[str, InteractionAdapter] = {}
        if comp.uses_adapter:
            for i in range(1, config.stages + 1):
                self.adapter[str(i)] = InteractionAdapter(
                    i,
                    dim=config.embed_dim,
                    num_heads=config.adapter_heads,
                    num_points=config.adapter_points,
                    value_dim=config.value_dim,
                    reduction=config.case_reduction,
                    components=comp,
                    seed=config.seed,
                )

        self.decoder = FPNDecoder(
            embed_dim=config.embed_dim,
            extractor_dim=config.extractor_dim,
            decoder_dim=config.decoder_dim,
            seed=config.seed,
            use_specific=comp.specific,
        )

        self.bind_names()
        if not config.full_finetune:
            self.backbone.freeze_all()
        logger.debug("Built model with components %s", comp)

    # ---------------- public API ---------------- #

    def trainable_parameters(self) -> List[Parameter]:
        return [p for p in self.parameters() if p.trainable]

    def resolve_active(
        self, names: Optional[List[str]] = None, catalog: Optional[AblationCatalog] = None
    ) -> ComponentSet:
        """Components left after applying extra ablations on top of the built ones."""
        if not names:
            return self.components
        catalog = catalog or AblationCatalog.load()
        return catalog.resolve_components(names, base=self.components)

    def forward(self, image: Tensor | np.ndarray, active: Optional[ComponentSet] = None) -> ModelOutput:
        """
        Raises:
            ValueError: If the image extents are not multiples of 32, or the
                run-time components switch off the specific branch of a model
                whose decoder needs it.
        """
        image = as_tensor(image)
        validate_spatial(image.shape, 32, "image")
        active = self.components if active is None else self.components.intersect(active)
        if self.decoder.use_specific and not active.specific:
            raise ValueError(
                "The decoder of this model needs the specific branch; "
                "build a separate model with the baseline ablation"
            )

        pyramid = flat = None
        if self.dmlp is not None and active.specific:
            pyramid, flat = self.dmlp(image, use_experts=active.experts)

        state = AdapterState(universal=self.backbone.embed(image), specific=flat, stage=0)
        for i in range(1, self.backbone.num_blocks + 1):
            adapter = self.adapter.get(str(i))
            if adapter is not None:
                state = adapter(state, self.backbone, active)
            else:
                state = AdapterState(
                    universal=self.backbone.run_block(i, state.universal),
                    specific=state.specific,
                    stage=i,
                )

        f_s1 = pyramid.levels[0] if pyramid is not None else None
        logits = self.decoder(state.specific, f_s1, state.universal, image.shape[-2:])
        return ModelOutput(logits=logits, state=state, pyramid=pyramid)
