"""Parameter accounting and closed-form size formulas."""

from __future__ import annotations

from typing import Dict, Sequence

from priortune.core.models import ComponentSet, ParamReport, TrainConfig
from priortune.core.nn import Module
from priortune.utils.enums import ExpertType, FusionMode


def count_params(model: Module, depth: int = 1) -> ParamReport:
    """
    Exact trainable/frozen counts, grouped by the first ``depth`` name components.
    """
    trainable = frozen = 0
    by_prefix: Dict[str, Dict[str, int]] = {}
    for name, param in model.named_parameters():
        prefix = ".".join(name.split(".")[:depth])
        bucket = by_prefix.setdefault(prefix, {"trainable": 0, "frozen": 0})
        key = "trainable" if param.trainable else "frozen"
        bucket[key] += param.size
        if param.trainable:
            trainable += param.size
        else:
            frozen += param.size
    return ParamReport(trainable=trainable, frozen=frozen, by_prefix=by_prefix)


# ---------------- closed-form counts ---------------- #
# Derivations are written out in docs/PARAMETERS.md.


def expert_params(expert: int, c: int) -> int:
    shared = c * c + 6 * c
    ladder = {
        ExpertType.SEPARABLE: 3 * c * c + 89 * c,
        ExpertType.ATROUS: 30 * c,
        ExpertType.ASYMMETRIC: 36 * c,
        ExpertType.WAVELET: 135 * c,
    }[ExpertType(expert)]
    return shared + ladder


def extractor_params(
    c: int,
    d: int,
    experts: Sequence[int] = (1, 2, 3, 4),
    fusion: str = FusionMode.GATE.value,
    use_experts: bool = True,
) -> int:
    stem = 9 * c * c + 29 * c
    per_stage = c * c + c
    if use_experts and experts:
        per_stage += sum(expert_params(e, c) for e in experts)
        if FusionMode(fusion) is FusionMode.GATE:
            per_stage += len(experts) * (c + 1)
    downsample = c * c + 11 * c
    projections = 3 * (c * d + d)
    return stem + 4 * per_stage + 3 * downsample + projections


def cda_params(d: int, value_dim: int, samples: int) -> int:
    """Both norms, offset/weight heads, cosine affine, value/output projections and gate."""
    return 6 * d + 3 * samples * (d + 1) + 2 * samples + 2 * d * value_dim + value_dim


def case_params(d: int, reduction: int) -> int:
    hidden = max(1, d // reduction)
    return d * d + 4 * d * hidden + 17 * d + 2 * hidden + 2


def adapter_params(config: TrainConfig, components: ComponentSet) -> int:
    d, h, k = config.embed_dim, config.adapter_heads, config.adapter_points
    total = 0
    if components.inject:
        total += cda_params(d, config.value_dim, 3 * h * k)
    if components.extract:
        total += cda_params(d, config.value_dim, h * k)
    if components.case:
        total += case_params(d, config.case_reduction)
    return total


def decoder_params(d: int, c: int, cd: int, use_specific: bool = True) -> int:
    if not use_specific:
        return (d * cd + cd) + 2 * (9 * cd * cd + cd) + cd + 1
    return 3 * (d * cd + cd) + (c * cd + cd) + 2 * (9 * cd * cd + cd) + cd + 1


def backbone_params(d: int, depth: int, mlp_ratio: int = 4, patch_size: int = 16) -> int:
    patch = 3 * patch_size * patch_size * d + d
    hidden = mlp_ratio * d
    layer = 4 * d + (3 * d * d + 3 * d) + (d * d + d) + (d * hidden + hidden) + (hidden * d + d)
    return patch + depth * layer


def hand_count(config: TrainConfig, components: ComponentSet | None = None) -> ParamReport:
    """Trainable/frozen totals predicted from the configuration alone."""
    comp = components or ComponentSet()
    c, d = config.extractor_dim, config.embed_dim

    trainable = decoder_params(d, c, config.decoder_dim, comp.specific)
    if comp.specific:
        trainable += extractor_params(c, d, config.experts, config.fusion, comp.experts)
        if comp.uses_adapter:
            trainable += config.stages * adapter_params(config, comp)

    backbone = backbone_params(d, config.depth, config.mlp_ratio)
    if config.full_finetune:
        return ParamReport(trainable=trainable + backbone, frozen=0)
    return ParamReport(trainable=trainable, frozen=backbone)
