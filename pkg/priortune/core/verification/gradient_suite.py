"""
Finite-difference verification of every differentiable operation and of the
composed network on tiny shapes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from priortune.core.adapter import (
    CosineDeformableAttention,
    InteractionAdapter,
    ScaleEnhancement,
    run_adapter_stage,
)
from priortune.core.autodiff import (
    Parameter,
    Tensor,
    asymmetric_conv,
    bilinear_sample,
    conv2d,
    einsum,
    gelu,
    grad_check,
    layer_norm,
    sigmoid,
    softmax,
    upsample_bilinear,
    wavelet_conv,
)
from priortune.core.backbone import FrozenBackbone
from priortune.core.decoder import FPNDecoder, bce_loss, dice_loss
from priortune.core.extractor import MixedPriorExtractor, Stem
from priortune.core.models import (
    AdapterState,
    ComponentSet,
    FlattenedSpecific,
    TrainConfig,
    UniversalFeature,
)
from priortune.core.network import SegmentationModel

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-4

# Tiny network used by the composed checks: 32×32 input, 2×2 universal grid.
TINY_CONFIG = TrainConfig(
    image_size=32,
    embed_dim=16,
    depth=4,
    num_heads=2,
    extractor_dim=4,
    adapter_heads=2,
    adapter_points=2,
    case_reduction=4,
    decoder_dim=4,
    stages=4,
    iterations=0,
)


@dataclass(frozen=True, slots=True)
class GradCheckResult:
    name: str
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.error)) and self.error < self.tolerance


class GradientSuiteReport:
    def __init__(self, results: Sequence[GradCheckResult]) -> None:
        self.results = list(results)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> List[GradCheckResult]:
        return [r for r in self.results if not r.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "checks": [
                {"name": r.name, "error": r.error, "tolerance": r.tolerance, "passed": r.passed}
                for r in self.results
            ],
        }

    def get_summary_text(self) -> str:
        width = max((len(r.name) for r in self.results), default=4)
        lines = [f"{'check':<{width}}  {'max rel err':>12}  status"]
        for r in self.results:
            lines.append(f"{r.name:<{width}}  {r.error:>12.3e}  {'PASS' if r.passed else 'FAIL'}")
        lines.append(f"{len(self.results) - len(self.failures)}/{len(self.results)} checks passed")
        return "\n".join(lines)


def _var(rng: np.random.Generator, *shape: int, low: float = -1.0, high: float = 1.0) -> Tensor:
    return Tensor(rng.uniform(low, high, size=shape), requires_grad=True)


def _weighted(out: Tensor, weights: np.ndarray) -> Tensor:
    return (out * weights).sum()


def _perturb(params: Sequence[Parameter], rng: np.random.Generator, scale: float) -> None:
    for p in params:
        p.data[...] = rng.normal(0.0, scale, size=p.shape)


# ---------------- operation checks ---------------- #


def _check_conv2d(rng: np.random.Generator) -> float:
    x, w, b = _var(rng, 1, 2, 5, 5), _var(rng, 3, 2, 3, 3), _var(rng, 3)
    return grad_check(lambda: (conv2d(x, w, b) ** 2).sum(), [x, w, b])


def _check_conv2d_grouped(rng: np.random.Generator) -> float:
    x, w = _var(rng, 4, 7, 7), _var(rng, 4, 1, 3, 3)
    r = rng.normal(size=(4, 4, 4))
    return grad_check(lambda: _weighted(conv2d(x, w, stride=2, dilation=2, groups=4), r), [x, w])


def _check_asymmetric(rng: np.random.Generator) -> float:
    x, v, h = _var(rng, 2, 6, 6), _var(rng, 2, 1, 5, 1), _var(rng, 2, 1, 1, 5)
    r = rng.normal(size=(2, 6, 6))
    return grad_check(lambda: _weighted(asymmetric_conv(x, v, h, groups=2), r), [x, v, h])


def _check_wavelet(rng: np.random.Generator) -> float:
    x = _var(rng, 1, 2, 8, 8)
    kernels = [_var(rng, 6, 1, 3, 3), _var(rng, 8, 1, 3, 3)]
    r = rng.normal(size=(1, 2, 8, 8))
    return grad_check(lambda: _weighted(wavelet_conv(x, kernels), r), [x, *kernels])


def _check_bilinear(rng: np.random.Generator) -> float:
    grid = _var(rng, 3, 4, 5)
    points = _var(rng, 6, 2, low=0.05, high=0.95)
    r = rng.normal(size=(6, 3))
    return grad_check(lambda: _weighted(bilinear_sample(grid, points), r), [grid, points])


def _check_upsample(rng: np.random.Generator) -> float:
    x = _var(rng, 2, 3, 3)
    r = rng.normal(size=(2, 12, 12))
    return grad_check(lambda: _weighted(upsample_bilinear(x, (12, 12)), r), [x])


def _check_softmax(rng: np.random.Generator) -> float:
    x = _var(rng, 3, 5)
    r = rng.normal(size=(3, 5))
    return grad_check(lambda: _weighted(softmax(x, axis=-1), r), [x])


def _check_layer_norm(rng: np.random.Generator) -> float:
    x, g, b = _var(rng, 4, 6), _var(rng, 6), _var(rng, 6)
    r = rng.normal(size=(4, 6))
    return grad_check(lambda: _weighted(layer_norm(x, g, b), r), [x, g, b])


def _check_pointwise(rng: np.random.Generator) -> float:
    x = _var(rng, 3, 4, low=-3.0, high=3.0)
    r = rng.normal(size=(3, 4))
    return grad_check(lambda: _weighted(gelu(x) + sigmoid(x) * x, r), [x])


def _check_einsum(rng: np.random.Generator) -> float:
    a, b = _var(rng, 2, 3, 4), _var(rng, 2, 4, 5)
    r = rng.normal(size=(2, 3, 5))
    return grad_check(lambda: _weighted(einsum("hnd,hdm->hnm", a, b), r), [a, b])


def _check_losses(rng: np.random.Generator) -> float:
    logits = _var(rng, 1, 4, 4, low=-3.0, high=3.0)
    gt = (rng.uniform(size=(1, 4, 4)) > 0.5).astype(np.float64)
    return grad_check(lambda: bce_loss(logits, gt) * 5.0 + dice_loss(logits, gt) * 2.0, [logits])


# ---------------- component checks ---------------- #


def _check_stem(rng: np.random.Generator) -> float:
    stem = Stem(3, rng=rng)
    image = _var(rng, 3, 32, 32, low=0.0, high=1.0)
    r = rng.normal(size=(3, 8, 8))
    return grad_check(
        lambda: _weighted(stem(image), r), [image, *stem.parameters()], max_coords=6, rng=rng
    )


def _check_extractor(rng: np.random.Generator) -> float:
    extractor = MixedPriorExtractor(channels=4, embed_dim=8, seed=int(rng.integers(1 << 31)))
    for stage in extractor.stages:
        if stage.gate is not None:
            _perturb(stage.gate.parameters(), rng, 0.5)
    image = Tensor(rng.uniform(size=(3, 32, 32)))
    r = rng.normal(size=(21, 8))
    params = extractor.parameters()
    picked = [params[i] for i in rng.choice(len(params), size=min(8, len(params)), replace=False)]
    return grad_check(lambda: _weighted(extractor(image)[1].tokens, r), picked, max_coords=3, rng=rng)


def _random_streams(rng: np.random.Generator, dim: int) -> Tuple[UniversalFeature, FlattenedSpecific]:
    universal = UniversalFeature(tokens=_var(rng, 16, dim), grid=(4, 4))
    maps = [_var(rng, dim, 8, 8), _var(rng, dim, 4, 4), _var(rng, dim, 2, 2)]
    specific = FlattenedSpecific(
        tokens=_var(rng, 64 + 16 + 4, dim), extents=tuple((m.shape[1], m.shape[2]) for m in maps)
    )
    return universal, specific


def _check_cda(rng: np.random.Generator) -> float:
    dim = 8
    cda = CosineDeformableAttention(dim, num_heads=2, num_levels=1, num_points=2, value_dim=4, rng=rng)
    _perturb([cda.psi, cda.sampling_offsets.weight, cda.sampling_offsets.bias], rng, 0.3)
    _perturb([cda.attention_weights.weight], rng, 0.3)
    universal, _ = _random_streams(rng, dim)
    query = _var(rng, 16, dim)
    refs = universal.reference_points()
    r = rng.normal(size=(16, dim))
    inputs = [query, universal.tokens, cda.psi, cda.sampling_offsets.weight, cda.value_proj.weight]
    return grad_check(
        lambda: _weighted(cda(query, refs, universal.tokens, (universal.grid,)), r),
        inputs,
        max_coords=12,
        rng=rng,
    )


def _check_case(rng: np.random.Generator) -> float:
    dim = 8
    case = ScaleEnhancement(dim, 2, rng=rng)
    _perturb(case.gate.parameters(), rng, 0.5)
    _, specific = _random_streams(rng, dim)
    r = rng.normal(size=specific.tokens.shape)
    inputs = [specific.tokens, case.gate.weight, case.channel_attention.excitation.fc1.weight]
    return grad_check(lambda: _weighted(case(specific).tokens, r), inputs, max_coords=12, rng=rng)


def _check_adapter_stage(rng: np.random.Generator) -> float:
    config = TINY_CONFIG
    dim = config.embed_dim
    backbone = FrozenBackbone(config.backbone, num_blocks=config.stages)
    backbone.freeze_all()
    adapter = InteractionAdapter(
        1,
        dim=dim,
        num_heads=config.adapter_heads,
        num_points=config.adapter_points,
        value_dim=config.value_dim,
        reduction=config.case_reduction,
        components=ComponentSet(),
        seed=int(rng.integers(1 << 31)),
    )
    for cda in (adapter.cda_in, adapter.cda_out):
        _perturb([cda.psi, cda.sampling_offsets.bias], rng, 0.3)
    _perturb(adapter.case.gate.parameters(), rng, 0.5)

    # 32×32 input: 2×2 universal grid, specific scales 4×4, 2×2 and 1×1
    universal = UniversalFeature(tokens=_var(rng, 4, dim), grid=(2, 2))
    specific = FlattenedSpecific(tokens=_var(rng, 16 + 4 + 1, dim), extents=((4, 4), (2, 2), (1, 1)))
    r_u = rng.normal(size=(4, dim))
    r_s = rng.normal(size=(21, dim))

    def closure() -> Tensor:
        state = run_adapter_stage(1, AdapterState(universal=universal, specific=specific), backbone, adapter)
        return _weighted(state.universal.tokens, r_u) + _weighted(state.specific.tokens, r_s)

    inputs = [
        universal.tokens,
        specific.tokens,
        adapter.cda_in.psi,
        adapter.cda_in.sampling_offsets.bias,
        adapter.cda_out.psi,
        adapter.case.gate.weight,
    ]
    return grad_check(closure, inputs, max_coords=8, rng=rng)


def _check_decoder(rng: np.random.Generator) -> float:
    dim = 8
    decoder = FPNDecoder(embed_dim=dim, extractor_dim=4, decoder_dim=4, seed=int(rng.integers(1 << 31)))
    universal, specific = _random_streams(rng, dim)
    f_s1 = _var(rng, 4, 16, 16)
    r = rng.normal(size=(1, 64, 64))
    inputs = [specific.tokens, universal.tokens, f_s1, decoder.smooth8.weight, decoder.head.weight]
    return grad_check(
        lambda: _weighted(decoder(specific, f_s1, universal, (64, 64)), r),
        inputs,
        max_coords=10,
        rng=rng,
    )


def _check_model(rng: np.random.Generator) -> float:
    model = SegmentationModel(TINY_CONFIG)
    for adapter in model.adapter.values():
        for cda in (adapter.cda_in, adapter.cda_out):
            _perturb([cda.psi, cda.sampling_offsets.bias], rng, 0.3)
    image = Tensor(rng.uniform(size=(3, 32, 32)))
    r = rng.normal(size=(1, 32, 32))

    groups: Dict[str, List[Parameter]] = {}
    for name, p in model.named_parameters():
        if p.trainable:
            groups.setdefault(name.split(".")[0], []).append(p)
    picked: List[Parameter] = []
    for params in groups.values():
        picked.extend(params[i] for i in rng.choice(len(params), size=min(3, len(params)), replace=False))
    return grad_check(lambda: _weighted(model(image).logits, r), picked, max_coords=2, rng=rng)


CHECKS: Tuple[Tuple[str, Callable[[np.random.Generator], float], bool], ...] = (
    ("conv2d", _check_conv2d, False),
    ("conv2d grouped/dilated/strided", _check_conv2d_grouped, False),
    ("asymmetric_conv", _check_asymmetric, False),
    ("wavelet_conv", _check_wavelet, False),
    ("bilinear_sample", _check_bilinear, False),
    ("upsample_bilinear", _check_upsample, False),
    ("softmax", _check_softmax, False),
    ("layer_norm", _check_layer_norm, False),
    ("gelu/sigmoid", _check_pointwise, False),
    ("einsum", _check_einsum, False),
    ("bce + dice", _check_losses, False),
    ("stem", _check_stem, True),
    ("extractor", _check_extractor, True),
    ("cda", _check_cda, True),
    ("case", _check_case, True),
    ("adapter stage", _check_adapter_stage, True),
    ("decoder", _check_decoder, True),
    ("full model", _check_model, True),
)


def run_gradient_suite(
    *,
    seed: int = 0,
    tolerance: float = DEFAULT_TOLERANCE,
    include_components: bool = True,
    only: Optional[Sequence[str]] = None,
) -> GradientSuiteReport:
    """
    Run the registered checks, each with its own generator derived from ``seed``.
    """
    results: List[GradCheckResult] = []
    for index, (name, check, composite) in enumerate(CHECKS):
        if composite and not include_components:
            continue
        if only is not None and name not in only:
            continue
        error = check(np.random.default_rng([seed, index]))
        results.append(GradCheckResult(name=name, error=float(error), tolerance=tolerance))
        logger.info("gradcheck %-32s %.3e", name, error)
    return GradientSuiteReport(results)
