from __future__ import annotations

import numpy as np
import pytest

from priortune.core.autodiff import Tensor, conv2d, no_grad
from priortune.core.extractor import ExtractorStage, MixedPriorExtractor, build_expert
from priortune.core.extractor.experts import AtrousExpert
from priortune.core.nn import Module
from priortune.core.training import expert_params, extractor_params
from priortune.utils.enums import ExpertType, FusionMode


def _count(module: Module) -> int:
    return sum(p.size for p in module.parameters())


@pytest.fixture
def image(rng):
    return Tensor(rng.uniform(size=(3, 64, 64)))


def test_pyramid_shapes(image):
    extractor = MixedPriorExtractor(channels=4, embed_dim=8, seed=0)
    with no_grad():
        pyramid, flat = extractor(image)
    assert pyramid.stem.shape == (4, 16, 16)
    assert pyramid.shapes == [(4, 16, 16), (4, 8, 8), (4, 4, 4), (4, 2, 2)]
    assert [p.shape for p in pyramid.projected] == [(8, 8, 8), (8, 4, 4), (8, 2, 2)]
    assert flat.extents == ((8, 8), (4, 4), (2, 2))
    assert flat.tokens.shape == (64 + 16 + 4, 8)
    assert flat.boundaries == (64, 80, 84)


def test_gate_is_uniform_at_initialization(image):
    extractor = MixedPriorExtractor(channels=4, embed_dim=8, seed=0)
    with no_grad():
        pyramid, _ = extractor(image)
    for weights in pyramid.gates:
        np.testing.assert_allclose(weights, np.full(4, 0.25))


def test_sum_fusion_has_no_gate(image):
    extractor = MixedPriorExtractor(
        channels=4, embed_dim=8, seed=0, fusion=FusionMode.SUM.value, experts=(1, 3)
    )
    assert all(stage.gate is None for stage in extractor.stages)
    with no_grad():
        pyramid, _ = extractor(image)
    assert pyramid.gates == [None] * 4


def test_stage_without_experts_is_plain_fusion(rng):
    stage = ExtractorStage(4, seed=0, prefix="s", experts=(1, 2, 3, 4), use_experts=False)
    assert stage.experts == [] and stage.gate is None
    x = Tensor(rng.normal(size=(4, 8, 8)))
    with no_grad():
        np.testing.assert_array_equal(stage(x).feature.data, stage.fuse(x).data)


def test_runtime_bypass_ignores_expert_weights(rng):
    stage = ExtractorStage(4, seed=0, prefix="s", experts=(1, 2, 3, 4))
    x = Tensor(rng.normal(size=(4, 8, 8)))
    with no_grad():
        bypassed = stage(x, use_experts=False)
        full = stage(x)
    np.testing.assert_array_equal(bypassed.feature.data, stage.fuse(x).data)
    assert bypassed.weights is None
    assert not np.allclose(full.feature.data, bypassed.feature.data)


def test_gate_weights_are_a_distribution(rng):
    stage = ExtractorStage(4, seed=0, prefix="s", experts=(1, 2, 3, 4))
    stage.gate.weight.data[...] = rng.normal(size=stage.gate.weight.shape)
    with no_grad():
        w = stage.gate_weights(Tensor(rng.normal(size=(4, 8, 8)))).data
    assert w.shape == (4,)
    assert np.all(w > 0)
    assert w.sum() == pytest.approx(1.0)


@pytest.mark.parametrize("expert_type", list(ExpertType))
def test_base_selecting_fusion_returns_the_projection(rng, expert_type):
    expert = build_expert(expert_type, 3, rng=rng)
    expert.fusion.weight.data[...] = 0.0
    expert.fusion.weight.data[:, 0] = 1.0
    expert.fusion.bias.data[...] = 0.0
    x = Tensor(rng.normal(size=(3, 8, 8)))
    with no_grad():
        priors = expert.priors(x)
    np.testing.assert_allclose(priors.expert.data, priors.base.data, atol=1e-12)
    assert len(priors.ladder) == 3
    assert all(level.shape == (3, 8, 8) for level in priors.all_levels)


@pytest.mark.parametrize("expert_type", list(ExpertType))
def test_expert_parameter_counts(rng, expert_type):
    assert _count(build_expert(expert_type, 5, rng=rng)) == expert_params(expert_type, 5)


@pytest.mark.parametrize("extent", [1, 3, 6])
def test_wavelet_expert_handles_small_and_odd_maps(rng, extent):
    expert = build_expert(ExpertType.WAVELET, 2, rng=rng)
    with no_grad():
        out = expert(Tensor(rng.normal(size=(2, extent, extent))))
    assert out.shape == (2, extent, extent)


def test_extractor_parameter_count_matches_closed_form():
    for experts, fusion in [((1, 2, 3, 4), "gate"), ((2, 4), "gate"), ((1, 3), "sum")]:
        extractor = MixedPriorExtractor(
            channels=6, embed_dim=8, seed=0, experts=experts, fusion=fusion
        )
        assert _count(extractor) == extractor_params(6, 8, experts, fusion)
    bare = MixedPriorExtractor(channels=6, embed_dim=8, seed=0, use_experts=False)
    assert _count(bare) == extractor_params(6, 8, use_experts=False)


def test_desk_extractor_count():
    assert extractor_params(32, 64) == 94_224


def test_unknown_expert_type_is_rejected(rng):
    with pytest.raises(ValueError, match="Unknown expert type"):
        build_expert(5, 4, rng=rng)
    stage = ExtractorStage(4, seed=0, prefix="s", experts=(1, 2))
    with pytest.raises(ValueError, match="configured"):
        stage.extract_local_priors(Tensor(rng.normal(size=(4, 4, 4))), 4)


def test_fuse_priors_checks_weight_count(rng):
    stage = ExtractorStage(4, seed=0, prefix="s", experts=(1, 2))
    x = Tensor(rng.normal(size=(4, 4, 4)))
    with pytest.raises(ValueError, match="gate weights"):
        stage.fuse_priors(x, [x, x], Tensor(np.ones(3) / 3))


def test_image_extent_must_be_a_multiple_of_32(rng):
    extractor = MixedPriorExtractor(channels=4, embed_dim=8, seed=0)
    with pytest.raises(ValueError):
        extractor(Tensor(rng.uniform(size=(3, 48, 48))))


def test_construction_is_seed_deterministic():
    a = MixedPriorExtractor(channels=4, embed_dim=8, seed=5).state_dict()
    b = MixedPriorExtractor(channels=4, embed_dim=8, seed=5).state_dict()
    assert a.keys() == b.keys()
    assert all(np.array_equal(a[k], b[k]) for k in a)


def test_fuse_priors_ignores_joint_expert_order(rng):
    stage = ExtractorStage(4, seed=0, prefix="s", experts=(1, 2, 3, 4))
    x = Tensor(rng.normal(size=(4, 8, 8)))
    priors = [Tensor(rng.normal(size=(4, 8, 8))) for _ in range(4)]
    weights = rng.dirichlet(np.ones(4))
    order = [2, 0, 3, 1]
    with no_grad():
        fused = stage.fuse_priors(x, priors, Tensor(weights))
        permuted = stage.fuse_priors(x, [priors[i] for i in order], Tensor(weights[order]))
    np.testing.assert_allclose(fused.data, permuted.data, rtol=0, atol=1e-12)


def test_atrous_expert_without_dilation_is_a_plain_ladder(rng):
    expert = AtrousExpert(3, rng=rng, dilations=(1, 1, 1))
    x = Tensor(rng.normal(size=(3, 8, 8)))
    with no_grad():
        priors = expert.priors(x)
        l1 = priors.base
        previous = l1
        for step, level in zip(expert.ladder, priors.ladder):
            previous = conv2d(l1 + previous, step.weight, step.bias, groups=3)
            np.testing.assert_allclose(level.data, previous.data, rtol=0, atol=1e-12)


@pytest.mark.parametrize("expert_type", list(ExpertType))
def test_every_ladder_step_consumes_the_base(rng, expert_type):
    expert = build_expert(expert_type, 3, rng=rng)
    x = Tensor(rng.normal(size=(3, 8, 8)))
    with no_grad():
        full = expert.priors(x)
        expert.base.weight.data[...] = 0.0
        expert.base.bias.data[...] = 0.0
        ablated = expert.priors(x)
    for before, after in zip(full.ladder, ablated.ladder):
        assert not np.allclose(before.data, after.data)


def test_flatten_unflatten_is_bitwise(rng):
    extractor = MixedPriorExtractor(channels=4, embed_dim=8, seed=0)
    with no_grad():
        pyramid, flat = extractor(Tensor(rng.uniform(size=(3, 64, 64))))
    for original, restored in zip(pyramid.projected, flat.unflatten()):
        assert original.data.tobytes() == restored.data.tobytes()
