from __future__ import annotations

import math

import numpy as np
import pytest

from priortune.core.autodiff import Tensor, no_grad
from priortune.core.decoder import FPNDecoder, SegmentationLoss, bce_loss, dice_loss, total_loss
from priortune.core.models import FlattenedSpecific, UniversalFeature
from priortune.core.nn import Module
from priortune.core.training import decoder_params


def _count(module: Module) -> int:
    return sum(p.size for p in module.parameters())


def _inputs(rng, size=64, dim=16, channels=4):
    g = size // 16
    maps = [Tensor(rng.normal(size=(dim, size // s, size // s))) for s in (8, 16, 32)]
    specific = FlattenedSpecific.from_maps(maps)
    f_s1 = Tensor(rng.normal(size=(channels, size // 4, size // 4)))
    universal = UniversalFeature(tokens=Tensor(rng.normal(size=(g * g, dim))), grid=(g, g))
    return specific, f_s1, universal


def _decoder(use_specific=True):
    return FPNDecoder(embed_dim=16, extractor_dim=4, decoder_dim=4, seed=0, use_specific=use_specific)


def test_logits_cover_the_input(rng):
    specific, f_s1, universal = _inputs(rng)
    with no_grad():
        logits = _decoder()(specific, f_s1, universal, (64, 64))
    assert logits.shape == (1, 64, 64)
    assert np.all(np.isfinite(logits.data))


def test_universal_only_decoder(rng):
    _, _, universal = _inputs(rng)
    decoder = _decoder(use_specific=False)
    assert decoder.lateral8 is None and decoder.lateral4 is None
    with no_grad():
        logits = decoder(None, None, universal, (64, 64))
    assert logits.shape == (1, 64, 64)
    assert _count(decoder) == decoder_params(16, 4, 4, use_specific=False)


def test_parameter_count_matches_closed_form():
    assert _count(_decoder()) == decoder_params(16, 4, 4)
    assert decoder_params(64, 32, 16) == 8_305


def test_universal_grid_must_match_middle_scale(rng):
    specific, f_s1, _ = _inputs(rng)
    wrong = UniversalFeature(tokens=Tensor(rng.normal(size=(4, 16))), grid=(2, 2))
    with pytest.raises(ValueError, match="does not match universal grid"):
        _decoder()(specific, f_s1, wrong, (64, 64))


def test_specific_decoder_needs_specific_inputs(rng):
    _, _, universal = _inputs(rng)
    with pytest.raises(ValueError, match="needs the flattened stream"):
        _decoder()(None, None, universal, (64, 64))


def test_corrupt_boundaries_are_rejected(rng):
    specific, f_s1, universal = _inputs(rng)
    broken = FlattenedSpecific(tokens=specific.tokens[:-1], extents=specific.extents)
    with pytest.raises(ValueError, match="boundaries"):
        _decoder()(broken, f_s1, universal, (64, 64))


# ---------------- loss ---------------- #


def test_loss_at_zero_logits():
    gt = np.zeros((1, 4, 4))
    gt[0, :2] = 1.0
    logits = Tensor(np.zeros((1, 4, 4)))
    assert bce_loss(logits, gt).item() == pytest.approx(math.log(2.0))
    # p = 0.5 everywhere: 1 - (2·4 + 1) / (8 + 8 + 1)
    assert dice_loss(logits, gt).item() == pytest.approx(1.0 - 9.0 / 17.0)


def test_total_is_weighted_sum(rng):
    logits = Tensor(rng.normal(size=(1, 8, 8)) * 3)
    gt = (rng.uniform(size=(1, 8, 8)) > 0.6).astype(np.float64)
    total, breakdown = SegmentationLoss()(logits, gt)
    assert total.item() == pytest.approx(5.0 * breakdown.bce + 2.0 * breakdown.dice)
    assert breakdown.total == pytest.approx(total.item())
    assert total_loss(0.2, 0.4, alpha=1.0, beta=1.0).total == pytest.approx(0.6)


def test_bce_is_stable_for_large_logits():
    gt = np.array([[[1.0, 0.0]]])
    value = bce_loss(Tensor(np.array([[[800.0, -800.0]]])), gt).item()
    assert value == pytest.approx(0.0, abs=1e-12)


def test_loss_rejects_bad_inputs(rng):
    with pytest.raises(ValueError, match="does not match"):
        bce_loss(Tensor(np.zeros((1, 4, 4))), np.zeros((1, 4, 5)))
    with pytest.raises(ValueError, match="positive"):
        SegmentationLoss(alpha=0.0)
    with pytest.raises(ValueError, match="positive"):
        SegmentationLoss(beta=-1.0)


def test_bce_ignores_joint_pixel_order(rng):
    logits = rng.normal(size=(1, 8, 8)) * 4
    gt = (rng.uniform(size=(1, 8, 8)) > 0.5).astype(np.float64)
    order = rng.permutation(64)
    shuffled_logits = logits.reshape(-1)[order].reshape(1, 8, 8)
    shuffled_gt = gt.reshape(-1)[order].reshape(1, 8, 8)
    assert bce_loss(Tensor(shuffled_logits), shuffled_gt).item() == pytest.approx(
        bce_loss(Tensor(logits), gt).item(), abs=1e-12
    )


@pytest.mark.parametrize("scale", [0.0, 1.0, 50.0, 1000.0])
def test_dice_loss_stays_in_unit_interval(rng, scale):
    for _ in range(20):
        logits = Tensor(rng.normal(size=(1, 6, 6)) * scale)
        gt = (rng.uniform(size=(1, 6, 6)) > rng.uniform()).astype(np.float64)
        assert 0.0 <= dice_loss(logits, gt).item() <= 1.0
