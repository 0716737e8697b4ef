from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import ndimage

from priortune.core.data import write_grayscale, write_mask
from priortune.core.metrics import (
    dice_coeff,
    evaluate_dataset,
    gaussian_kernel,
    iou,
    list_stems,
    mae,
    weighted_fmeasure,
)


def _random_pair(rng, shape=(4, 4)):
    pred = rng.uniform(size=shape)
    gt = rng.uniform(size=shape) > 0.5
    return pred, gt


# ---------------- thresholded overlap ---------------- #


def test_iou_and_dice_against_set_counts(rng):
    for _ in range(200):
        pred, gt = _random_pair(rng)
        p = pred >= 0.5
        inter = np.sum(p & gt)
        union = np.sum(p | gt)
        expected_iou = 1.0 if union == 0 else inter / union
        assert iou(pred, gt) == pytest.approx(expected_iou)
        denom = p.sum() + gt.sum()
        expected_dice = 1.0 if denom == 0 else 2 * inter / denom
        assert dice_coeff(pred, gt) == pytest.approx(expected_dice)
        if union:
            assert dice_coeff(pred, gt) == pytest.approx(2 * expected_iou / (1 + expected_iou))


def test_threshold_is_inclusive():
    gt = np.array([[True, False]])
    assert iou(np.array([[0.5, 0.49]]), gt) == 1.0


def test_empty_prediction_and_mask_agree_perfectly():
    zeros = np.zeros((3, 3))
    assert iou(zeros, zeros) == 1.0
    assert dice_coeff(zeros, zeros) == 1.0
    assert mae(zeros, zeros) == 0.0


def test_shape_mismatch_is_rejected():
    with pytest.raises(ValueError, match="does not match"):
        iou(np.zeros((2, 2)), np.zeros((2, 3)))


def test_overlap_and_error_ignore_joint_pixel_order(rng):
    for _ in range(50):
        pred, gt = _random_pair(rng, shape=(6, 6))
        order = rng.permutation(36)
        shuffled_pred = pred.reshape(-1)[order].reshape(6, 6)
        shuffled_gt = gt.reshape(-1)[order].reshape(6, 6)
        for measure in (iou, dice_coeff, mae):
            assert measure(shuffled_pred, shuffled_gt) == pytest.approx(measure(pred, gt), abs=1e-12)


def test_mae_is_symmetric_under_complement(rng):
    for _ in range(50):
        pred, gt = _random_pair(rng, shape=(5, 7))
        flipped = mae(1.0 - pred, 1.0 - gt.astype(np.float64))
        assert flipped == pytest.approx(mae(pred, gt), abs=1e-12)


# ---------------- weighted F-measure ---------------- #


def _fmeasure_reference(pred, gt):
    """Direct loops over pixels; only nearest-foreground indices come from scipy."""
    h, w = gt.shape
    error = np.abs(pred - gt)
    fg = np.argwhere(gt)
    _, (rows, cols) = ndimage.distance_transform_edt(~gt, return_indices=True)

    spread = error.copy()
    dist = np.zeros_like(error)
    for i in range(h):
        for j in range(w):
            if not gt[i, j]:
                spread[i, j] = error[rows[i, j], cols[i, j]]
                dist[i, j] = min(math.hypot(i - a, j - b) for a, b in fg)

    kernel = gaussian_kernel()
    smoothed = np.zeros_like(error)
    for i in range(h):
        for j in range(w):
            total = 0.0
            for di in range(-3, 4):
                for dj in range(-3, 4):
                    a, b = i + di, j + dj
                    if 0 <= a < h and 0 <= b < w:
                        total += kernel[di + 3, dj + 3] * spread[a, b]
            smoothed[i, j] = total

    weighted = np.zeros_like(error)
    for i in range(h):
        for j in range(w):
            if gt[i, j]:
                weighted[i, j] = min(error[i, j], smoothed[i, j])
            else:
                weighted[i, j] = error[i, j] * (2.0 - math.exp(math.log(0.5) / 5.0 * dist[i, j]))

    eps = np.finfo(np.float64).eps
    tp = gt.sum() - weighted[gt].sum()
    fp = weighted[~gt].sum()
    recall = 1.0 - weighted[gt].mean()
    precision = tp / (eps + tp + fp)
    return float(np.clip(2 * recall * precision / (eps + recall + precision), 0.0, 1.0))


def test_weighted_fmeasure_matches_reference(rng):
    checked = 0
    while checked < 20:
        pred = rng.uniform(size=(8, 8))
        gt = rng.uniform(size=(8, 8)) > 0.6
        if not gt.any():
            continue
        assert weighted_fmeasure(pred, gt) == pytest.approx(_fmeasure_reference(pred, gt), abs=1e-10)
        checked += 1


def test_weighted_fmeasure_edge_cases(rng):
    gt = np.zeros((6, 6), dtype=bool)
    gt[2:4, 2:4] = True
    assert weighted_fmeasure(gt.astype(float), gt) == pytest.approx(1.0)
    assert weighted_fmeasure(rng.uniform(size=(6, 6)), np.zeros((6, 6))) == 0.0
    assert weighted_fmeasure(1.0 - gt, gt) < 0.2


def test_weighted_fmeasure_rejects_out_of_range_values():
    with pytest.raises(ValueError, match=r"\[0, 1\]"):
        weighted_fmeasure(np.full((2, 2), 1.5), np.ones((2, 2)))


def test_gaussian_kernel_is_normalized_and_symmetric():
    k = gaussian_kernel()
    assert k.shape == (7, 7)
    assert k.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(k, k.T)
    assert k[3, 3] == k.max()


# ---------------- directories ---------------- #


def _write_pair(pred_dir, gt_dir, stem, pred, gt):
    write_grayscale(pred_dir / f"{stem}.png", pred)
    write_mask(gt_dir / f"{stem}.png", gt)


def test_evaluate_dataset_scores_and_flags(tmp_path, rng):
    pred_dir, gt_dir = tmp_path / "pred", tmp_path / "gt"
    gt = np.zeros((8, 8), dtype=bool)
    gt[2:6, 2:6] = True
    _write_pair(pred_dir, gt_dir, "b", gt.astype(float), gt)
    _write_pair(pred_dir, gt_dir, "a", np.zeros((8, 8)), np.zeros((8, 8), dtype=bool))
    write_grayscale(pred_dir / "orphan.png", rng.uniform(size=(8, 8)))
    write_mask(gt_dir / "lonely.png", gt)

    report = evaluate_dataset(pred_dir, gt_dir, workers=2)
    assert list(report) == ["a", "b"]
    assert report["b"].iou == 1.0
    assert report["a"].empty_gt and report["a"].fmeasure == 0.0
    assert report.empty_gt_stems == ["a"]
    assert report.missing_predictions == ["lonely"]
    assert report.missing_ground_truth == ["orphan"]
    assert report.has_missing
    assert report.iou == pytest.approx(1.0)
    assert report.fmeasure == pytest.approx(report["b"].fmeasure / 2)


def test_evaluate_dataset_without_any_match(tmp_path):
    pred_dir, gt_dir = tmp_path / "pred", tmp_path / "gt"
    write_grayscale(pred_dir / "x.png", np.zeros((4, 4)))
    write_mask(gt_dir / "y.png", np.zeros((4, 4)))
    with pytest.raises(ValueError, match="No matching stems"):
        evaluate_dataset(pred_dir, gt_dir)
    with pytest.raises(FileNotFoundError):
        evaluate_dataset(tmp_path / "absent", gt_dir)


def test_list_stems_ignores_other_files(tmp_path):
    write_grayscale(tmp_path / "k.png", np.zeros((2, 2)))
    (tmp_path / "notes.txt").write_text("x")
    assert list(list_stems(tmp_path)) == ["k"]
