import math

import numpy as np
import pytest

from segstat import ensemble
from segstat.errors import InputError
from segstat.masks import ConfusionCounts, confusion
from segstat.metrics import dice
from tests.conftest import random_mask


def test_run_intersection_identical_runs(rng):
    m = random_mask(rng, (10, 10))
    assert (ensemble.run_intersection([m] * 5) == m).all()


def test_run_intersection_one_empty_run_wipes_everything(rng):
    runs = [random_mask(rng, (6, 6)) for _ in range(4)]
    runs.append(np.zeros((6, 6), dtype=bool))
    assert not ensemble.run_intersection(runs).any()


def test_run_intersection_is_subset_of_every_run(rng):
    for _ in range(200):
        runs = [random_mask(rng, (8, 8), p=0.7) for _ in range(5)]
        agg = ensemble.run_intersection(runs)
        for r in runs:
            assert not (agg & ~r).any()


def test_run_intersection_matches_pixel_walk(rng):
    runs = [random_mask(rng, (5, 7)) for _ in range(3)]
    agg = ensemble.run_intersection(runs)
    for y in range(5):
        for x in range(7):
            assert agg[y, x] == all(r[y, x] for r in runs)


def test_run_intersection_validates():
    with pytest.raises(InputError):
        ensemble.run_intersection([])
    with pytest.raises(InputError):
        ensemble.run_intersection(
            [np.zeros((2, 2), bool), np.zeros((2, 3), bool)]
        )


def test_run_majority_vote():
    on = np.ones((2, 2), dtype=bool)
    off = np.zeros((2, 2), dtype=bool)
    assert ensemble.run_majority([on, on, on, off, off]).all()
    assert not ensemble.run_majority([on, on, off, off, off]).any()
    # exact half counts as on
    assert ensemble.run_majority([on, off]).all()


def test_gradcam_average_of_constants():
    maps = [np.full((4, 4), v) for v in (0.0, 0.25, 0.5, 0.75, 1.0)]
    avg = ensemble.gradcam_average(maps)
    assert np.allclose(avg, 0.5, atol=1e-15)


def test_gradcam_average_matches_fsum(rng):
    maps = [rng.random((6, 6)) for _ in range(5)]
    avg = ensemble.gradcam_average(maps)
    for y in range(6):
        for x in range(6):
            want = math.fsum(m[y, x] for m in maps) / 5.0
            assert abs(avg[y, x] - want) < 1e-12


def test_gradcam_average_is_linear(rng):
    maps = [rng.random((5, 5)) for _ in range(4)]
    scaled = [0.5 * m for m in maps]
    assert np.allclose(
        ensemble.gradcam_average(scaled),
        0.5 * ensemble.gradcam_average(maps),
        atol=1e-15,
    )


def test_gradcam_average_validates():
    with pytest.raises(InputError):
        ensemble.gradcam_average([])
    with pytest.raises(InputError):
        ensemble.gradcam_average([np.array([[1.5]])])
    with pytest.raises(InputError):
        ensemble.gradcam_average([np.array([[np.nan]])])
    with pytest.raises(InputError):
        ensemble.gradcam_average([np.zeros((2, 2)), np.zeros((3, 2))])


def test_fuse_truth_tables():
    a = np.array([[True, True, False, False]])
    b = np.array([[True, False, True, False]])
    assert ensemble.fuse(a, b, "union").tolist() == [[True, True, True, False]]
    assert ensemble.fuse(a, b, "intersection").tolist() == [
        [True, False, False, False]
    ]


def test_fuse_algebra(rng):
    a = random_mask(rng, (7, 7))
    b = random_mask(rng, (7, 7))
    for op in ensemble.FUSE_OPS:
        assert (ensemble.fuse(a, b, op) == ensemble.fuse(b, a, op)).all()
        assert (ensemble.fuse(a, a, op) == a).all()


def test_fuse_validates():
    a = np.zeros((2, 2), bool)
    with pytest.raises(InputError, match="unknown fusion op"):
        ensemble.fuse(a, a, "xor")
    with pytest.raises(InputError, match="mismatch"):
        ensemble.fuse(a, np.zeros((2, 3), bool), "union")


def test_union_never_increases_misses_and_intersection_never_increases_false_alarms(
    rng,
):
    for _ in range(300):
        gt = random_mask(rng, (8, 8), p=rng.random())
        a = random_mask(rng, (8, 8), p=rng.random())
        b = random_mask(rng, (8, 8), p=rng.random())
        fn_union = confusion(gt, ensemble.fuse(a, b, "union")).fn
        fp_inter = confusion(gt, ensemble.fuse(a, b, "intersection")).fp
        assert fn_union <= min(confusion(gt, a).fn, confusion(gt, b).fn)
        assert fp_inter <= min(confusion(gt, a).fp, confusion(gt, b).fp)


def test_error_rates():
    c = ConfusionCounts(tp=6, fp=3, tn=7, fn=2)
    assert ensemble.false_positive_rate(c) == 0.3
    assert ensemble.false_negative_rate(c) == 0.25
    vacuous = ConfusionCounts(tp=4, fp=0, tn=0, fn=0)
    assert ensemble.false_positive_rate(vacuous) == 0.0
    assert ensemble.false_negative_rate(ConfusionCounts(0, 2, 2, 0)) == 0.0


def test_recommend_fusion_rules():
    high_fp = ConfusionCounts(tp=10, fp=30, tn=70, fn=0)
    high_fn = ConfusionCounts(tp=10, fp=0, tn=100, fn=10)
    clean = ConfusionCounts(tp=10, fp=1, tn=100, fn=0)
    assert ensemble.recommend_fusion(high_fp, high_fp) == "intersection"
    assert ensemble.recommend_fusion(high_fn, high_fn) == "union"
    assert ensemble.recommend_fusion(high_fp, high_fn) == "none"
    assert ensemble.recommend_fusion(clean, clean) == "none"
    # both rates high resolves in favor of intersection
    messy = ConfusionCounts(tp=5, fp=30, tn=70, fn=5)
    assert ensemble.recommend_fusion(messy, messy) == "intersection"


def test_recommend_fusion_threshold_is_strict():
    # FPR exactly 0.1 must not trigger
    at_limit = ConfusionCounts(tp=5, fp=10, tn=90, fn=0)
    assert ensemble.recommend_fusion(at_limit, at_limit) == "none"
    just_over = ConfusionCounts(tp=5, fp=11, tn=89, fn=0)
    assert ensemble.recommend_fusion(just_over, just_over) == "intersection"


def test_oracle_picks_exact_match():
    gt = np.array([[True, False], [True, True]])
    b = np.array([[True, True], [False, True]])
    res = ensemble.best_fusion_oracle(gt, gt, b)
    assert res.op == "a"
    assert res.dice_a == 1.0


def test_oracle_prefers_union_for_split_halves():
    gt = np.zeros((4, 8), dtype=bool)
    gt[:, 1:7] = True
    left = np.zeros_like(gt)
    left[:, 1:4] = True
    right = np.zeros_like(gt)
    right[:, 4:7] = True
    res = ensemble.best_fusion_oracle(gt, left, right)
    assert res.op == "union"
    assert res.dice_union == 1.0
    assert res.dice_intersection == 0.0


def test_oracle_tie_breaks_in_listed_order(rng):
    # b == union of (a, b) makes "b" and "union" tie; "b" is listed first
    a = np.array([[True, False, False]])
    b = np.array([[True, True, False]])
    gt = b.copy()
    res = ensemble.best_fusion_oracle(gt, a, b)
    assert res.dice_b == res.dice_union == 1.0
    assert res.op == "b"
    # a == b == both fusions: everything ties, "a" wins
    res = ensemble.best_fusion_oracle(gt, b, b)
    assert res.op == "a"


def test_oracle_scores_match_direct_dice(rng):
    for _ in range(100):
        gt = random_mask(rng, (6, 6), p=0.4)
        a = random_mask(rng, (6, 6), p=0.4)
        b = random_mask(rng, (6, 6), p=0.4)
        res = ensemble.best_fusion_oracle(gt, a, b)
        assert res.dice_a == dice(confusion(gt, a)).value
        assert res.dice_b == dice(confusion(gt, b)).value
        best_score = max(
            res.dice_a, res.dice_b, res.dice_union, res.dice_intersection
        )
        assert getattr(res, f"dice_{res.op}") == best_score
