"""Replicate aggregation and two-model mask fusion.

A model's five replicate training runs produce five masks per image;
the pipeline's final output is their pixel-wise intersection, and the
matching explanation heatmaps aggregate by pixel-wise mean.

Fusion combines the two models' final masks: union recovers misses
(helps when both models leave false negatives), intersection suppresses
false alarms (helps when both models over-segment).  The recommender
applies exactly that rule from each model's error rates;
``best_fusion_oracle`` reports what a ground-truth peek would pick.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .masks import ConfusionCounts, confusion
from .metrics import dice

FUSE_OPS = ("union", "intersection")
ORACLE_CHOICES = ("a", "b", "union", "intersection")

FPR_HI = 0.1
FNR_HI = 0.1


def _as_mask_stack(masks) -> np.ndarray:
    arrs = [np.asarray(m, dtype=bool) for m in masks]
    if not arrs:
        raise InputError("need at least one mask")
    shape = arrs[0].shape
    if any(a.shape != shape for a in arrs):
        raise InputError("masks differ in shape")
    if arrs[0].size == 0:
        raise InputError("empty masks")
    return np.stack(arrs)


def run_intersection(masks) -> np.ndarray:
    """Pixel-wise AND across replicate run masks."""
    return _as_mask_stack(masks).all(axis=0)


def run_majority(masks) -> np.ndarray:
    """Pixel-wise majority vote across replicate run masks.

    Not the pipeline's aggregation rule (that is ``run_intersection``);
    provided as an optional alternative.  Exact half counts as on.
    """
    stack = _as_mask_stack(masks)
    return stack.sum(axis=0) * 2 >= stack.shape[0]


def gradcam_average(maps) -> np.ndarray:
    """Pixel-wise mean of replicate heatmaps, in float64."""
    arrs = [np.asarray(m, dtype=np.float64) for m in maps]
    if not arrs:
        raise InputError("need at least one heatmap")
    shape = arrs[0].shape
    if any(a.shape != shape for a in arrs):
        raise InputError("heatmaps differ in shape")
    for a in arrs:
        if not np.isfinite(a).all():
            raise InputError("heatmap contains non-finite values")
        if a.min() < 0.0 or a.max() > 1.0:
            raise InputError("heatmap values must lie in [0, 1]")
    return np.mean(np.stack(arrs), axis=0, dtype=np.float64)


def fuse(mask_a: np.ndarray, mask_b: np.ndarray, op: str) -> np.ndarray:
    """Combine two masks by pixel-wise OR ("union") or AND ("intersection")."""
    if op not in FUSE_OPS:
        raise InputError(f"unknown fusion op: {op!r}")
    a = np.asarray(mask_a, dtype=bool)
    b = np.asarray(mask_b, dtype=bool)
    if a.shape != b.shape:
        raise InputError(f"mask shape mismatch: {a.shape} vs {b.shape}")
    return a | b if op == "union" else a & b


def false_positive_rate(c: ConfusionCounts) -> float:
    """FP / (FP + TN); 0.0 when there are no true negatives to corrupt."""
    denom = c.fp + c.tn
    return c.fp / denom if denom else 0.0


def false_negative_rate(c: ConfusionCounts) -> float:
    """FN / (FN + TP); 0.0 when there is nothing to miss."""
    denom = c.fn + c.tp
    return c.fn / denom if denom else 0.0


def recommend_fusion(
    conf_a: ConfusionCounts,
    conf_b: ConfusionCounts,
    fpr_hi: float = FPR_HI,
    fnr_hi: float = FNR_HI,
) -> str:
    """Pick a fusion op from both models' error profiles.

    Intersection when both models' false positive rates exceed
    ``fpr_hi``; otherwise union when both false negative rates exceed
    ``fnr_hi``; otherwise "none" (mixed failure modes fuse badly).
    """
    if false_positive_rate(conf_a) > fpr_hi and false_positive_rate(conf_b) > fpr_hi:
        return "intersection"
    if false_negative_rate(conf_a) > fnr_hi and false_negative_rate(conf_b) > fnr_hi:
        return "union"
    return "none"


@dataclass(frozen=True)
class FusionOracle:
    op: str
    dice_a: float
    dice_b: float
    dice_union: float
    dice_intersection: float


def best_fusion_oracle(
    gt: np.ndarray, mask_a: np.ndarray, mask_b: np.ndarray
) -> FusionOracle:
    """Dice of each candidate against ground truth and the best choice.

    Candidates are the two masks and their union and intersection; ties
    break in that order.  A ground-truth peek, so a diagnostic only.
    """
    scores = {
        "a": dice(confusion(gt, mask_a)).value,
        "b": dice(confusion(gt, mask_b)).value,
        "union": dice(confusion(gt, fuse(mask_a, mask_b, "union"))).value,
        "intersection": dice(
            confusion(gt, fuse(mask_a, mask_b, "intersection"))
        ).value,
    }
    best = max(ORACLE_CHOICES, key=lambda k: (scores[k], -ORACLE_CHOICES.index(k)))
    return FusionOracle(
        op=best,
        dice_a=scores["a"],
        dice_b=scores["b"],
        dice_union=scores["union"],
        dice_intersection=scores["intersection"],
    )
