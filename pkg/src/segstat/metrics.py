"""Per-image segmentation metrics and the two-model delta.

All metrics live in [0, 1].  Degenerate inputs (a ground truth with a
single class) make some metrics vacuous; those records keep a value
where one is defined by policy (e.g. sensitivity 1.0 when there is
nothing to find) and always carry a ``degenerate`` flag so downstream
reports can count them.

``delta_m`` compares the same metric on the same image across the two
training regimes: positive means the first (transfer-learned, "T_II")
model scored higher, negative means the second ("L_MI") did.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .masks import ConfusionCounts

METRIC_KINDS = ("auroc", "dice", "sensitivity", "specificity")

TII_BETTER = "TII_better"
TIE = "tie"
LMI_BETTER = "LMI_better"

AUROC_POLICIES = ("missing", "accuracy_at_threshold")

SUPERIORITY_THRESHOLD = 0.05
SCORE_THRESHOLD = 0.9


@dataclass(frozen=True)
class MetricValue:
    value: float | None
    degenerate: bool = False


@dataclass(frozen=True)
class MetricRecord:
    """One CSV row of the evaluation output."""

    image_id: str
    model: str
    kind: str
    value: float | None
    degenerate: bool


def sensitivity(c: ConfusionCounts) -> MetricValue:
    """TP / (TP + FN); vacuously 1.0 when the ground truth is empty."""
    if c.tp + c.fn == 0:
        return MetricValue(1.0, degenerate=True)
    return MetricValue(c.tp / (c.tp + c.fn))


def specificity(c: ConfusionCounts) -> MetricValue:
    """TN / (TN + FP); vacuously 1.0 when the ground truth is all lesion."""
    if c.tn + c.fp == 0:
        return MetricValue(1.0, degenerate=True)
    return MetricValue(c.tn / (c.tn + c.fp))


def precision(c: ConfusionCounts) -> MetricValue:
    """TP / (TP + FP); vacuously 1.0 when the prediction is empty."""
    if c.tp + c.fp == 0:
        return MetricValue(1.0, degenerate=True)
    return MetricValue(c.tp / (c.tp + c.fp))


def dice(c: ConfusionCounts) -> MetricValue:
    """2TP / (2TP + FP + FN); 1.0 only when both masks are empty."""
    denom = 2 * c.tp + c.fp + c.fn
    if denom == 0:
        return MetricValue(1.0, degenerate=True)
    return MetricValue(2 * c.tp / denom)


def _midranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing the mean rank of their run."""
    _, inverse, counts = np.unique(scores, return_inverse=True, return_counts=True)
    upper = np.cumsum(counts)
    mid = (upper - counts + 1 + upper) / 2.0
    return mid[inverse]


def auroc(
    gt: np.ndarray, scores: np.ndarray, degenerate_policy: str = "missing"
) -> MetricValue:
    """Area under the ROC curve from per-pixel scores.

    Computed with the rank statistic (Mann-Whitney form, midranks for
    tied scores), which equals the trapezoidal area of the threshold
    sweep.  A single-class ground truth has no ROC curve; the policy
    decides whether the record is missing or scored as the fraction of
    pixels on the correct side of 0.5 ("accuracy_at_threshold").
    """
    if degenerate_policy not in AUROC_POLICIES:
        raise InputError(f"unknown degenerate_auroc policy: {degenerate_policy!r}")
    gt = np.asarray(gt, dtype=bool).ravel()
    scores = np.asarray(scores, dtype=np.float64).ravel()
    if gt.shape != scores.shape:
        raise InputError(f"shape mismatch: {gt.shape} vs {scores.shape}")
    if gt.size == 0:
        raise InputError("empty inputs")
    if not np.isfinite(scores).all():
        raise InputError("scores contain non-finite values")
    n_pos = int(np.count_nonzero(gt))
    n_neg = gt.size - n_pos
    if n_pos == 0 or n_neg == 0:
        if degenerate_policy == "missing":
            return MetricValue(None, degenerate=True)
        correct = (scores >= 0.5) if n_neg == 0 else (scores < 0.5)
        return MetricValue(float(np.mean(correct)), degenerate=True)
    ranks = _midranks(scores)
    u = ranks[gt].sum() - n_pos * (n_pos + 1) / 2.0
    return MetricValue(float(u / (n_pos * n_neg)))


def delta_m(s_tii: float, s_lmi: float) -> tuple[float, str]:
    """Difference and sign class between the two regimes' scores."""
    for name, s in (("s_tii", s_tii), ("s_lmi", s_lmi)):
        if not np.isfinite(s) or not 0.0 <= s <= 1.0:
            raise InputError(f"{name} must lie in [0, 1], got {s}")
    delta = s_tii - s_lmi
    if delta > 0:
        cls = TII_BETTER
    elif delta < 0:
        cls = LMI_BETTER
    else:
        cls = TIE
    return delta, cls


def is_superior(delta: float, threshold: float = SUPERIORITY_THRESHOLD) -> bool:
    """Whether a summary-statistic gap clears the practical margin."""
    return abs(delta) >= threshold


def threshold_count(values, tau: float = SCORE_THRESHOLD) -> int:
    """How many present values reach tau (inclusive)."""
    return sum(1 for v in values if v is not None and v >= tau)


@dataclass(frozen=True)
class MetricDistribution:
    """All per-image values of one metric for one model.

    Entries are sorted by image id at construction so every summary and
    comparison is independent of evaluation order.  ``values`` is aligned
    with ``image_ids``; a ``None`` value marks an image whose record is
    missing by policy.  Summaries come from ``stats.summarize``.
    """

    model: str
    kind: str
    image_ids: tuple[str, ...]
    values: tuple[float | None, ...] = field(repr=False)

    @staticmethod
    def from_records(records) -> "MetricDistribution":
        records = list(records)
        if not records:
            raise InputError("no records")
        models = {r.model for r in records}
        kinds = {r.kind for r in records}
        if len(models) != 1 or len(kinds) != 1:
            raise InputError("records mix models or metrics")
        ids = [r.image_id for r in records]
        if len(set(ids)) != len(ids):
            raise InputError("duplicate image ids in records")
        ordered = sorted(records, key=lambda r: r.image_id)
        return MetricDistribution(
            model=models.pop(),
            kind=kinds.pop(),
            image_ids=tuple(r.image_id for r in ordered),
            values=tuple(r.value for r in ordered),
        )

    def present_values(self) -> list[float]:
        return [v for v in self.values if v is not None]

    @property
    def n_missing(self) -> int:
        return sum(1 for v in self.values if v is None)
