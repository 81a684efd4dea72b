"""Distribution summaries and the two-model statistical comparison.

The comparison protocol for a metric:

1. summarize each model's per-image values (median, mean, sample sd);
2. check normality with the Shapiro-Wilk W test (Royston's AS R94
   approximation), before and after a Yeo-Johnson transform whose
   exponent is fit by maximum likelihood;
3. metric values stay non-normal in practice, so significance comes
   from Mood's median test at alpha = 0.05 (star), and a practical
   margin of 0.05 on the medians earns the superiority marker (dagger);
4. per-image deltas are tallied by sign, and values reaching 0.9 are
   counted per model.

Everything here is deterministic; the only seeded step is the
subsample Shapiro-Wilk takes when given more than 5000 values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import InputError
from .metrics import (
    MetricDistribution,
    delta_m,
    threshold_count,
)
from .rng import SplitMix64, sample_indices

TIE_RULES = ("not_above", "above")

_NORMAL = NormalDist()

SHAPIRO_MAX_N = 5000


@dataclass(frozen=True)
class Summary:
    n: int
    mean: float
    median: float
    sd: float


def summarize(values) -> Summary:
    """Mean, midpoint median, and sample sd of a non-empty value list."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        raise InputError("cannot summarize an empty list")
    if not np.isfinite(arr).all():
        raise InputError("values contain non-finite entries")
    sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return Summary(
        n=int(arr.size),
        mean=float(arr.mean()),
        median=float(np.median(arr)),
        sd=sd,
    )


# ---------------------------------------------------------------------------
# Shapiro-Wilk (Royston 1995 approximation, AS R94)

_SW_C1 = (0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_SW_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
_SW_C3 = (0.5440, -0.39978, 0.025054, -6.714e-4)
_SW_C4 = (1.3822, -0.77857, 0.062767, -0.0020322)
_SW_C5 = (-1.5861, -0.31082, -0.083751, 0.0038915)
_SW_C6 = (-0.4803, -0.082676, 0.0030302)
_SW_G = (-2.273, 0.459)


def _poly(coeffs, x: float) -> float:
    return sum(c * x**i for i, c in enumerate(coeffs))


@dataclass(frozen=True)
class ShapiroWilkResult:
    w: float
    p_value: float
    n_used: int
    subsampled: bool


def shapiro_wilk(values, seed: int = 0) -> ShapiroWilkResult:
    """W test of normality for 3 <= n <= 5000 values.

    Larger samples are reduced to 5000 by a deterministic subsample
    drawn with the run seed; the result records that it happened.
    """
    vals = [float(v) for v in values]
    if len(vals) < 3:
        raise InputError("shapiro_wilk needs at least 3 values")
    if not all(math.isfinite(v) for v in vals):
        raise InputError("values contain non-finite entries")
    if min(vals) == max(vals):
        raise InputError("shapiro_wilk is undefined for constant input")

    subsampled = False
    if len(vals) > SHAPIRO_MAX_N:
        keep = sample_indices(len(vals), SHAPIRO_MAX_N, SplitMix64(seed))
        vals = [vals[i] for i in sorted(keep)]
        subsampled = True
        if min(vals) == max(vals):
            raise InputError("subsample is constant; cannot test")

    x = np.sort(np.asarray(vals, dtype=np.float64))
    n = x.size

    m = np.array(
        [_NORMAL.inv_cdf((i - 0.375) / (n + 0.25)) for i in range(1, n + 1)]
    )
    ssq_m = float(np.dot(m, m))
    if n == 3:
        a = np.array([-math.sqrt(0.5), 0.0, math.sqrt(0.5)])
    else:
        rsn = 1.0 / math.sqrt(n)
        a_n = m[-1] / math.sqrt(ssq_m) + _poly(_SW_C1, rsn)
        if n > 5:
            a_n1 = m[-2] / math.sqrt(ssq_m) + _poly(_SW_C2, rsn)
            fac = math.sqrt(
                (ssq_m - 2.0 * m[-1] ** 2 - 2.0 * m[-2] ** 2)
                / (1.0 - 2.0 * a_n**2 - 2.0 * a_n1**2)
            )
            a = m / fac
            a[-2], a[1] = a_n1, -a_n1
        else:
            fac = math.sqrt((ssq_m - 2.0 * m[-1] ** 2) / (1.0 - 2.0 * a_n**2))
            a = m / fac
        a[-1], a[0] = a_n, -a_n

    xm = x - x.mean()
    w = float(np.dot(a, x) ** 2 / np.dot(xm, xm))
    w = min(w, 1.0)

    if n == 3:
        p = (6.0 / math.pi) * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        p = min(max(p, 0.0), 1.0)
        return ShapiroWilkResult(w=w, p_value=p, n_used=n, subsampled=subsampled)

    w1 = 1.0 - w
    if w1 <= 0.0:
        return ShapiroWilkResult(w=w, p_value=1.0, n_used=n, subsampled=subsampled)
    y = math.log(w1)
    if n <= 11:
        gamma = _poly(_SW_G, float(n))
        if y >= gamma:
            return ShapiroWilkResult(
                w=w, p_value=1e-99, n_used=n, subsampled=subsampled
            )
        y = -math.log(gamma - y)
        mu = _poly(_SW_C3, float(n))
        sigma = math.exp(_poly(_SW_C4, float(n)))
    else:
        ln_n = math.log(n)
        mu = _poly(_SW_C5, ln_n)
        sigma = math.exp(_poly(_SW_C6, ln_n))
    z = (y - mu) / sigma
    p = 0.5 * math.erfc(z / math.sqrt(2.0))
    return ShapiroWilkResult(w=w, p_value=p, n_used=n, subsampled=subsampled)


# ---------------------------------------------------------------------------
# Yeo-Johnson power transform

def yeo_johnson(values, lam: float) -> np.ndarray:
    """Apply the Yeo-Johnson transform with exponent ``lam``.

    Strictly monotone in the data for every exponent, defined on all
    reals; ``lam`` = 1 is (up to shift) the identity.
    """
    y = np.asarray(values, dtype=np.float64)
    if not np.isfinite(y).all():
        raise InputError("values contain non-finite entries")
    out = np.empty_like(y)
    pos = y >= 0
    if lam == 0.0:
        out[pos] = np.log1p(y[pos])
    else:
        out[pos] = np.expm1(lam * np.log1p(y[pos])) / lam
    neg = ~pos
    if lam == 2.0:
        out[neg] = -np.log1p(-y[neg])
    else:
        out[neg] = -np.expm1((2.0 - lam) * np.log1p(-y[neg])) / (2.0 - lam)
    return out


def yeo_johnson_loglik(values, lam: float) -> float:
    """Profile log-likelihood of Gaussianity after transforming."""
    y = np.asarray(values, dtype=np.float64)
    if y.size < 2:
        raise InputError("need at least 2 values")
    z = yeo_johnson(y, lam)
    var = float(z.var())
    if not math.isfinite(var) or var <= 0.0:
        return -math.inf
    jac = float(np.sum(np.sign(y) * np.log1p(np.abs(y))))
    return -0.5 * y.size * math.log(var) + (lam - 1.0) * jac


@dataclass(frozen=True)
class YeoJohnsonFit:
    lam: float
    loglik: float


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def yeo_johnson_mle(
    values, lo: float = -5.0, hi: float = 5.0, tol: float = 1e-6
) -> YeoJohnsonFit:
    """Exponent maximizing the profile likelihood, by golden section.

    The bracket is [-5, 5] and the section search runs to an interval
    width of ``tol``; the likelihood is unimodal on the data this
    pipeline produces.
    """
    y = np.asarray(values, dtype=np.float64)
    if y.size < 2:
        raise InputError("need at least 2 values")
    if not np.isfinite(y).all():
        raise InputError("values contain non-finite entries")
    if float(y.min()) == float(y.max()):
        raise InputError("yeo_johnson_mle is undefined for constant input")

    def f(lam: float) -> float:
        return yeo_johnson_loglik(y, lam)

    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    lam = 0.5 * (a + b)
    return YeoJohnsonFit(lam=lam, loglik=f(lam))


# ---------------------------------------------------------------------------
# Mood's median test

@dataclass(frozen=True)
class MoodResult:
    statistic: float
    p_value: float
    grand_median: float
    contingency: tuple[tuple[int, int], tuple[int, int]]
    significant: bool


def moods_median_test(
    a,
    b,
    tie_rule: str = "not_above",
    correction: bool = False,
    alpha: float = 0.05,
) -> MoodResult:
    """Chi-square test that two samples share a median.

    Pools both samples, takes the grand median, and tests the 2x2 table
    of (sample) x (above / not above) counts with one degree of freedom.
    Values equal to the grand median land in the "not above" row under
    the default tie rule; ``tie_rule="above"`` counts them as above.
    Yates' continuity correction is off by default; ``correction=True``
    shrinks each observed count toward its expectation by up to 0.5.
    """
    if tie_rule not in TIE_RULES:
        raise InputError(f"unknown tie rule: {tie_rule!r}")
    xs = np.asarray(list(a), dtype=np.float64)
    ys = np.asarray(list(b), dtype=np.float64)
    if xs.size == 0 or ys.size == 0:
        raise InputError("both samples must be non-empty")
    if not (np.isfinite(xs).all() and np.isfinite(ys).all()):
        raise InputError("values contain non-finite entries")

    grand = float(np.median(np.concatenate([xs, ys])))
    if tie_rule == "not_above":
        above_a = int(np.count_nonzero(xs > grand))
        above_b = int(np.count_nonzero(ys > grand))
    else:
        above_a = int(np.count_nonzero(xs >= grand))
        above_b = int(np.count_nonzero(ys >= grand))
    table = (
        (above_a, int(xs.size) - above_a),
        (above_b, int(ys.size) - above_b),
    )

    col_above = above_a + above_b
    col_rest = int(xs.size + ys.size) - col_above
    if col_above == 0 or col_rest == 0:
        raise InputError(
            "all pooled values fall on one side of the grand median; "
            "the test is undefined"
        )

    total = float(xs.size + ys.size)
    stat = 0.0
    for i, row_n in enumerate((float(xs.size), float(ys.size))):
        for j, col_n in enumerate((float(col_above), float(col_rest))):
            observed = float(table[i][j])
            expected = row_n * col_n / total
            if correction:
                shift = min(0.5, abs(expected - observed))
                observed += math.copysign(shift, expected - observed)
            stat += (observed - expected) ** 2 / expected
    p = math.erfc(math.sqrt(stat / 2.0))
    return MoodResult(
        statistic=stat,
        p_value=p,
        grand_median=grand,
        contingency=table,
        significant=p < alpha,
    )


# ---------------------------------------------------------------------------
# Full two-model comparison for one metric

@dataclass(frozen=True)
class ComparisonResult:
    kind: str
    model_a: str
    model_b: str
    summary_a: Summary
    summary_b: Summary
    delta_median: float
    delta_mean: float
    classification: str
    p_value: float | None
    significant: bool
    dagger: str | None
    dagger_mean: str | None
    n_gt: int
    n_eq: int
    n_lt: int
    n_skipped: int
    n_a_at_threshold: int
    n_b_at_threshold: int
    score_threshold: float


def compare_models(
    dist_a: MetricDistribution,
    dist_b: MetricDistribution,
    alpha: float = 0.05,
    superiority_threshold: float = 0.05,
    score_threshold: float = 0.9,
    tie_rule: str = "not_above",
    correction: bool = False,
) -> ComparisonResult:
    """Compare the same metric across the two models.

    Both distributions must cover the same image set (before any
    missing-value exclusion).  Per-image deltas skip images where either
    side is missing; the Mood test runs on each model's present values.
    A pooled-constant metric (every value identical) has an undefined
    test and reports no p-value rather than failing the run.
    """
    if dist_a.kind != dist_b.kind:
        raise InputError(f"metric mismatch: {dist_a.kind} vs {dist_b.kind}")
    if dist_a.image_ids != dist_b.image_ids:
        raise InputError("image-set mismatch between the two distributions")

    va, vb = dist_a.present_values(), dist_b.present_values()
    if not va or not vb:
        raise InputError(f"no usable {dist_a.kind} values for comparison")
    summary_a, summary_b = summarize(va), summarize(vb)

    delta_median, classification = delta_m(summary_a.median, summary_b.median)
    delta_mean = summary_a.mean - summary_b.mean

    try:
        mood = moods_median_test(
            va, vb, tie_rule=tie_rule, correction=correction, alpha=alpha
        )
        p_value: float | None = mood.p_value
        significant = mood.significant
    except InputError:
        p_value = None
        significant = False

    def _dagger(delta: float) -> str | None:
        if abs(delta) >= superiority_threshold:
            return "a" if delta > 0 else "b"
        return None

    n_gt = n_eq = n_lt = n_skipped = 0
    for x, y in zip(dist_a.values, dist_b.values):
        if x is None or y is None:
            n_skipped += 1
        elif x > y:
            n_gt += 1
        elif x < y:
            n_lt += 1
        else:
            n_eq += 1

    return ComparisonResult(
        kind=dist_a.kind,
        model_a=dist_a.model,
        model_b=dist_b.model,
        summary_a=summary_a,
        summary_b=summary_b,
        delta_median=delta_median,
        delta_mean=delta_mean,
        classification=classification,
        p_value=p_value,
        significant=significant,
        dagger=_dagger(delta_median),
        dagger_mean=_dagger(delta_mean),
        n_gt=n_gt,
        n_eq=n_eq,
        n_lt=n_lt,
        n_skipped=n_skipped,
        n_a_at_threshold=threshold_count(va, score_threshold),
        n_b_at_threshold=threshold_count(vb, score_threshold),
        score_threshold=score_threshold,
    )
