"""CSV schemas, plain-text tables, and plot-data exports.

All writers emit "\n" line endings and format floats with ``repr`` so
outputs are byte-identical across runs and platforms.  Display tables
round to four decimals and percentages to whole numbers (half away from
zero), matching the layout of the published result tables.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from statistics import NormalDist

import numpy as np

from .errors import InputError
from .metrics import MetricRecord
from .stats import ComparisonResult

_NORMAL = NormalDist()

METRICS_FIELDS = ("image_id", "model", "metric", "value", "degenerate")
COMPARISON_FIELDS = (
    "metric",
    "model_a_median",
    "model_b_median",
    "delta_median",
    "p_value",
    "significant",
    "dagger",
    "n_gt",
    "n_eq",
    "n_lt",
    "n_a_ge_0.9",
    "n_b_ge_0.9",
)
NORMALITY_FIELDS = (
    "metric",
    "model",
    "n",
    "w",
    "p_value",
    "yj_lambda",
    "w_transformed",
    "p_value_transformed",
    "subsampled",
)
BY_CLASS_FIELDS = (
    "metric",
    "clinical_class",
    "model",
    "n",
    "mean",
    "median",
    "sd",
    "dagger",
)
FUSION_FIELDS = (
    "image_id",
    "dice_a",
    "dice_b",
    "dice_union",
    "dice_intersection",
    "recommended_op",
    "oracle_op",
)
CLASS_REPORT_FIELDS = (
    "clinical_class",
    "train_count",
    "train_pct",
    "test_count",
    "test_pct",
)
HISTOGRAM_FIELDS = ("metric", "model", "clinical_class", "bin_low", "bin_high", "count")
QQ_FIELDS = ("metric", "model", "transform", "theoretical_q", "sample_q")

HISTOGRAM_BINS = 20


def fmt(value) -> str:
    """Stable scalar-to-text rule used by every CSV writer."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def round_half_up(x: float) -> int:
    """Round to the nearest integer, halves away from zero."""
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def _write_rows(path: Path | str, fields, rows) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(fields)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def write_metrics_csv(path: Path | str, records) -> None:
    ordered = sorted(records, key=lambda r: (r.image_id, r.model, r.kind))
    _write_rows(
        path,
        METRICS_FIELDS,
        ([r.image_id, r.model, r.kind, r.value, r.degenerate] for r in ordered),
    )


def read_metrics_csv(path: Path | str) -> list[MetricRecord]:
    path = Path(path)
    try:
        f = open(path, newline="")
    except OSError as exc:
        raise InputError(f"cannot read metrics CSV {path}: {exc}")
    with f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or set(METRICS_FIELDS) - set(reader.fieldnames):
            raise InputError(
                f"metrics CSV {path} must have columns {', '.join(METRICS_FIELDS)}"
            )
        records = []
        for row in reader:
            raw = row["value"]
            records.append(
                MetricRecord(
                    image_id=row["image_id"],
                    model=row["model"],
                    kind=row["metric"],
                    value=float(raw) if raw else None,
                    degenerate=row["degenerate"] == "1",
                )
            )
    if not records:
        raise InputError(f"metrics CSV {path} has no rows")
    return records


def write_comparison_csv(path: Path | str, results: list[ComparisonResult]) -> None:
    rows = []
    for r in results:
        dagger = r.model_a if r.dagger == "a" else r.model_b if r.dagger == "b" else None
        rows.append(
            [
                r.kind,
                r.summary_a.median,
                r.summary_b.median,
                r.delta_median,
                r.p_value,
                r.significant,
                dagger,
                r.n_gt,
                r.n_eq,
                r.n_lt,
                r.n_a_at_threshold,
                r.n_b_at_threshold,
            ]
        )
    _write_rows(path, COMPARISON_FIELDS, rows)


def write_normality_csv(path: Path | str, rows: list[dict]) -> None:
    _write_rows(
        path,
        NORMALITY_FIELDS,
        ([row.get(k) for k in NORMALITY_FIELDS] for row in rows),
    )


def write_by_class_csv(path: Path | str, rows: list[dict]) -> None:
    _write_rows(
        path,
        BY_CLASS_FIELDS,
        ([row.get(k) for k in BY_CLASS_FIELDS] for row in rows),
    )


def write_fusion_csv(path: Path | str, rows: list[dict]) -> None:
    ordered = sorted(rows, key=lambda r: r["image_id"])
    _write_rows(
        path,
        FUSION_FIELDS,
        ([row.get(k) for k in FUSION_FIELDS] for row in ordered),
    )


def write_class_report_csv(path: Path | str, rows) -> None:
    _write_rows(
        path,
        CLASS_REPORT_FIELDS,
        (
            [r.clinical_class, r.train_count, r.train_pct, r.test_count, r.test_pct]
            for r in rows
        ),
    )


def histogram(values, bins: int = HISTOGRAM_BINS) -> list[tuple[float, float, int]]:
    """Equal-width bin counts over [0, 1]; the last bin includes 1.0."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise InputError("histogram values must lie in [0, 1]")
    counts, edges = np.histogram(arr, bins=bins, range=(0.0, 1.0))
    return [
        (float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(bins)
    ]


def write_histograms_csv(path: Path | str, entries: list[dict]) -> None:
    rows = []
    for e in entries:
        for lo, hi, count in histogram(e["values"]):
            rows.append([e["metric"], e["model"], e["clinical_class"], lo, hi, count])
    _write_rows(path, HISTOGRAM_FIELDS, rows)


def qq_points(values) -> list[tuple[float, float]]:
    """Normal quantile-quantile coordinates for a sample.

    Theoretical quantiles use the (i - 0.375) / (n + 0.25) plotting
    positions; sample values are standardized by mean and sample sd, so
    a Gaussian sample tracks the identity line.
    """
    arr = np.sort(np.asarray(list(values), dtype=np.float64))
    n = arr.size
    if n < 3:
        raise InputError("need at least 3 values for a Q-Q export")
    sd = float(arr.std(ddof=1))
    if sd == 0.0:
        raise InputError("Q-Q export is undefined for constant input")
    standardized = (arr - arr.mean()) / sd
    theo = [_NORMAL.inv_cdf((i - 0.375) / (n + 0.25)) for i in range(1, n + 1)]
    return [(float(t), float(s)) for t, s in zip(theo, standardized)]


def write_qq_csv(path: Path | str, entries: list[dict]) -> None:
    rows = []
    for e in entries:
        for t, s in qq_points(e["values"]):
            rows.append([e["metric"], e["model"], e["transform"], t, s])
    _write_rows(path, QQ_FIELDS, rows)


# ---------------------------------------------------------------------------
# Plain-text tables

def _fmt4(x: float | None) -> str:
    return "" if x is None else f"{x:.4f}"


def _pct(part: int, whole: int) -> int:
    return round_half_up(100.0 * part / whole) if whole else 0


def comparison_table(results: list[ComparisonResult]) -> str:
    """Fixed-width summary table: medians, means, sds, stars and daggers.

    A star marks a significant Mood's median test; a dagger marks the
    model whose summary statistic leads by at least the practical
    margin.
    """
    if not results:
        return ""
    model_a, model_b = results[0].model_a, results[0].model_b
    lines = []
    header = (
        f"{'metric':<12} {'stat':<7} {model_a:>14} {model_b:>14} "
        f"{'delta':>10} {'p':>12}"
    )
    lines.append(header)
    lines.append("-" * len(header))
    for r in results:
        star = "*" if r.significant else ""
        p_txt = "" if r.p_value is None else f"{r.p_value:.3e}"
        for stat, va, vb, delta, dag in (
            ("median", r.summary_a.median, r.summary_b.median, r.delta_median, r.dagger),
            ("mean", r.summary_a.mean, r.summary_b.mean, r.delta_mean, r.dagger_mean),
            ("sd", r.summary_a.sd, r.summary_b.sd, None, None),
        ):
            mark_a = (star if stat != "sd" else "") + ("+" if dag == "a" else "")
            mark_b = (star if stat != "sd" else "") + ("+" if dag == "b" else "")
            lines.append(
                f"{r.kind:<12} {stat:<7} "
                f"{_fmt4(va) + mark_a:>14} {_fmt4(vb) + mark_b:>14} "
                f"{_fmt4(delta):>10} {p_txt if stat == 'median' else '':>12}"
            )
    lines.append("")
    lines.append("per-image delta sign counts and threshold counts")
    header2 = (
        f"{'metric':<12} {'n>0':>8} {'n=0':>8} {'n<0':>8} {'skipped':>8} "
        f"{'n_' + model_a + '>=thr':>16} {'n_' + model_b + '>=thr':>16}"
    )
    lines.append(header2)
    lines.append("-" * len(header2))
    for r in results:
        n_pairs = r.n_gt + r.n_eq + r.n_lt
        gt_txt = f"{r.n_gt} ({_pct(r.n_gt, n_pairs)})" if n_pairs else str(r.n_gt)
        eq_txt = f"{r.n_eq} ({_pct(r.n_eq, n_pairs)})" if n_pairs else str(r.n_eq)
        lt_txt = f"{r.n_lt} ({_pct(r.n_lt, n_pairs)})" if n_pairs else str(r.n_lt)
        lines.append(
            f"{r.kind:<12} {gt_txt:>8} {eq_txt:>8} {lt_txt:>8} {r.n_skipped:>8} "
            f"{r.n_a_at_threshold:>16} {r.n_b_at_threshold:>16}"
        )
    return "\n".join(lines) + "\n"


def class_report_table(rows) -> str:
    header = f"{'class':<16} {'train':>8} {'train%':>7} {'test':>8} {'test%':>7}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(
            f"{r.clinical_class:<16} {r.train_count:>8} "
            f"{round_half_up(r.train_pct):>7} {r.test_count:>8} "
            f"{round_half_up(r.test_pct):>7}"
        )
    return "\n".join(lines) + "\n"
