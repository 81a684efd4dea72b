import csv

import numpy as np
import pytest

from segstat import reports, stats
from segstat.errors import InputError
from segstat.metrics import MetricDistribution, MetricRecord


def test_fmt_scalars():
    assert reports.fmt(None) == ""
    assert reports.fmt(True) == "1"
    assert reports.fmt(False) == "0"
    assert reports.fmt(0.1) == "0.1"
    assert reports.fmt(1 / 3) == repr(1 / 3)
    assert reports.fmt("dice") == "dice"
    assert reports.fmt(7) == "7"


def test_fmt_float_text_roundtrips():
    for v in (0.1, 1e-17, 2 / 3, 0.9282):
        assert float(reports.fmt(v)) == v


def test_round_half_up():
    assert reports.round_half_up(0.5) == 1
    assert reports.round_half_up(1.5) == 2
    assert reports.round_half_up(2.5) == 3
    assert reports.round_half_up(2.4) == 2
    assert reports.round_half_up(-0.5) == -1
    assert reports.round_half_up(-1.2) == -1
    assert reports.round_half_up(8.12) == 8


def test_metrics_csv_roundtrip(tmp_path):
    records = [
        MetricRecord("img2", "L_MI", "dice", 0.875, False),
        MetricRecord("img1", "T_II", "auroc", None, True),
        MetricRecord("img1", "T_II", "dice", 1 / 3, False),
    ]
    path = tmp_path / "metrics.csv"
    reports.write_metrics_csv(path, records)
    back = reports.read_metrics_csv(path)
    assert sorted(back, key=lambda r: (r.image_id, r.kind)) == sorted(
        records, key=lambda r: (r.image_id, r.kind)
    )
    lines = path.read_text().splitlines()
    assert lines[0] == "image_id,model,metric,value,degenerate"
    # rows come out sorted by (image_id, model, metric)
    assert lines[1].startswith("img1,T_II,auroc,,1")


def test_read_metrics_csv_errors(tmp_path):
    missing = tmp_path / "nope.csv"
    with pytest.raises(InputError, match="cannot read"):
        reports.read_metrics_csv(missing)
    bad = tmp_path / "bad.csv"
    bad.write_text("image_id,model\nx,y\n")
    with pytest.raises(InputError, match="columns"):
        reports.read_metrics_csv(bad)
    empty = tmp_path / "empty.csv"
    empty.write_text("image_id,model,metric,value,degenerate\n")
    with pytest.raises(InputError, match="no rows"):
        reports.read_metrics_csv(empty)


def make_comparison(values_a, values_b, kind="dice"):
    dist_a = MetricDistribution.from_records(
        [
            MetricRecord(f"i{k:02d}", "T_II", kind, v, False)
            for k, v in enumerate(values_a)
        ]
    )
    dist_b = MetricDistribution.from_records(
        [
            MetricRecord(f"i{k:02d}", "L_MI", kind, v, False)
            for k, v in enumerate(values_b)
        ]
    )
    return stats.compare_models(dist_a, dist_b)


def test_comparison_csv_schema(tmp_path):
    res = make_comparison([0.9, 0.91, 0.95, 0.88], [0.7, 0.72, 0.8, 0.69])
    path = tmp_path / "comparison.csv"
    reports.write_comparison_csv(path, [res])
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    assert list(rows[0]) == list(reports.COMPARISON_FIELDS)
    assert rows[0]["metric"] == "dice"
    assert rows[0]["dagger"] == "T_II"
    assert float(rows[0]["delta_median"]) == res.delta_median
    assert rows[0]["n_gt"] == "4"


def test_comparison_table_markers():
    a = [0.90, 0.91, 0.92, 0.93, 0.94, 0.95] * 4
    b = [0.60, 0.61, 0.62, 0.63, 0.64, 0.65] * 4
    text = reports.comparison_table([make_comparison(a, b)])
    assert "*" in text  # significance star
    assert "+" in text  # superiority marker
    assert "T_II" in text and "L_MI" in text
    assert "100" in text  # all deltas positive
    tied = reports.comparison_table([make_comparison([0.5, 0.6], [0.5, 0.6])])
    assert "*" not in tied
    # the exponent sign in the p column is the only plus allowed
    assert "+" not in tied.replace("e+", "e")
    assert reports.comparison_table([]) == ""


def test_histogram_counts():
    values = [0.0, 0.024, 0.5, 0.96, 1.0, 1.0]
    got = reports.histogram(values)
    assert len(got) == 20
    assert sum(count for _, _, count in got) == len(values)
    assert got[0][2] == 2
    assert got[0][0] == 0.0 and got[0][1] == pytest.approx(0.05)
    assert got[-1][2] == 3
    assert got[-1][0] == pytest.approx(0.95) and got[-1][1] == 1.0
    assert got[10][2] == 1  # 0.5 falls in [0.50, 0.55)


def test_histogram_rejects_out_of_range():
    with pytest.raises(InputError):
        reports.histogram([1.2])


def test_qq_gaussian_tracks_identity():
    gen = np.random.default_rng(77)
    pts = reports.qq_points(gen.normal(size=4000))
    inner = [(t, s) for t, s in pts if abs(t) < 1.0]
    assert inner
    for t, s in inner:
        assert abs(t - s) < 0.05


def test_qq_points_are_standardized():
    pts = reports.qq_points([10.0, 20.0, 30.0, 40.0])
    samples = [s for _, s in pts]
    assert np.mean(samples) == pytest.approx(0.0, abs=1e-12)
    assert np.std(samples, ddof=1) == pytest.approx(1.0, abs=1e-12)
    theos = [t for t, _ in pts]
    assert theos == sorted(theos)


def test_qq_errors():
    with pytest.raises(InputError):
        reports.qq_points([1.0, 2.0])
    with pytest.raises(InputError):
        reports.qq_points([3.0, 3.0, 3.0])


def test_histograms_csv(tmp_path):
    path = tmp_path / "hist.csv"
    reports.write_histograms_csv(
        path,
        [
            {
                "metric": "dice",
                "model": "T_II",
                "clinical_class": "all",
                "values": [0.2, 0.4, 0.9],
            }
        ],
    )
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 20
    assert list(rows[0]) == list(reports.HISTOGRAM_FIELDS)
    assert sum(int(r["count"]) for r in rows) == 3


def test_qq_csv(tmp_path):
    path = tmp_path / "qq.csv"
    reports.write_qq_csv(
        path,
        [
            {
                "metric": "dice",
                "model": "T_II",
                "transform": "raw",
                "values": [0.1, 0.5, 0.7, 0.9],
            }
        ],
    )
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 4
    assert rows[0]["transform"] == "raw"


def test_class_report_table_rounds_half_up():
    class Row:
        clinical_class = "benign"
        train_count = 10132
        train_pct = 91.875
        test_count = 2536
        test_pct = 91.95
    text = reports.class_report_table([Row()])
    assert "92" in text
    assert "benign" in text
