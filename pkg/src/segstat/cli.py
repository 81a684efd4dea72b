"""Command-line entry point.

Subcommands mirror the pipeline stages and each one resumes from files
written by earlier stages:

    segstat split     draw the seeded replicate train/test splits
    segstat deplete   shrink one split along the depletion schedule
    segstat evaluate  score predictions into a per-image metric CSV
    segstat compare   statistical comparison tables from a metric CSV
    segstat fuse      combine the two models' masks, report and save
    segstat render    overlays, averaged heatmaps, plot-data CSVs

Exit codes: 0 success, 1 invalid input or usage, 2 internal error.
"""

from __future__ import annotations

import argparse
import os
import sys
import traceback
from pathlib import Path

from . import pipeline, reports
from .config import PipelineConfig, load_config
from .errors import InputError, InternalError
from .splits import DatasetManifest, SplitManifest, class_report, deplete, make_splits
from .version import VERSION

JOBS_ENV = "SEGSTAT_JOBS"


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; remap to 1 (input error)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise InputError(message)


def _add_common(sub: argparse.ArgumentParser, split_index: bool = False) -> None:
    sub.add_argument("--config", required=True, help="INI config file")
    sub.add_argument("--seed", type=int, default=None, help="override [splits] seed")
    sub.add_argument(
        "--jobs",
        type=int,
        default=None,
        help=f"worker threads (default: ${JOBS_ENV} or 1)",
    )
    sub.add_argument(
        "--output", type=Path, default=None, help="override [output] dir"
    )
    if split_index:
        sub.add_argument(
            "--split-index",
            type=int,
            default=None,
            help="operate on one split's test side instead of the whole manifest",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="segstat", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"segstat {VERSION}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("split", help="draw seeded train/test splits")
    _add_common(p)
    p.add_argument(
        "--stratified",
        action="store_true",
        default=None,
        help="shuffle and cut within each clinical class",
    )

    p = subs.add_parser("deplete", help="walk one split down the depletion schedule")
    _add_common(p)
    p.add_argument("--split-index", type=int, default=1, help="split to deplete")

    p = subs.add_parser("evaluate", help="score predictions into metrics CSV")
    _add_common(p, split_index=True)

    p = subs.add_parser("compare", help="two-model comparison tables")
    _add_common(p)
    p.add_argument(
        "--metrics-csv",
        type=Path,
        default=None,
        help="metrics CSV to compare (default: <output>/metrics.csv)",
    )

    p = subs.add_parser("fuse", help="fuse the two models' masks")
    _add_common(p, split_index=True)

    p = subs.add_parser("render", help="overlays, heatmaps, and plot data")
    _add_common(p, split_index=True)

    return parser


def _effective_config(args) -> PipelineConfig:
    cfg = load_config(args.config)
    jobs = args.jobs
    if jobs is None:
        raw = os.environ.get(JOBS_ENV, "").strip()
        if raw:
            try:
                jobs = int(raw)
            except ValueError:
                raise InputError(f"${JOBS_ENV} must be an integer, got {raw!r}")
    overrides = {"seed": args.seed, "jobs": jobs}
    if args.output is not None:
        overrides["output_dir"] = args.output
    if getattr(args, "stratified", None):
        overrides["stratified"] = True
    return cfg.with_overrides(**overrides)


def _split_path(cfg: PipelineConfig, index: int, train_pct: int) -> Path:
    return (
        cfg.output_dir
        / "splits"
        / f"split_{index}_{train_pct}_{100 - train_pct}.csv"
    )


def _require_manifest(cfg: PipelineConfig) -> DatasetManifest:
    if not cfg.manifest.is_file():
        raise InputError(f"manifest not found: {cfg.manifest}")
    return DatasetManifest.load(cfg.manifest)


def _entries_for(cfg: PipelineConfig, split_index: int | None):
    """Whole manifest, or one split's test side when an index is given."""
    if split_index is None:
        return _require_manifest(cfg).entries, ""
    path = _split_path(cfg, split_index, cfg.train_pct)
    if not path.is_file():
        raise InputError(f"split manifest not found: {path} (run 'segstat split')")
    split = SplitManifest.load(path)
    return split.test, f"_split_{split_index}"


def _write_split_outputs(cfg: PipelineConfig, split: SplitManifest) -> list[Path]:
    splits_dir = cfg.output_dir / "splits"
    splits_dir.mkdir(parents=True, exist_ok=True)
    path = _split_path(cfg, split.split_index, split.train_pct)
    split.save(path)
    rows = class_report(split)
    report_path = splits_dir / (
        f"class_report_split_{split.split_index}_"
        f"{split.train_pct}_{split.test_pct}.csv"
    )
    reports.write_class_report_csv(report_path, rows)
    return [path, report_path]


def cmd_split(args) -> int:
    cfg = _effective_config(args)
    manifest = _require_manifest(cfg)
    splits = make_splits(
        manifest,
        seed=cfg.seed,
        count=cfg.split_count,
        train_pct=cfg.train_pct,
        stratified=cfg.stratified,
    )
    for split in splits:
        for path in _write_split_outputs(cfg, split):
            print(f"wrote {path}")
        print(reports.class_report_table(class_report(split)))
    return 0


def cmd_deplete(args) -> int:
    cfg = _effective_config(args)
    path = _split_path(cfg, args.split_index, cfg.train_pct)
    if not path.is_file():
        raise InputError(f"split manifest not found: {path} (run 'segstat split')")
    base = SplitManifest.load(path)
    stages = deplete(base, schedule=cfg.depletion_schedule, seed=cfg.seed)
    for stage in stages:
        for out_path in _write_split_outputs(cfg, stage):
            print(f"wrote {out_path}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _effective_config(args)
    entries, suffix = _entries_for(cfg, args.split_index)
    records = pipeline.evaluate(cfg, entries, jobs=cfg.jobs)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    out = cfg.output_dir / f"metrics{suffix}.csv"
    reports.write_metrics_csv(out, records)
    print(f"wrote {out} ({len(records)} rows)")
    return 0


def cmd_compare(args) -> int:
    cfg = _effective_config(args)
    metrics_csv = args.metrics_csv or cfg.output_dir / "metrics.csv"
    if not metrics_csv.is_file():
        raise InputError(
            f"metrics CSV not found: {metrics_csv} (run 'segstat evaluate')"
        )
    records = reports.read_metrics_csv(metrics_csv)
    classes = pipeline.manifest_classes(_require_manifest(cfg))
    results, normality_rows, by_class_rows = pipeline.compare(records, cfg, classes)
    stem = metrics_csv.stem
    suffix = stem[len("metrics"):] if stem.startswith("metrics") else ""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    comparison_csv = cfg.output_dir / f"comparison{suffix}.csv"
    reports.write_comparison_csv(comparison_csv, results)
    table = reports.comparison_table(results)
    (cfg.output_dir / f"comparison{suffix}.txt").write_text(table)
    reports.write_normality_csv(cfg.output_dir / f"normality{suffix}.csv", normality_rows)
    if by_class_rows:
        reports.write_by_class_csv(cfg.output_dir / f"by_class{suffix}.csv", by_class_rows)
    print(f"wrote {comparison_csv}")
    print(table)
    return 0


def cmd_fuse(args) -> int:
    cfg = _effective_config(args)
    entries, suffix = _entries_for(cfg, args.split_index)
    rows = pipeline.fuse_images(cfg, entries, cfg.output_dir, jobs=cfg.jobs)
    out = cfg.output_dir / f"fusion{suffix}.csv"
    reports.write_fusion_csv(out, rows)
    print(f"wrote {out} ({len(rows)} rows)")
    return 0


def cmd_render(args) -> int:
    cfg = _effective_config(args)
    entries, suffix = _entries_for(cfg, args.split_index)
    metrics_csv = cfg.output_dir / f"metrics{suffix}.csv"
    if not metrics_csv.is_file():
        raise InputError(
            f"metrics CSV not found: {metrics_csv} (run 'segstat evaluate')"
        )
    records = reports.read_metrics_csv(metrics_csv)
    pipeline.render_images(cfg, entries, cfg.output_dir, jobs=cfg.jobs)
    classes = pipeline.manifest_classes(_require_manifest(cfg))
    pipeline.plot_data(records, cfg, classes, cfg.output_dir)
    print(f"wrote renders under {cfg.output_dir}")
    return 0


_COMMANDS = {
    "split": cmd_split,
    "deplete": cmd_deplete,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
    "fuse": cmd_fuse,
    "render": cmd_render,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (InternalError, AssertionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 2
    except SystemExit:
        raise
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
