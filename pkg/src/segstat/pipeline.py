"""Batch orchestration: evaluate, compare, fuse, and render over a dataset.

Every stage consumes files produced by earlier stages (manifest, split
manifests, prediction masks, metric CSVs) and writes files for later
ones, so a pipeline can resume at any command.  Work parallelizes
across images with a bounded thread pool; outputs are ordered by image
id regardless of completion order, so results do not depend on the
worker count.

Expected prediction layout, relative to the configured directories:

    predictions/<model>/run_<k>/<image_id>.png      binary masks
    probabilities/<model>/<image_id>.png            16-bit score maps
    heatmaps/<model>/run_<k>/<class>/<image_id>.png 16-bit heatmaps
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import ensemble, masks, metrics, reports, stats
from .config import PipelineConfig
from .errors import InputError
from .splits import DatasetManifest, ManifestEntry

TARGET_CLASSES = (0, 1)


def _pmap(fn, items, jobs: int) -> list:
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def gt_path(cfg: PipelineConfig, entry: ManifestEntry) -> Path:
    p = Path(entry.gt_path)
    return p if p.is_absolute() else cfg.manifest.parent / p


def prediction_path(
    cfg: PipelineConfig, model: str, run: int, image_id: str
) -> Path:
    if cfg.predictions_dir is None:
        raise InputError("predictions_dir is not configured")
    return cfg.predictions_dir / model / f"run_{run}" / f"{image_id}.png"


def probability_path(cfg: PipelineConfig, model: str, image_id: str) -> Path:
    if cfg.probabilities_dir is None:
        raise InputError("probabilities_dir is not configured")
    return cfg.probabilities_dir / model / f"{image_id}.png"


def heatmap_path(
    cfg: PipelineConfig, model: str, run: int, target_class: int, image_id: str
) -> Path:
    if cfg.heatmaps_dir is None:
        raise InputError("heatmaps_dir is not configured")
    return cfg.heatmaps_dir / model / f"run_{run}" / str(target_class) / f"{image_id}.png"


def _models(cfg: PipelineConfig) -> tuple[str, str]:
    return (cfg.model_a, cfg.model_b)


def check_inputs(
    cfg: PipelineConfig,
    entries,
    need_predictions: bool = True,
    need_probabilities: bool = False,
    need_heatmaps: bool = False,
) -> None:
    """Verify every input file exists, reporting all missing paths at once."""
    missing: list[Path] = []
    for entry in entries:
        p = gt_path(cfg, entry)
        if not p.is_file():
            missing.append(p)
        if need_predictions:
            for model in _models(cfg):
                for run in range(1, cfg.runs + 1):
                    p = prediction_path(cfg, model, run, entry.image_id)
                    if not p.is_file():
                        missing.append(p)
        if need_probabilities:
            for model in _models(cfg):
                p = probability_path(cfg, model, entry.image_id)
                if not p.is_file():
                    missing.append(p)
        if need_heatmaps:
            for model in _models(cfg):
                for run in range(1, cfg.runs + 1):
                    for cls in TARGET_CLASSES:
                        p = heatmap_path(cfg, model, run, cls, entry.image_id)
                        if not p.is_file():
                            missing.append(p)
    if missing:
        listing = "\n  ".join(str(p) for p in missing)
        raise InputError(f"{len(missing)} input file(s) missing:\n  {listing}")


def load_model_output(
    cfg: PipelineConfig, model: str, image_id: str
) -> np.ndarray:
    """A model's final mask for one image: the AND of its run masks."""
    run_masks = [
        masks.load_mask(prediction_path(cfg, model, run, image_id), "prediction")
        for run in range(1, cfg.runs + 1)
    ]
    return ensemble.run_intersection(run_masks)


def evaluate_entry(cfg: PipelineConfig, entry: ManifestEntry) -> list[metrics.MetricRecord]:
    """All metric records for one image: both models, all metrics."""
    gt = masks.load_mask(gt_path(cfg, entry), "ground_truth")
    records = []
    for model in _models(cfg):
        mo = load_model_output(cfg, model, entry.image_id)
        if mo.shape != gt.shape:
            raise InputError(
                f"{entry.image_id}/{model}: prediction shape {mo.shape} "
                f"does not match ground truth {gt.shape}"
            )
        conf = masks.confusion(gt, mo)
        for kind, mv in (
            ("dice", metrics.dice(conf)),
            ("sensitivity", metrics.sensitivity(conf)),
            ("specificity", metrics.specificity(conf)),
        ):
            records.append(
                metrics.MetricRecord(
                    image_id=entry.image_id,
                    model=model,
                    kind=kind,
                    value=mv.value,
                    degenerate=mv.degenerate,
                )
            )
        if cfg.probabilities_dir is not None:
            scores = masks.load_probability_map(
                probability_path(cfg, model, entry.image_id)
            )
            if scores.shape != gt.shape:
                raise InputError(
                    f"{entry.image_id}/{model}: probability map shape "
                    f"{scores.shape} does not match ground truth {gt.shape}"
                )
            mv = metrics.auroc(gt, scores, cfg.degenerate_auroc)
            records.append(
                metrics.MetricRecord(
                    image_id=entry.image_id,
                    model=model,
                    kind="auroc",
                    value=mv.value,
                    degenerate=mv.degenerate,
                )
            )
    return records


def evaluate(cfg: PipelineConfig, entries, jobs: int = 1) -> list[metrics.MetricRecord]:
    entries = list(entries)
    if not entries:
        raise InputError("no images to evaluate")
    check_inputs(
        cfg,
        entries,
        need_predictions=True,
        need_probabilities=cfg.probabilities_dir is not None,
    )
    nested = _pmap(lambda e: evaluate_entry(cfg, e), entries, jobs)
    return [rec for recs in nested for rec in recs]


def build_distributions(
    records, cfg: PipelineConfig
) -> dict[str, tuple[metrics.MetricDistribution, metrics.MetricDistribution]]:
    """Group records into per-metric (model_a, model_b) distribution pairs."""
    grouped: dict[tuple[str, str], list] = {}
    for r in records:
        grouped.setdefault((r.kind, r.model), []).append(r)
    models = set(m for _, m in grouped)
    expected = set(_models(cfg))
    if models != expected:
        raise InputError(
            f"metrics cover models {sorted(models)}, config names {sorted(expected)}"
        )
    out = {}
    for kind in metrics.METRIC_KINDS:
        key_a, key_b = (kind, cfg.model_a), (kind, cfg.model_b)
        if key_a not in grouped and key_b not in grouped:
            continue
        if key_a not in grouped or key_b not in grouped:
            raise InputError(f"metric {kind} present for only one model")
        out[kind] = (
            metrics.MetricDistribution.from_records(grouped[key_a]),
            metrics.MetricDistribution.from_records(grouped[key_b]),
        )
    return out


def compare(
    records, cfg: PipelineConfig, classes_by_id: dict[str, str] | None = None
) -> tuple[list[stats.ComparisonResult], list[dict], list[dict]]:
    """Comparison rows, normality-check rows, and per-class summary rows."""
    pairs = build_distributions(records, cfg)
    results = []
    normality_rows = []
    by_class_rows = []
    for kind in metrics.METRIC_KINDS:
        if kind not in pairs:
            continue
        dist_a, dist_b = pairs[kind]
        results.append(
            stats.compare_models(
                dist_a,
                dist_b,
                alpha=cfg.alpha,
                superiority_threshold=cfg.superiority_threshold,
                score_threshold=cfg.score_threshold,
                tie_rule=cfg.tie_rule,
                correction=cfg.continuity_correction,
            )
        )
        for dist in (dist_a, dist_b):
            normality_rows.append(_normality_row(dist, cfg))
        if classes_by_id:
            by_class_rows.extend(
                _by_class_rows(dist_a, dist_b, classes_by_id, cfg)
            )
    return results, normality_rows, by_class_rows


def _normality_row(dist: metrics.MetricDistribution, cfg: PipelineConfig) -> dict:
    """Shapiro-Wilk before and after a fitted Yeo-Johnson transform."""
    values = dist.present_values()
    row: dict = {
        "metric": dist.kind,
        "model": dist.model,
        "n": len(values),
        "w": None,
        "p_value": None,
        "yj_lambda": None,
        "w_transformed": None,
        "p_value_transformed": None,
        "subsampled": False,
    }
    try:
        sw = stats.shapiro_wilk(values, seed=cfg.seed)
    except InputError:
        return row
    row.update(w=sw.w, p_value=sw.p_value, subsampled=sw.subsampled)
    try:
        fit = stats.yeo_johnson_mle(values)
        transformed = stats.yeo_johnson(values, fit.lam)
        sw2 = stats.shapiro_wilk(transformed, seed=cfg.seed)
    except InputError:
        return row
    row.update(
        yj_lambda=fit.lam, w_transformed=sw2.w, p_value_transformed=sw2.p_value
    )
    return row


def _by_class_rows(
    dist_a: metrics.MetricDistribution,
    dist_b: metrics.MetricDistribution,
    classes_by_id: dict[str, str],
    cfg: PipelineConfig,
) -> list[dict]:
    unknown = [i for i in dist_a.image_ids if i not in classes_by_id]
    if unknown:
        raise InputError(
            f"metric rows reference image ids missing from the manifest: "
            f"{', '.join(unknown[:5])}"
        )
    rows = []
    classes = sorted({classes_by_id[i] for i in dist_a.image_ids})
    for cls in classes:
        per_model = {}
        for dist in (dist_a, dist_b):
            values = [
                v
                for i, v in zip(dist.image_ids, dist.values)
                if v is not None and classes_by_id[i] == cls
            ]
            per_model[dist.model] = values
        va, vb = per_model[dist_a.model], per_model[dist_b.model]
        if not va or not vb:
            continue
        sa, sb = stats.summarize(va), stats.summarize(vb)
        delta = sa.median - sb.median
        dagger_model = None
        if abs(delta) >= cfg.superiority_threshold:
            dagger_model = dist_a.model if delta > 0 else dist_b.model
        for dist, summ in ((dist_a, sa), (dist_b, sb)):
            rows.append(
                {
                    "metric": dist_a.kind,
                    "clinical_class": cls,
                    "model": dist.model,
                    "n": summ.n,
                    "mean": summ.mean,
                    "median": summ.median,
                    "sd": summ.sd,
                    "dagger": dagger_model if dagger_model == dist.model else None,
                }
            )
    return rows


def fuse_entry(cfg: PipelineConfig, entry: ManifestEntry, outdir: Path) -> dict:
    gt = masks.load_mask(gt_path(cfg, entry), "ground_truth")
    mo_a = load_model_output(cfg, cfg.model_a, entry.image_id)
    mo_b = load_model_output(cfg, cfg.model_b, entry.image_id)
    for name, mo in ((cfg.model_a, mo_a), (cfg.model_b, mo_b)):
        if mo.shape != gt.shape:
            raise InputError(
                f"{entry.image_id}/{name}: prediction shape {mo.shape} "
                f"does not match ground truth {gt.shape}"
            )
    union = ensemble.fuse(mo_a, mo_b, "union")
    inter = ensemble.fuse(mo_a, mo_b, "intersection")
    masks.save_mask(outdir / "fused" / "union" / f"{entry.image_id}.png", union)
    masks.save_mask(
        outdir / "fused" / "intersection" / f"{entry.image_id}.png", inter
    )
    oracle = ensemble.best_fusion_oracle(gt, mo_a, mo_b)
    recommended = ensemble.recommend_fusion(
        masks.confusion(gt, mo_a),
        masks.confusion(gt, mo_b),
        fpr_hi=cfg.fpr_hi,
        fnr_hi=cfg.fnr_hi,
    )
    return {
        "image_id": entry.image_id,
        "dice_a": oracle.dice_a,
        "dice_b": oracle.dice_b,
        "dice_union": oracle.dice_union,
        "dice_intersection": oracle.dice_intersection,
        "recommended_op": recommended,
        "oracle_op": oracle.op,
    }


def fuse_images(
    cfg: PipelineConfig, entries, outdir: Path, jobs: int = 1
) -> list[dict]:
    entries = list(entries)
    if not entries:
        raise InputError("no images to fuse")
    check_inputs(cfg, entries, need_predictions=True)
    for op in ensemble.FUSE_OPS:
        (outdir / "fused" / op).mkdir(parents=True, exist_ok=True)
    return _pmap(lambda e: fuse_entry(cfg, e, outdir), entries, jobs)


def render_entry(cfg: PipelineConfig, entry: ManifestEntry, outdir: Path) -> None:
    gt = masks.load_mask(gt_path(cfg, entry), "ground_truth")
    outputs = {}
    for model in _models(cfg):
        mo = load_model_output(cfg, model, entry.image_id)
        outputs[model] = mo
        masks.save_rgb(
            outdir / "overlays" / model / f"{entry.image_id}.png",
            masks.overlay(gt, mo),
        )
    union = ensemble.fuse(outputs[cfg.model_a], outputs[cfg.model_b], "union")
    inter = ensemble.fuse(outputs[cfg.model_a], outputs[cfg.model_b], "intersection")
    for op, fused in (("union", union), ("intersection", inter)):
        masks.save_rgb(
            outdir / "overlays" / op / f"{entry.image_id}.png",
            masks.overlay(gt, fused),
        )
    if cfg.heatmaps_dir is not None:
        for model in _models(cfg):
            for cls in TARGET_CLASSES:
                maps = [
                    masks.load_heatmap(
                        heatmap_path(cfg, model, run, cls, entry.image_id), cls
                    ).values
                    for run in range(1, cfg.runs + 1)
                ]
                avg = ensemble.gradcam_average(maps)
                masks.save_probability_map(
                    outdir / "heatmaps_avg" / model / str(cls) / f"{entry.image_id}.png",
                    avg,
                )
                masks.save_rgb(
                    outdir
                    / "heatmaps_rendered"
                    / model
                    / str(cls)
                    / f"{entry.image_id}.png",
                    masks.render_heatmap(avg),
                )


def render_images(
    cfg: PipelineConfig,
    entries,
    outdir: Path,
    jobs: int = 1,
) -> None:
    entries = list(entries)
    if not entries:
        raise InputError("no images to render")
    check_inputs(
        cfg,
        entries,
        need_predictions=True,
        need_heatmaps=cfg.heatmaps_dir is not None,
    )
    for model in _models(cfg):
        (outdir / "overlays" / model).mkdir(parents=True, exist_ok=True)
        if cfg.heatmaps_dir is not None:
            for cls in TARGET_CLASSES:
                (outdir / "heatmaps_avg" / model / str(cls)).mkdir(
                    parents=True, exist_ok=True
                )
                (outdir / "heatmaps_rendered" / model / str(cls)).mkdir(
                    parents=True, exist_ok=True
                )
    for op in ensemble.FUSE_OPS:
        (outdir / "overlays" / op).mkdir(parents=True, exist_ok=True)
    _pmap(lambda e: render_entry(cfg, e, outdir), entries, jobs)


def plot_data(
    records, cfg: PipelineConfig, classes_by_id: dict[str, str] | None, outdir: Path
) -> None:
    """Histogram and Q-Q CSVs behind the distribution figures."""
    pairs = build_distributions(records, cfg)
    hist_entries = []
    qq_entries = []
    for kind in metrics.METRIC_KINDS:
        if kind not in pairs:
            continue
        for dist in pairs[kind]:
            values = dist.present_values()
            if not values:
                continue
            hist_entries.append(
                {
                    "metric": kind,
                    "model": dist.model,
                    "clinical_class": "all",
                    "values": values,
                }
            )
            if classes_by_id:
                for cls in sorted({classes_by_id[i] for i in dist.image_ids}):
                    cls_values = [
                        v
                        for i, v in zip(dist.image_ids, dist.values)
                        if v is not None and classes_by_id[i] == cls
                    ]
                    if cls_values:
                        hist_entries.append(
                            {
                                "metric": kind,
                                "model": dist.model,
                                "clinical_class": cls,
                                "values": cls_values,
                            }
                        )
            if len(values) >= 3 and min(values) != max(values):
                qq_entries.append(
                    {
                        "metric": kind,
                        "model": dist.model,
                        "transform": "raw",
                        "values": values,
                    }
                )
                fit = stats.yeo_johnson_mle(values)
                qq_entries.append(
                    {
                        "metric": kind,
                        "model": dist.model,
                        "transform": "yeo_johnson",
                        "values": list(stats.yeo_johnson(values, fit.lam)),
                    }
                )
    plot_dir = outdir / "plot_data"
    plot_dir.mkdir(parents=True, exist_ok=True)
    reports.write_histograms_csv(plot_dir / "histograms.csv", hist_entries)
    reports.write_qq_csv(plot_dir / "qq.csv", qq_entries)


def manifest_classes(manifest: DatasetManifest) -> dict[str, str]:
    return {e.image_id: e.clinical_class for e in manifest.entries}
