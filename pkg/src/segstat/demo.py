"""Builder for the repository's 12-image demo dataset.

The demo lives under demo/ in the repository and is regenerated
byte-identically by ``python -m segstat.demo <dir>``.  Every mask is a
hand-constructed arithmetic pattern (no randomness), sized 32x24, and
the set covers the interesting regimes on purpose:

    img01  both models perfect
    img02  empty ground truth (degenerate metrics, one model adds FPs)
    img03  models predict disjoint halves of the lesion (union wins)
    img04  both models over-segment (high FP -> intersection advised)
    img05  both models under-segment (high FN -> union advised)
    img06  mixed failure modes (no fusion advised)
    img07  one model predicts nothing
    img08  replicate runs disagree (aggregation visibly intersects)
    img09  scattered pseudo-noise masks
    img10  ground truth covers the full frame (degenerate specificity)
    img11  ring lesion, each model offset a different way
    img12  both models identical and imperfect (per-image delta ties)

Eight images are labeled "benign", four "malignant", so class-level
reports have two groups to work with.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from . import masks
from .splits import DatasetManifest, ManifestEntry

WIDTH, HEIGHT = 32, 24
MODEL_A, MODEL_B = "T_II", "L_MI"
RUNS = 5

_X, _Y = np.meshgrid(np.arange(WIDTH), np.arange(HEIGHT))


def _rect(x0: int, x1: int, y0: int, y1: int) -> np.ndarray:
    return (_X >= x0) & (_X < x1) & (_Y >= y0) & (_Y < y1)


def _empty() -> np.ndarray:
    return np.zeros((HEIGHT, WIDTH), dtype=bool)


def _full() -> np.ndarray:
    return np.ones((HEIGHT, WIDTH), dtype=bool)


def _ring(shift: int = 0) -> np.ndarray:
    outer = _rect(8 + shift, 24 + shift, 6, 18)
    inner = _rect(12 + shift, 20 + shift, 10, 14)
    return outer & ~inner


def _noise_gt() -> np.ndarray:
    return (3 * _X + 5 * _Y) % 7 == 0


def _spec() -> dict:
    """image -> (clinical_class, gt, per-model list of run masks)."""
    images: dict = {}

    gt = _rect(8, 24, 6, 18)
    images["img01"] = ("benign", gt, {MODEL_A: [gt] * RUNS, MODEL_B: [gt] * RUNS})

    blob = _rect(4, 7, 4, 7)
    images["img02"] = (
        "benign",
        _empty(),
        {MODEL_A: [_empty()] * RUNS, MODEL_B: [blob] * RUNS},
    )

    gt = _rect(4, 28, 4, 20)
    images["img03"] = (
        "malignant",
        gt,
        {
            MODEL_A: [gt & _rect(4, 16, 4, 20)] * RUNS,
            MODEL_B: [gt & _rect(16, 28, 4, 20)] * RUNS,
        },
    )

    gt = _rect(14, 18, 10, 14)
    images["img04"] = (
        "benign",
        gt,
        {
            MODEL_A: [gt | _rect(2, 14, 2, 22)] * RUNS,
            MODEL_B: [gt | _rect(18, 30, 2, 22)] * RUNS,
        },
    )

    gt = _rect(6, 26, 4, 20)
    images["img05"] = (
        "malignant",
        gt,
        {
            MODEL_A: [_rect(6, 14, 4, 20)] * RUNS,
            MODEL_B: [_rect(18, 26, 4, 20)] * RUNS,
        },
    )

    gt = _rect(10, 22, 8, 16)
    images["img06"] = (
        "benign",
        gt,
        {
            MODEL_A: [gt | _rect(0, 10, 8, 16)] * RUNS,
            MODEL_B: [_rect(10, 16, 8, 16)] * RUNS,
        },
    )

    gt = _rect(12, 20, 8, 16)
    images["img07"] = (
        "malignant",
        gt,
        {MODEL_A: [_rect(12, 20, 8, 12)] * RUNS, MODEL_B: [_empty()] * RUNS},
    )

    gt = _rect(8, 24, 6, 18)
    runs_a = [gt | _rect(24 + k, 25 + k, 6, 18) for k in range(RUNS)]
    runs_b = [gt & ~_rect(8, 24, 6 + 2 * k, 8 + 2 * k) for k in range(RUNS)]
    images["img08"] = ("benign", gt, {MODEL_A: runs_a, MODEL_B: runs_b})

    gt = _noise_gt()
    pred_a = (gt & ((_X * _Y) % 13 != 0)) | ((2 * _X + 3 * _Y) % 17 == 0)
    pred_b = (gt & ((_X + 2 * _Y) % 5 != 0)) | ((_X + 7 * _Y) % 19 == 0)
    images["img09"] = (
        "benign",
        gt,
        {MODEL_A: [pred_a] * RUNS, MODEL_B: [pred_b] * RUNS},
    )

    hole = _rect(0, 2, 0, 2)
    images["img10"] = (
        "malignant",
        _full(),
        {MODEL_A: [_full()] * RUNS, MODEL_B: [_full() & ~hole] * RUNS},
    )

    images["img11"] = (
        "benign",
        _ring(0),
        {MODEL_A: [_ring(1)] * RUNS, MODEL_B: [_ring(-1)] * RUNS},
    )

    gt = _rect(10, 22, 8, 16)
    pred = _rect(10, 22, 8, 14)
    images["img12"] = ("benign", gt, {MODEL_A: [pred] * RUNS, MODEL_B: [pred] * RUNS})

    return images


def _probability(final_mask: np.ndarray, model: str) -> np.ndarray:
    salt = 1 if model == MODEL_A else 2
    dither = ((3 * _X + 7 * _Y + salt) % 5) / 100.0
    return 0.12 + 0.78 * final_mask.astype(np.float64) + dither


def _heatmap(final_mask: np.ndarray, run: int, target_class: int) -> np.ndarray:
    level = 0.4 + 0.08 * run
    m = final_mask.astype(np.float64)
    if target_class == 1:
        return m * level + (_X / WIDTH) * 0.15
    return (1.0 - m) * level + (_Y / HEIGHT) * 0.15


def build(root: Path | str) -> None:
    """Write the full demo tree (manifest, masks, probabilities, heatmaps)."""
    root = Path(root)
    images = _spec()

    entries = []
    (root / "ground_truth").mkdir(parents=True, exist_ok=True)
    for image_id, (cls, gt, _) in images.items():
        masks.save_mask(root / "ground_truth" / f"{image_id}.png", gt)
        entries.append(
            ManifestEntry(
                image_id=image_id,
                clinical_class=cls,
                gt_path=f"ground_truth/{image_id}.png",
            )
        )
    DatasetManifest(entries=tuple(entries)).save(root / "manifest.csv")

    for image_id, (_, _, by_model) in images.items():
        for model, run_masks in by_model.items():
            final = np.logical_and.reduce(run_masks)
            for run_idx, mask in enumerate(run_masks, start=1):
                d = root / "predictions" / model / f"run_{run_idx}"
                d.mkdir(parents=True, exist_ok=True)
                masks.save_mask(d / f"{image_id}.png", mask)
                for cls in (0, 1):
                    hd = root / "heatmaps" / model / f"run_{run_idx}" / str(cls)
                    hd.mkdir(parents=True, exist_ok=True)
                    masks.save_probability_map(
                        hd / f"{image_id}.png", _heatmap(final, run_idx, cls)
                    )
            pd = root / "probabilities" / model
            pd.mkdir(parents=True, exist_ok=True)
            masks.save_probability_map(
                pd / f"{image_id}.png", _probability(final, model)
            )

    (root / "segstat.ini").write_text(
        "[dataset]\n"
        "manifest = manifest.csv\n"
        "predictions_dir = predictions\n"
        "probabilities_dir = probabilities\n"
        "heatmaps_dir = heatmaps\n"
        f"model_a = {MODEL_A}\n"
        f"model_b = {MODEL_B}\n"
        f"runs = {RUNS}\n"
        "\n"
        "[splits]\n"
        "seed = 42\n"
        "count = 5\n"
        "train_pct = 80\n"
        "\n"
        "[output]\n"
        "dir = out\n"
    )


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    target = Path(argv[0]) if argv else Path("demo")
    build(target)
    print(f"demo dataset written to {target}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
