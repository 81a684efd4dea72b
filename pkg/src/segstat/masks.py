"""Image carriers: binary masks, probability maps, heatmaps, overlays.

File conventions (see FORMATS.md for the full contract):

* binary masks      8-bit grayscale PNG, 0 = background, 255 = lesion;
                    on load, any pixel >= 128 is class 1
* probability maps  16-bit grayscale PNG, stored value / 65535 -> [0, 1]
  and heatmaps      (8-bit files are tolerated and scale by 255)
* overlays          8-bit RGB PNG
* colormap          256-row CSV (value,r,g,b) shipped with the package

Ground-truth masks may arrive as color images (some public datasets
paint classes red/blue); those reduce by the rule "any non-black pixel
is class 1".  Model predictions must be single-channel.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InputError, InternalError

BINARIZE_THRESHOLD = 128

# Overlay convention: hit green, miss yellow, false alarm red.
OVERLAY_TP = (0, 255, 0)
OVERLAY_TN = (0, 0, 0)
OVERLAY_FP = (255, 0, 0)
OVERLAY_FN = (255, 255, 0)


@dataclass(frozen=True)
class ConfusionCounts:
    """Pixel-level confusion counts for one (ground truth, prediction) pair."""

    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class Heatmap:
    """Importance map in [0, 1] tagged with the class it explains."""

    values: np.ndarray
    target_class: int


def _open_image(path: Path | str) -> Image.Image:
    path = Path(path)
    try:
        img = Image.open(path)
        img.load()
    except FileNotFoundError:
        raise InputError(f"image not found: {path}")
    except Exception as exc:
        raise InputError(f"unreadable image {path}: {exc}")
    if img.width == 0 or img.height == 0:
        raise InputError(f"zero-area image: {path}")
    return img


def load_mask(path: Path | str, kind: str = "prediction") -> np.ndarray:
    """Read a binary mask PNG as a boolean array.

    Args:
        path: PNG file to read.
        kind: "ground_truth" or "prediction".  Only ground truth may be
            multi-channel (reduced by any-non-black-pixel -> class 1).

    Returns:
        bool array of shape (height, width).
    """
    if kind not in ("ground_truth", "prediction"):
        raise InputError(f"unknown mask kind: {kind!r}")
    img = _open_image(path)
    if img.mode in ("L", "P", "1"):
        arr = np.asarray(img.convert("L"))
        return arr >= BINARIZE_THRESHOLD
    if img.mode in ("RGB", "RGBA"):
        if kind != "ground_truth":
            raise InputError(
                f"multi-channel mask without a channel-reduction rule: {path}"
            )
        arr = np.asarray(img.convert("RGB"))
        return (arr != 0).any(axis=2)
    raise InputError(f"mask {path} has unsupported mode {img.mode!r}; expected 8-bit")


def save_mask(path: Path | str, mask: np.ndarray) -> None:
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2 or mask.size == 0:
        raise InputError("mask must be a non-empty 2-D array")
    Image.fromarray(np.where(mask, 255, 0).astype(np.uint8)).save(path, format="PNG")


def load_probability_map(path: Path | str) -> np.ndarray:
    """Read a probability map PNG as float64 values in [0, 1]."""
    img = _open_image(path)
    if img.mode in ("I;16", "I"):
        arr = np.asarray(img, dtype=np.float64)
        if arr.max(initial=0.0) > 65535:
            raise InputError(f"probability map {path} exceeds 16-bit range")
        return arr / 65535.0
    if img.mode == "L":
        return np.asarray(img, dtype=np.float64) / 255.0
    raise InputError(
        f"probability map {path} has unsupported mode {img.mode!r}; "
        "expected 16-bit grayscale"
    )


def save_probability_map(path: Path | str, values: np.ndarray) -> None:
    values = np.asarray(values, dtype=np.float64)
    _check_unit_range(values, "probability map")
    scaled = np.floor(values * 65535.0 + 0.5).astype(np.uint16)
    Image.fromarray(scaled).save(path, format="PNG")


def load_heatmap(path: Path | str, target_class: int) -> Heatmap:
    if target_class not in (0, 1):
        raise InputError(f"target_class must be 0 or 1, got {target_class}")
    return Heatmap(values=load_probability_map(path), target_class=target_class)


def save_heatmap(path: Path | str, heatmap: Heatmap) -> None:
    save_probability_map(path, heatmap.values)


def _check_unit_range(values: np.ndarray, what: str) -> None:
    if values.ndim != 2 or values.size == 0:
        raise InputError(f"{what} must be a non-empty 2-D array")
    if not np.isfinite(values).all():
        raise InputError(f"{what} contains non-finite values")
    if values.min() < 0.0 or values.max() > 1.0:
        raise InputError(f"{what} values must lie in [0, 1]")


def confusion(gt: np.ndarray, pred: np.ndarray) -> ConfusionCounts:
    """Count TP/FP/TN/FN pixels between two same-shape boolean masks."""
    gt = np.asarray(gt, dtype=bool)
    pred = np.asarray(pred, dtype=bool)
    if gt.shape != pred.shape:
        raise InputError(f"mask shape mismatch: {gt.shape} vs {pred.shape}")
    if gt.size == 0:
        raise InputError("empty masks")
    tp = int(np.count_nonzero(gt & pred))
    fp = int(np.count_nonzero(~gt & pred))
    fn = int(np.count_nonzero(gt & ~pred))
    tn = gt.size - tp - fp - fn
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def overlay(gt: np.ndarray, pred: np.ndarray) -> np.ndarray:
    """Render agreement between masks as an RGB image.

    True positives are green, true negatives black, false positives red,
    false negatives yellow.
    """
    gt = np.asarray(gt, dtype=bool)
    pred = np.asarray(pred, dtype=bool)
    if gt.shape != pred.shape:
        raise InputError(f"mask shape mismatch: {gt.shape} vs {pred.shape}")
    out = np.zeros(gt.shape + (3,), dtype=np.uint8)
    out[gt & pred] = OVERLAY_TP
    out[~gt & pred] = OVERLAY_FP
    out[gt & ~pred] = OVERLAY_FN
    return out


def save_rgb(path: Path | str, image: np.ndarray) -> None:
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise InputError("RGB image must be a uint8 array of shape (h, w, 3)")
    Image.fromarray(image, mode="RGB").save(path, format="PNG")


_COLORMAP: np.ndarray | None = None


def colormap_table() -> np.ndarray:
    """The shipped 256-row blue-to-red colormap as a (256, 3) uint8 array."""
    global _COLORMAP
    if _COLORMAP is None:
        text = resources.files("segstat").joinpath("data/colormap.csv").read_text()
        rows = list(csv.DictReader(text.splitlines()))
        if len(rows) != 256:
            raise InternalError(f"colormap table has {len(rows)} rows, expected 256")
        _COLORMAP = np.array(
            [(int(r["r"]), int(r["g"]), int(r["b"])) for r in rows], dtype=np.uint8
        )
    return _COLORMAP


def render_heatmap(values: np.ndarray) -> np.ndarray:
    """Map heatmap values in [0, 1] to RGB through the shipped colormap.

    Row lookup uses index = floor(value * 255 + 0.5).
    """
    values = np.asarray(values, dtype=np.float64)
    _check_unit_range(values, "heatmap")
    idx = np.floor(values * 255.0 + 0.5).astype(np.intp)
    return colormap_table()[idx]
