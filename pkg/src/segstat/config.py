"""Pipeline configuration: an INI file with typed, validated sections.

Relative paths are resolved against the config file's directory.  Every
key is checked against the documented grammar (FORMATS.md); unknown
sections or keys, malformed values, and policy names outside their
enumeration are input errors, so a typo cannot silently fall back to a
default.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import InputError
from .metrics import AUROC_POLICIES
from .splits import DEFAULT_DEPLETION
from .stats import TIE_RULES

_SCHEMA: dict[str, set[str]] = {
    "dataset": {
        "manifest",
        "predictions_dir",
        "probabilities_dir",
        "heatmaps_dir",
        "model_a",
        "model_b",
        "runs",
    },
    "splits": {"seed", "count", "train_pct", "stratified", "depletion_schedule"},
    "metrics": {"degenerate_auroc"},
    "stats": {
        "alpha",
        "superiority_threshold",
        "score_threshold",
        "tie_rule",
        "continuity_correction",
    },
    "fusion": {"fpr_hi", "fnr_hi"},
    "output": {"dir"},
}


@dataclass(frozen=True)
class PipelineConfig:
    manifest: Path = Path("manifest.csv")
    predictions_dir: Path | None = None
    probabilities_dir: Path | None = None
    heatmaps_dir: Path | None = None
    model_a: str = "T_II"
    model_b: str = "L_MI"
    runs: int = 5
    seed: int = 42
    split_count: int = 5
    train_pct: int = 80
    stratified: bool = False
    depletion_schedule: tuple[tuple[int, int], ...] = DEFAULT_DEPLETION
    degenerate_auroc: str = "missing"
    alpha: float = 0.05
    superiority_threshold: float = 0.05
    score_threshold: float = 0.9
    tie_rule: str = "not_above"
    continuity_correction: bool = False
    fpr_hi: float = 0.1
    fnr_hi: float = 0.1
    output_dir: Path = Path("out")
    jobs: int = 1

    def __post_init__(self):
        if self.degenerate_auroc not in AUROC_POLICIES:
            raise InputError(
                f"degenerate_auroc must be one of {AUROC_POLICIES}, "
                f"got {self.degenerate_auroc!r}"
            )
        if self.tie_rule not in TIE_RULES:
            raise InputError(
                f"tie_rule must be one of {TIE_RULES}, got {self.tie_rule!r}"
            )
        if self.model_a == self.model_b:
            raise InputError("model_a and model_b must differ")
        if self.runs < 1:
            raise InputError("runs must be at least 1")
        if not 0 < self.train_pct < 100:
            raise InputError("train_pct must be strictly between 0 and 100")
        if not 0.0 < self.alpha < 1.0:
            raise InputError("alpha must lie in (0, 1)")
        if self.jobs < 1:
            raise InputError("jobs must be at least 1")
        for name in ("superiority_threshold", "score_threshold", "fpr_hi", "fnr_hi"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InputError(f"{name} must lie in [0, 1]")

    def with_overrides(self, **kwargs) -> "PipelineConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **kwargs) if kwargs else self


def _parse_bool(section: str, key: str, raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise InputError(f"[{section}] {key} must be a boolean, got {raw!r}")


def _parse_int(section: str, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"[{section}] {key} must be an integer, got {raw!r}")


def _parse_float(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise InputError(f"[{section}] {key} must be a number, got {raw!r}")


def _parse_schedule(raw: str) -> tuple[tuple[int, int], ...]:
    stages = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        bits = part.split(":")
        if len(bits) != 2:
            raise InputError(f"bad depletion stage {part!r}; expected TRAIN:TEST")
        try:
            stages.append((int(bits[0]), int(bits[1])))
        except ValueError:
            raise InputError(f"bad depletion stage {part!r}; expected integers")
    if not stages:
        raise InputError("depletion_schedule is empty")
    return tuple(stages)


def load_config(path: Path | str) -> PipelineConfig:
    """Parse and validate an INI config file."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise InputError(f"cannot parse config {path}: {exc}")

    for section in parser.sections():
        if section not in _SCHEMA:
            raise InputError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise InputError(f"unknown config key [{section}] {key}")

    base = path.parent

    def get(section: str, key: str) -> str | None:
        if parser.has_option(section, key):
            return parser.get(section, key)
        return None

    def get_path(section: str, key: str) -> Path | None:
        raw = get(section, key)
        if raw is None or not raw.strip():
            return None
        p = Path(raw.strip())
        return p if p.is_absolute() else base / p

    kwargs: dict = {}
    if (p := get_path("dataset", "manifest")) is not None:
        kwargs["manifest"] = p
    for key in ("predictions_dir", "probabilities_dir", "heatmaps_dir"):
        if (p := get_path("dataset", key)) is not None:
            kwargs[key] = p
    if (raw := get("dataset", "model_a")) is not None:
        kwargs["model_a"] = raw.strip()
    if (raw := get("dataset", "model_b")) is not None:
        kwargs["model_b"] = raw.strip()
    if (raw := get("dataset", "runs")) is not None:
        kwargs["runs"] = _parse_int("dataset", "runs", raw)

    if (raw := get("splits", "seed")) is not None:
        kwargs["seed"] = _parse_int("splits", "seed", raw)
    if (raw := get("splits", "count")) is not None:
        kwargs["split_count"] = _parse_int("splits", "count", raw)
    if (raw := get("splits", "train_pct")) is not None:
        kwargs["train_pct"] = _parse_int("splits", "train_pct", raw)
    if (raw := get("splits", "stratified")) is not None:
        kwargs["stratified"] = _parse_bool("splits", "stratified", raw)
    if (raw := get("splits", "depletion_schedule")) is not None:
        kwargs["depletion_schedule"] = _parse_schedule(raw)

    if (raw := get("metrics", "degenerate_auroc")) is not None:
        kwargs["degenerate_auroc"] = raw.strip()

    if (raw := get("stats", "alpha")) is not None:
        kwargs["alpha"] = _parse_float("stats", "alpha", raw)
    if (raw := get("stats", "superiority_threshold")) is not None:
        kwargs["superiority_threshold"] = _parse_float(
            "stats", "superiority_threshold", raw
        )
    if (raw := get("stats", "score_threshold")) is not None:
        kwargs["score_threshold"] = _parse_float("stats", "score_threshold", raw)
    if (raw := get("stats", "tie_rule")) is not None:
        kwargs["tie_rule"] = raw.strip()
    if (raw := get("stats", "continuity_correction")) is not None:
        kwargs["continuity_correction"] = _parse_bool(
            "stats", "continuity_correction", raw
        )

    if (raw := get("fusion", "fpr_hi")) is not None:
        kwargs["fpr_hi"] = _parse_float("fusion", "fpr_hi", raw)
    if (raw := get("fusion", "fnr_hi")) is not None:
        kwargs["fnr_hi"] = _parse_float("fusion", "fnr_hi", raw)

    if (p := get_path("output", "dir")) is not None:
        kwargs["output_dir"] = p

    return PipelineConfig(**kwargs)
