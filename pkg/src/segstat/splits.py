"""Dataset manifests, seeded train/test splits, and depletion ladders.

A dataset manifest is a CSV of (image_id, clinical_class, gt_path).
``make_splits`` draws k replicate splits at a ratio (default five at
80:20): each split Fisher-Yates-shuffles the manifest with the pinned
generator seeded by ``seed XOR split_index`` and cuts the train side at
floor(n * train_pct / 100).

``deplete`` walks a split down a schedule such as 60:40 -> 40:60 ->
20:80 -> 10:90 by moving a seeded random subset from train to test at
each stage, so every later test set contains every earlier one and
trained-on images never re-enter a test side.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InputError
from .rng import SplitMix64, fisher_yates, sample_indices
from .version import VERSION

_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")

MANIFEST_FIELDS = ("image_id", "clinical_class", "gt_path")
DEFAULT_DEPLETION = ((60, 40), (40, 60), (20, 80), (10, 90))


@dataclass(frozen=True)
class ManifestEntry:
    image_id: str
    clinical_class: str
    gt_path: str


def _validate_entries(entries: list[ManifestEntry]) -> None:
    if not entries:
        raise InputError("manifest has no entries")
    seen = set()
    for e in entries:
        if not _ID_RE.match(e.image_id):
            raise InputError(f"invalid image id: {e.image_id!r}")
        if e.image_id in seen:
            raise InputError(f"duplicate image id: {e.image_id}")
        seen.add(e.image_id)
        if not e.clinical_class:
            raise InputError(f"empty clinical class for {e.image_id}")
        if not e.gt_path:
            raise InputError(f"empty gt_path for {e.image_id}")


def class_counts(entries) -> dict[str, int]:
    counts: dict[str, int] = {}
    for e in entries:
        counts[e.clinical_class] = counts.get(e.clinical_class, 0) + 1
    return counts


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]

    def __post_init__(self):
        _validate_entries(list(self.entries))

    @property
    def n(self) -> int:
        return len(self.entries)

    @staticmethod
    def load(path: Path | str) -> "DatasetManifest":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise InputError(f"cannot read manifest {path}: {exc}")
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames is None or not set(MANIFEST_FIELDS) <= set(
            reader.fieldnames
        ):
            raise InputError(
                f"manifest {path} must have columns {', '.join(MANIFEST_FIELDS)}"
            )
        entries = [
            ManifestEntry(
                image_id=row["image_id"].strip(),
                clinical_class=row["clinical_class"].strip(),
                gt_path=row["gt_path"].strip(),
            )
            for row in reader
        ]
        return DatasetManifest(entries=tuple(entries))

    def save(self, path: Path | str) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(MANIFEST_FIELDS)
            for e in self.entries:
                writer.writerow([e.image_id, e.clinical_class, e.gt_path])


@dataclass(frozen=True)
class SplitManifest:
    """One train/test assignment of a manifest, with its provenance."""

    seed: int
    split_index: int
    train_pct: int
    test_pct: int
    train: tuple[ManifestEntry, ...]
    test: tuple[ManifestEntry, ...]
    stratified: bool = False
    version: str = field(default=VERSION)

    def __post_init__(self):
        if self.train_pct + self.test_pct != 100:
            raise InputError("ratio must sum to 100")
        if not self.train or not self.test:
            raise InputError("both split sides must be non-empty")
        train_ids = {e.image_id for e in self.train}
        test_ids = {e.image_id for e in self.test}
        if train_ids & test_ids:
            raise InputError("split sides overlap")

    @property
    def n(self) -> int:
        return len(self.train) + len(self.test)

    @property
    def ratio(self) -> str:
        return f"{self.train_pct}:{self.test_pct}"

    def train_class_counts(self) -> dict[str, int]:
        return class_counts(self.train)

    def test_class_counts(self) -> dict[str, int]:
        return class_counts(self.test)

    def save(self, path: Path | str) -> None:
        with open(path, "w", newline="") as f:
            f.write("# segstat split manifest\n")
            f.write(f"# version: {self.version}\n")
            f.write(f"# seed: {self.seed}\n")
            f.write(f"# split_index: {self.split_index}\n")
            f.write(f"# ratio: {self.ratio}\n")
            f.write(f"# stratified: {str(self.stratified).lower()}\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(list(MANIFEST_FIELDS) + ["side"])
            for side, entries in (("train", self.train), ("test", self.test)):
                for e in entries:
                    writer.writerow([e.image_id, e.clinical_class, e.gt_path, side])

    @staticmethod
    def load(path: Path | str) -> "SplitManifest":
        path = Path(path)
        try:
            lines = path.read_text().splitlines()
        except OSError as exc:
            raise InputError(f"cannot read split manifest {path}: {exc}")
        header: dict[str, str] = {}
        body_start = 0
        for i, line in enumerate(lines):
            if not line.startswith("#"):
                body_start = i
                break
            if ":" in line:
                key, _, val = line.lstrip("# ").partition(":")
                header[key.strip()] = val.strip()
        else:
            raise InputError(f"split manifest {path} has no data rows")
        for key in ("seed", "split_index", "ratio"):
            if key not in header:
                raise InputError(f"split manifest {path} is missing '{key}' header")
        try:
            train_pct, test_pct = (int(p) for p in header["ratio"].split(":"))
        except ValueError:
            raise InputError(f"bad ratio in split manifest {path}")
        reader = csv.DictReader(io.StringIO("\n".join(lines[body_start:])))
        train: list[ManifestEntry] = []
        test: list[ManifestEntry] = []
        for row in reader:
            entry = ManifestEntry(
                image_id=row["image_id"],
                clinical_class=row["clinical_class"],
                gt_path=row["gt_path"],
            )
            side = row.get("side", "")
            if side == "train":
                train.append(entry)
            elif side == "test":
                test.append(entry)
            else:
                raise InputError(f"bad side {side!r} in split manifest {path}")
        return SplitManifest(
            seed=int(header["seed"]),
            split_index=int(header["split_index"]),
            train_pct=train_pct,
            test_pct=test_pct,
            train=tuple(train),
            test=tuple(test),
            stratified=header.get("stratified", "false") == "true",
            version=header.get("version", VERSION),
        )


def _cut(entries: list[ManifestEntry], train_pct: int) -> int:
    return (len(entries) * train_pct) // 100


def make_split(
    manifest: DatasetManifest,
    seed: int,
    split_index: int,
    train_pct: int = 80,
    stratified: bool = False,
) -> SplitManifest:
    """Draw one seeded split at train_pct : (100 - train_pct)."""
    if not 0 < train_pct < 100:
        raise InputError("train_pct must be strictly between 0 and 100")
    rng = SplitMix64(seed ^ split_index)
    if stratified:
        train: list[ManifestEntry] = []
        test: list[ManifestEntry] = []
        by_class: dict[str, list[ManifestEntry]] = {}
        for e in manifest.entries:
            by_class.setdefault(e.clinical_class, []).append(e)
        for cls in sorted(by_class):
            group = by_class[cls]
            fisher_yates(group, rng)
            cut = _cut(group, train_pct)
            train.extend(group[:cut])
            test.extend(group[cut:])
    else:
        pool = list(manifest.entries)
        fisher_yates(pool, rng)
        cut = _cut(pool, train_pct)
        train, test = pool[:cut], pool[cut:]
    if not train or not test:
        raise InputError(
            f"ratio {train_pct}:{100 - train_pct} leaves an empty side "
            f"for n={manifest.n}"
        )
    return SplitManifest(
        seed=seed,
        split_index=split_index,
        train_pct=train_pct,
        test_pct=100 - train_pct,
        train=tuple(train),
        test=tuple(test),
        stratified=stratified,
    )


def make_splits(
    manifest: DatasetManifest,
    seed: int,
    count: int = 5,
    train_pct: int = 80,
    stratified: bool = False,
) -> list[SplitManifest]:
    """Draw ``count`` replicate splits, indexed 1..count."""
    if count < 1:
        raise InputError("count must be at least 1")
    return [
        make_split(manifest, seed, i, train_pct=train_pct, stratified=stratified)
        for i in range(1, count + 1)
    ]


def deplete(
    split: SplitManifest,
    schedule=DEFAULT_DEPLETION,
    seed: int | None = None,
) -> list[SplitManifest]:
    """Shrink a split's train side along a schedule of ratios.

    Each stage moves a seeded uniform random subset of the current train
    side to the test side, hitting a train size of exactly
    floor(n * train_pct / 100).  Test sets are therefore strictly
    nested along the schedule.  The mover is seeded like the original
    split (``seed XOR split_index``); by default the split's own seed
    is reused.
    """
    schedule = [(int(t), int(u)) for t, u in schedule]
    for t, u in schedule:
        if t + u != 100:
            raise InputError(f"schedule ratio {t}:{u} does not sum to 100")
        if not 0 < t < 100:
            raise InputError(f"schedule train share {t} out of range")
    shares = [split.train_pct] + [t for t, _ in schedule]
    if any(b >= a for a, b in zip(shares, shares[1:])):
        raise InputError(
            "depletion schedule must be strictly decreasing in train share, "
            f"starting below {split.train_pct}"
        )
    if seed is None:
        seed = split.seed
    rng = SplitMix64(seed ^ split.split_index)
    train = list(split.train)
    test = list(split.test)
    out: list[SplitManifest] = []
    for train_pct, test_pct in schedule:
        target = (split.n * train_pct) // 100
        n_move = len(train) - target
        if n_move <= 0:
            raise InputError(
                f"stage {train_pct}:{test_pct} does not shrink the train side"
            )
        chosen = set(sample_indices(len(train), n_move, rng))
        test.extend(e for i, e in enumerate(train) if i in chosen)
        train = [e for i, e in enumerate(train) if i not in chosen]
        if not train:
            raise InputError(f"stage {train_pct}:{test_pct} empties the train side")
        out.append(
            SplitManifest(
                seed=seed,
                split_index=split.split_index,
                train_pct=train_pct,
                test_pct=test_pct,
                train=tuple(train),
                test=tuple(test),
                stratified=split.stratified,
            )
        )
    return out


@dataclass(frozen=True)
class ClassReportRow:
    clinical_class: str
    train_count: int
    train_pct: float
    test_count: int
    test_pct: float


def class_report(split: SplitManifest) -> list[ClassReportRow]:
    """Per-class counts and side percentages, classes sorted by name."""
    train_counts = split.train_class_counts()
    test_counts = split.test_class_counts()
    n_train, n_test = len(split.train), len(split.test)
    rows = []
    for cls in sorted(set(train_counts) | set(test_counts)):
        tr = train_counts.get(cls, 0)
        te = test_counts.get(cls, 0)
        rows.append(
            ClassReportRow(
                clinical_class=cls,
                train_count=tr,
                train_pct=100.0 * tr / n_train,
                test_count=te,
                test_pct=100.0 * te / n_test,
            )
        )
    return rows
