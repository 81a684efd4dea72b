from pathlib import Path

from segstat.splits import DatasetManifest

REPO_DEMO = Path(__file__).resolve().parent.parent / "demo"


def tree_bytes(root):
    return {
        p.relative_to(root).as_posix(): p.read_bytes()
        for p in sorted(Path(root).rglob("*"))
        if p.is_file()
    }


def test_demo_regenerates_byte_identically(demo_dir):
    """The committed demo/ tree must match a fresh build exactly."""
    assert REPO_DEMO.is_dir(), "demo/ missing from the repository"
    assert tree_bytes(REPO_DEMO) == tree_bytes(demo_dir)


def test_demo_manifest_contents(demo_dir):
    manifest = DatasetManifest.load(demo_dir / "manifest.csv")
    assert manifest.n == 12
    ids = [e.image_id for e in manifest.entries]
    assert ids == [f"img{i:02d}" for i in range(1, 13)]
    classes = {e.clinical_class for e in manifest.entries}
    assert classes == {"benign", "malignant"}
