#!/usr/bin/env python3
"""Regenerate the committed demo dataset under demo/.

The builder is deterministic (hand-constructed patterns, no RNG), so
rerunning this script must leave `git status` clean; the test suite
checks the same byte-identity.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from segstat.demo import build

if __name__ == "__main__":
    target = Path(__file__).resolve().parent.parent / "demo"
    build(target)
    print(f"rebuilt {target}")
