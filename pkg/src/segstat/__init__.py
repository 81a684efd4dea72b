"""Toolkit to evaluate, compare, and fuse binary segmentation outputs
from two training regimes.

Submodules:

* ``masks``     PNG mask/probability/heatmap I/O, confusion counts, overlays
* ``metrics``   per-image metrics (AUROC, Dice, sensitivity, specificity)
* ``stats``     summaries, normality checks, Mood's median test, comparisons
* ``splits``    manifests, seeded replicate splits, depletion schedules
* ``ensemble``  replicate aggregation and two-model mask fusion
* ``pipeline``  batch orchestration used by the ``segstat`` command line
"""

from .version import VERSION

__version__ = VERSION
