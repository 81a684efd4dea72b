"""Pinned pseudo-random number generator for reproducible shuffles.

Split manifests must reproduce bit-for-bit across platforms and across
reimplementations in other languages, so the generator is pinned to
splitmix64 (Vigna's canonical constants) rather than to any library
generator whose stream may change between releases.  Reference output
vectors for seeds 0, 42 and 1234567 are frozen in the test suite.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """splitmix64 stream over 64-bit unsigned integers."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection, free of modulo bias."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % bound


def fisher_yates(items: list, rng: SplitMix64) -> None:
    """Shuffle in place, swapping from the last index down to index 1."""
    for i in range(len(items) - 1, 0, -1):
        j = rng.below(i + 1)
        items[i], items[j] = items[j], items[i]


def sample_indices(n: int, k: int, rng: SplitMix64) -> list[int]:
    """First k entries of a partial Fisher-Yates shuffle of range(n)."""
    if not 0 <= k <= n:
        raise ValueError(f"cannot sample {k} of {n}")
    idx = list(range(n))
    for i in range(k):
        j = i + rng.below(n - i)
        idx[i], idx[j] = idx[j], idx[i]
    return idx[:k]
