"""Seeded, splittable randomness.

Every stochastic routine takes an integer seed plus optional integer keys
(point index, trial index, round, ...). Streams are derived with
``SeedSequence`` and drawn from the counter-based Philox bit generator, so a
given (seed, keys) tuple yields the same numbers no matter how work is split
across workers.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _entropy(seed: int, keys) -> list[int]:
    out = [int(seed) & _MASK64]
    out.extend(int(k) & _MASK64 for k in keys)
    return out


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    ss = np.random.SeedSequence(_entropy(seed, keys))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *keys: int) -> int:
    """A 64-bit integer seed for the child stream ``(seed, *keys)``."""
    ss = np.random.SeedSequence(_entropy(seed, keys))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return (int(hi) << 32) | int(lo)
