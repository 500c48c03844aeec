"""Seeded random streams.

Every stream is a Philox (counter-based, 64-bit) generator keyed by a
``numpy.random.SeedSequence`` built from the master seed followed by stream
labels, so ``stream(seed, t)`` is a pure function of ``(seed, t)`` and trials
can be generated in any order.
"""
from __future__ import annotations

import numpy as np

SEED_MASK = (1 << 64) - 1


def stream(seed: int, *labels: int) -> np.random.Generator:
    """Independent generator for the sub-stream ``labels`` of ``seed``."""
    words = [int(seed) & SEED_MASK] + [int(x) & SEED_MASK for x in labels]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))


def subseed(seed: int, *labels: int) -> int:
    """64-bit seed derived from ``(seed, *labels)``; stable across platforms."""
    words = [int(seed) & SEED_MASK] + [int(x) & SEED_MASK for x in labels]
    state = np.random.SeedSequence(words).generate_state(2, dtype=np.uint32)
    return int(state[0]) | (int(state[1]) << 32)
