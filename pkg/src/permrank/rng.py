"""Seeded, counter-based random number generation.

All samplers in this package draw from Philox generators keyed by a
64-bit root seed plus an explicit stream path.  Philox is counter-based,
so per-entry draws are reproducible and independent of evaluation order,
and disjoint stream paths never collide.  Trials run concurrently may
each derive their own generator from (root_seed, trial_index).
"""

from __future__ import annotations

import numpy as np

__all__ = ["make_rng", "child_seed"]


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator for the stream identified by (seed, *stream)."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *map(int, stream)])
    return np.random.Generator(np.random.Philox(ss))


def child_seed(seed: int, *stream: int) -> int:
    """Deterministic 64-bit sub-seed for the stream (seed, *stream)."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *map(int, stream)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
