"""Seeded random streams.

Every stream is a Philox counter-based generator keyed by a
``SeedSequence`` built from a 64-bit seed plus a tuple of integer keys,
so trial ``i`` of an experiment always sees the same numbers no matter
which worker evaluates it or in what order.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Return the generator for ``(seed, *keys)``."""
    ss = np.random.SeedSequence(int(seed) & _MASK64, spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))
