"""Seeded, counter-based random streams.

All randomness in the package flows through :func:`stream`. Streams are
keyed by an explicit user seed plus an integer path (chunk index, sigma
index, trial index, ...), so any sub-computation can be reproduced in
isolation and parallel layouts cannot change results.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, *path: int) -> np.random.Generator:
    """Return a Philox generator for the given seed and stream path.

    Equal (seed, path) pairs always yield identical streams; distinct
    paths under one seed are statistically independent.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))
