"""Reproducible, splittable random streams.

Philox is counter-based, so streams keyed by ``(seed, *path)`` are independent
and identical regardless of creation order or worker count. Every stochastic
component in the package (samplers, random tie-breaking, Monte Carlo
permutations, replication cells) draws from a stream built here.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, *path: int) -> np.random.Generator:
    """Return the generator for the stream addressed by ``(seed, *path)``."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(path))
    return np.random.Generator(np.random.Philox(ss))


def uniform_open(rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw n uniforms strictly inside (0,1), safe to feed to quantile functions.

    Uses (k + 0.5)/2^53 over 53-bit integers so 0.0 and 1.0 are unreachable.
    """
    k = rng.integers(0, 1 << 53, size=n, dtype=np.int64)
    return (k + 0.5) / float(1 << 53)
