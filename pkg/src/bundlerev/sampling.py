"""Reproducible sampling: one counter-based stream per (seed, item, buyer)."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .distcore import DiscreteDist


def stream(seed: int, *key: int) -> np.random.Generator:
    """Philox generator for the stream identified by ``seed`` and integer ``key``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))))


def inverse_cdf(d: DiscreteDist, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(d.probs)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, u, side="right")
    return d.support[np.minimum(idx, d.size - 1)]


def sample(d: DiscreteDist, gen: np.random.Generator, size) -> np.ndarray:
    return inverse_cdf(d, gen.random(size))


def sample_profiles(dists: Sequence[DiscreteDist], seed: int, count: int, buyer: int = 0) -> np.ndarray:
    """(count, n) value profiles; column i draws from stream (seed, i, buyer)."""
    out = np.empty((count, len(dists)))
    for i, d in enumerate(dists):
        out[:, i] = sample(d, stream(seed, i, buyer), count)
    return out
