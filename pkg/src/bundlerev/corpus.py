"""Seeded random instance corpora for property checks and acceptance runs."""

from __future__ import annotations

import numpy as np

from .distcore import DiscreteDist, JointDist, MarketInstance


def random_dist(rng: np.random.Generator, max_support: int = 3, low: float = 0.0, high: float = 10.0, integer: bool = True) -> DiscreteDist:
    k = int(rng.integers(1, max_support + 1))
    if integer:
        values = rng.choice(np.arange(int(low), int(high) + 1), size=k, replace=False).astype(float)
    else:
        values = rng.uniform(low, high, size=k)
    probs = rng.dirichlet(np.ones(k))
    return DiscreteDist.from_atoms(values, probs)


def random_instance(rng: np.random.Generator, max_items: int = 3, max_support: int = 3, integer: bool = True) -> MarketInstance:
    """Independent single-buyer instance with 1..max_items items, values in [0, 10]."""
    n = int(rng.integers(1, max_items + 1))
    return MarketInstance.independent([random_dist(rng, max_support, integer=integer) for _ in range(n)], label="random")


def single_buyer_corpus(seed: int, count: int, max_items: int = 3, max_support: int = 3) -> list[MarketInstance]:
    rng = np.random.default_rng(seed)
    return [random_instance(rng, max_items, max_support) for _ in range(count)]


def random_joint(rng: np.random.Generator, max_items: int = 3, max_types: int = 6, min_items: int = 1) -> JointDist:
    """Correlated joint with integer values in [0, 10] and random type weights."""
    n = int(rng.integers(min_items, max_items + 1))
    k = int(rng.integers(1, max_types + 1))
    support = rng.integers(0, 11, size=(k, n)).astype(float)
    if not support.sum(axis=1).max() > 0:
        support[0, 0] = 1.0
    return JointDist.normalized(support, rng.dirichlet(np.ones(k)))


def joint_corpus(seed: int, count: int, max_items: int = 3, max_types: int = 6, min_items: int = 1) -> list[JointDist]:
    rng = np.random.default_rng(seed)
    return [random_joint(rng, max_items, max_types, min_items) for _ in range(count)]


def iid_bidder_corpus(seed: int, count: int, max_bidders: int = 3, max_support: int = 4) -> list[list[DiscreteDist]]:
    """Lists of m i.i.d. bidders (m in 1..max_bidders) sharing one random distribution."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        m = int(rng.integers(1, max_bidders + 1))
        d = random_dist(rng, max_support, low=1.0)
        out.append([d] * m)
    return out


def random_scheme_set(rng: np.random.Generator, c1: float = 0.5, max_items: int = 6, max_support: int = 3):
    """Random item distributions and disjoint schemes, each priced at the highest price selling with probability >= c1."""
    from .distcore import sum_dists
    from .pricing import PricingScheme

    n = int(rng.integers(1, max_items + 1))
    dists = [random_dist(rng, max_support, low=1.0) for _ in range(n)]
    labels = rng.integers(0, n, size=n)
    schemes = []
    for lab in np.unique(labels):
        items = tuple(int(i) for i in np.flatnonzero(labels == lab))
        value = sum_dists([dists[i] for i in items])
        ok = value.survival() >= c1 - 1e-12
        schemes.append(PricingScheme(items, float(value.support[ok].max())))
    return dists, schemes


def scheme_corpus(seed: int, count: int, c1: float = 0.5) -> list:
    rng = np.random.default_rng(seed)
    return [random_scheme_set(rng, c1) for _ in range(count)]
