"""Single-item revenue: monopoly prices, ironed virtual values, Myerson revenue.

Quantile-space convention: selling at atom ``v_k`` sells with probability
``q_k = Pr[v >= v_k]`` and earns ``R_k = v_k * q_k``.  The revenue curve is the
polyline through (0, 0) and the points (q_k, R_k); atom k owns the quantile
interval (q_{k+1}, q_k], and its ironed virtual value is the slope of the upper
concave envelope on that interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distcore import DiscreteDist, RevenueEstimate, max_dists, welfare
from .errors import SizeError, ValidationError

PROFILE_CAP = 10**6
TIE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class RevenueCurve:
    """Points (q, q * price) in increasing q, starting at (0, 0)."""

    q: np.ndarray
    revenue: np.ndarray


@dataclass(frozen=True, eq=False)
class IronedVirtuals:
    """Per-atom ironed virtual values of a distribution (ordered like its support)."""

    values: np.ndarray
    phi: np.ndarray
    ironed: np.ndarray
    envelope: np.ndarray  # envelope height at q_k = Pr[v >= v_k]


def revenue_curve(d: DiscreteDist) -> RevenueCurve:
    sq = d.survival()
    q = np.concatenate(([0.0], sq[::-1]))
    rev = np.concatenate(([0.0], (d.support * sq)[::-1]))
    return RevenueCurve(q, rev)


def monopoly_price(d: DiscreteDist) -> tuple[float, float]:
    """Revenue-maximizing posted price (lowest maximizer) and its revenue."""
    rev = d.support * d.survival()
    best = rev.max()
    k = int(np.argmax(rev >= best - TIE_TOL * max(1.0, best)))
    return float(d.support[k]), float(rev[k])


def _upper_hull(x: np.ndarray, y: np.ndarray) -> list[int]:
    hull: list[int] = []
    for i in range(x.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def ironed_virtuals(d: DiscreteDist) -> IronedVirtuals:
    curve = revenue_curve(d)
    hull = _upper_hull(curve.q, curve.revenue)
    env = np.interp(curve.q, curve.q[hull], curve.revenue[hull])
    # curve index i (1..K) corresponds to atom K - i; interval (q[i-1], q[i]] belongs to it
    slopes = np.diff(env) / np.diff(curve.q)
    above = env - curve.revenue > 1e-12 * max(1.0, float(env.max()))
    ironed = above[1:] | above[:-1]
    return IronedVirtuals(
        values=d.support,
        phi=slopes[::-1].copy(),
        ironed=ironed[::-1].copy(),
        envelope=env[1:][::-1].copy(),
    )


def _positive_virtual_dist(d: DiscreteDist) -> DiscreteDist:
    iv = ironed_virtuals(d)
    return DiscreteDist.from_atoms(np.maximum(iv.phi, 0.0), d.probs)


def _profile_count(bidders: Sequence[DiscreteDist]) -> int:
    return math.prod(b.size for b in bidders)


def _profiles(bidders: Sequence[DiscreteDist], cap: int):
    """(values[P, m], probs[P]) over the full product of bidder supports."""
    size = _profile_count(bidders)
    if size > cap:
        raise SizeError(f"profile product {size} exceeds cap {cap}", size, cap)
    idx = np.meshgrid(*[np.arange(b.size) for b in bidders], indexing="ij")
    idx = [g.ravel() for g in idx]
    values = np.stack([b.support[i] for b, i in zip(bidders, idx)], axis=1)
    probs = np.prod(np.stack([b.probs[i] for b, i in zip(bidders, idx)], axis=1), axis=1)
    return values, probs


def optimal_item_rev(
    bidders: Sequence[DiscreteDist],
    method: str = "auto",
    cap: int = PROFILE_CAP,
) -> RevenueEstimate:
    """Myerson revenue E[max(0, max_j phibar_j(v_j))] for one item, independent bidders.

    ``method="enumerate"`` sums over the explicit profile product (capped);
    ``"order"`` uses the distribution of the maximum positive ironed virtual
    value, which is the same expectation without enumeration.  ``"auto"``
    uses the latter.
    """
    if not bidders:
        raise ValidationError("need at least one bidder", "bidders")
    if len(bidders) == 1:
        return RevenueEstimate.exact(monopoly_price(bidders[0])[1])
    if method == "enumerate":
        values, probs = _profiles(bidders, cap)
        phis = []
        for j, b in enumerate(bidders):
            iv = ironed_virtuals(b)
            phis.append(iv.phi[np.searchsorted(b.support, values[:, j])])
        best = np.maximum(np.max(np.stack(phis, axis=1), axis=1), 0.0)
        return RevenueEstimate.exact(float(np.dot(best, probs)))
    if method not in ("auto", "order"):
        raise ValidationError(f"unknown method {method!r}", "method")
    top = max_dists(_positive_virtual_dist(b) for b in bidders)
    return RevenueEstimate.exact(welfare(top))


def posted_price_rev(bidders: Sequence[DiscreteDist], p: float) -> float:
    """p * Pr[some bidder values the item at least p]."""
    if p < 0:
        raise ValidationError("price must be nonnegative", "p")
    if p == 0:
        return 0.0
    log_none = 0.0
    for b in bidders:
        s = b.sf(p)
        if s >= 1.0:
            return p
        log_none += math.log1p(-s)
    return p * -math.expm1(log_none)


def _second_price_profile(values: np.ndarray, p: float) -> np.ndarray:
    """Per-profile revenue of a second-price auction with reserve p."""
    eps = TIE_TOL * max(1.0, p)
    srt = np.sort(values, axis=1)
    top = srt[:, -1]
    second = srt[:, -2] if values.shape[1] > 1 else np.zeros(values.shape[0])
    return np.where(top >= p - eps, np.maximum(p, second), 0.0)


def _posted_profile(values: np.ndarray, p: float) -> np.ndarray:
    eps = TIE_TOL * max(1.0, p)
    return np.where(values.max(axis=1) >= p - eps, p, 0.0)


def second_price_reserve_rev(
    bidders: Sequence[DiscreteDist],
    p: float,
    method: str = "auto",
    cap: int = PROFILE_CAP,
) -> float:
    """Expected revenue of the second-price auction with reserve ``p``.

    ``"enumerate"`` sums over profiles; ``"order"`` (the ``"auto"`` default)
    uses order-statistic formulas for independent bidders.
    """
    if p < 0:
        raise ValidationError("price must be nonnegative", "p")
    if method == "enumerate":
        values, probs = _profiles(bidders, cap)
        return float(np.dot(_second_price_profile(values, p), probs))
    if method not in ("auto", "order"):
        raise ValidationError(f"unknown method {method!r}", "method")
    if len(bidders) == 1:
        return p * bidders[0].sf(p)
    s = np.array([b.sf(p) for b in bidders])
    exactly_one = sum(s[j] * np.prod(np.delete(1 - s, j)) for j in range(s.size))
    total = p * exactly_one
    # E[V2 * 1{V2 >= p}] from Pr[V2 >= x] = Pr[at least two bidders >= x]
    grid = np.unique(np.concatenate([b.support for b in bidders]))
    eps = TIE_TOL * max(1.0, p)
    grid = grid[grid >= p - eps]
    at_least_two = []
    for x in grid:
        sx = np.array([b.sf(x) for b in bidders])
        none = np.prod(1 - sx)
        one = sum(sx[j] * np.prod(np.delete(1 - sx, j)) for j in range(sx.size))
        at_least_two.append(max(1.0 - none - one, 0.0))
    at_least_two = np.array(at_least_two + [0.0])
    total += float(np.dot(grid, at_least_two[:-1] - at_least_two[1:]))
    return total


def split_lemma_profiles(bidders: Sequence[DiscreteDist], p: float, cap: int = PROFILE_CAP) -> dict:
    """Per-profile check of  reserve-p second price <= posted p + second price without reserve."""
    values, probs = _profiles(bidders, cap)
    lhs = _second_price_profile(values, p)
    rhs = _posted_profile(values, p) + _second_price_profile(values, 0.0)
    slack = rhs - lhs
    bad = slack < -1e-9 * max(1.0, p)
    return {
        "price": float(p),
        "profiles": int(values.shape[0]),
        "violations": int(bad.sum()),
        "min_slack": float(slack.min()),
        "passed": not bool(bad.any()),
    }


def best_second_price_reserve(bidders: Sequence[DiscreteDist]) -> tuple[float, float]:
    """(reserve, revenue) maximizing the second-price-with-reserve revenue over support prices and 0."""
    prices = np.unique(np.concatenate([[0.0]] + [b.support for b in bidders]))
    revs = [second_price_reserve_rev(bidders, float(p)) for p in prices]
    k = int(np.argmax(revs))
    return float(prices[k]), float(revs[k])


def best_posted_price(bidders: Sequence[DiscreteDist]) -> tuple[float, float]:
    prices = np.unique(np.concatenate([b.support for b in bidders]))
    revs = [posted_price_rev(bidders, float(p)) for p in prices]
    k = int(np.argmax(revs))
    return float(prices[k]), float(revs[k])

