"""Posted-price (pricing) mechanisms for i.i.d. bidders and the BUNDLE / SHATTER transformations.

A pricing mechanism posts price p on a set of items and sells to any bidder
whose value for the set is at least p, with no revenue from competition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distcore import DiscreteDist, RevenueEstimate, max_dists, sum_dists
from .errors import PreconditionError, ValidationError
from .reports import Report
from .sampling import sample, stream
from .singleitem import (
    monopoly_price,
    posted_price_rev,
    second_price_reserve_rev,
    split_lemma_profiles,
)

EXACT_PROFILE_CAP = 10**6


@dataclass(frozen=True)
class PricingScheme:
    """Sell item set ``items`` (0-based) as one bundle at ``price``."""

    items: tuple[int, ...]
    price: float

    def __post_init__(self):
        items = tuple(sorted(int(i) for i in self.items))
        if not items:
            raise ValidationError("scheme needs at least one item", "items")
        if len(set(items)) != len(items):
            raise ValidationError("duplicate items in scheme", "items")
        if not self.price >= 0:
            raise ValidationError("price must be nonnegative", "price")
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "price", float(self.price))


@dataclass(frozen=True)
class BundleParams:
    q: tuple[float, ...]
    c: float
    c1: float
    d: float
    combined_price: float


def bundle_value(dists: Sequence[DiscreteDist], items: Sequence[int]) -> DiscreteDist:
    return sum_dists([dists[i] for i in items])


def purchase_prob(dists: Sequence[DiscreteDist], scheme: PricingScheme) -> float:
    """Pr[one consumer's value for the scheme's items >= price]."""
    if scheme.price == 0:
        return 1.0
    return bundle_value(dists, scheme.items).sf(scheme.price)


def scheme_revenue(dists: Sequence[DiscreteDist], scheme: PricingScheme) -> float:
    return scheme.price * purchase_prob(dists, scheme)


def bundle_guarantee(c1: float, weighted: float, total_price: float) -> tuple[float, float]:
    """Closed-form BUNDLE revenue guarantees.

    With s = sqrt(1 - c1) the price factor is d = 1 - s and the guarantee is
    d (c1 - 1 + s) / (c1 s) * sum q_i p_i = (1 - s)^2 / c1 * sum q_i p_i.
    The alternative reading divides by c = sum q_i p_i / sum p_i instead,
    giving (1 - s)^2 * sum p_i.  Returns (c1 reading, c reading).
    """
    s = math.sqrt(max(1.0 - c1, 0.0))
    g_c1 = (1 - s) ** 2 / c1 * weighted
    g_c = (1 - s) ** 2 * total_price
    return g_c1, g_c


def bundle_combine(schemes: Sequence[PricingScheme], dists: Sequence[DiscreteDist], c1: float) -> tuple[PricingScheme, float, Report]:
    """Merge disjoint schemes into one bundle priced at (1 - sqrt(1 - c1)) * sum p_i."""
    if not schemes:
        raise ValidationError("need at least one scheme", "schemes")
    if not 0 < c1 <= 1:
        raise ValidationError("c1 must lie in (0, 1]", "c1")
    seen: set[int] = set()
    for s in schemes:
        if seen & set(s.items):
            raise ValidationError("schemes must be disjoint", "schemes")
        seen |= set(s.items)
    q = [purchase_prob(dists, s) for s in schemes]
    for k, qk in enumerate(q):
        if qk < c1 - 1e-12:
            raise PreconditionError(f"scheme {k} sells with probability {qk} < c1 = {c1}")
    prices = np.array([s.price for s in schemes])
    total = float(prices.sum())
    weighted = float(np.dot(q, prices))
    d = 1 - math.sqrt(1 - c1)
    combined = PricingScheme(tuple(sorted(seen)), d * total)
    revenue = scheme_revenue(dists, combined)
    g_c1, g_c = bundle_guarantee(c1, weighted, total)
    params = BundleParams(tuple(q), weighted / total if total > 0 else 1.0, c1, d, combined.price)
    report = Report(
        "bundle",
        revenue >= g_c1 - 1e-9,
        {
            "q": q,
            "c": params.c,
            "c1": c1,
            "d": d,
            "combined_price": combined.price,
            "revenue": revenue,
            "guarantee": g_c1,
            "guarantee_c_reading": g_c,
            "meets_c_reading": revenue >= g_c - 1e-9,
            "weighted_revenue": weighted,
        },
    )
    return combined, g_c1, report


def markov_step_check(schemes: Sequence[PricingScheme], dists: Sequence[DiscreteDist], d: float) -> Report:
    """Pr[X >= d sum p_i] >= (c - d)/(1 - d) for X = sum of realized scheme payments, d < c."""
    q = [purchase_prob(dists, s) for s in schemes]
    prices = [s.price for s in schemes]
    total = sum(prices)
    c = float(np.dot(q, prices)) / total
    if not d < c:
        raise PreconditionError(f"need d < c = {c}")
    parts = [DiscreteDist.from_atoms([0.0, p], [1 - qi, qi]) for p, qi in zip(prices, q)]
    X = sum_dists(parts)
    lhs = X.sf(d * total)
    rhs = (c - d) / (1 - d)
    return Report("bundle-markov", lhs >= rhs - 1e-9, {"prob": lhs, "bound": rhs, "c": c, "d": d})


def shatter(scheme: PricingScheme, dists: Sequence[DiscreteDist]) -> tuple[list[PricingScheme], Report]:
    """Split a bundle scheme into per-item schemes at each item's monopoly price."""
    parts, revs = [], []
    for i in scheme.items:
        price, r = monopoly_price(dists[i])
        parts.append(PricingScheme((i,), price))
        revs.append(r)
    total = float(sum(revs))
    orig = scheme_revenue(dists, scheme)
    return parts, Report(
        "shatter",
        True,
        {"item_revenues": revs, "total": total, "bundle_revenue": orig},
        ["no constant-factor guarantee is asserted for per-item monopoly prices"],
    )


def check_brendan(
    dists: Sequence[DiscreteDist],
    items: Sequence[int],
    p: float | None = None,
    js: Sequence[int] = range(0, 6),
) -> Report:
    """Pr[v_i >= p/2^j | V >= p] <= 2 Pr[v_i >= p/2^j] + Pr[v_i >= p/2] / q for V the bundle value.

    ``p`` defaults to the bundle's monopoly price.  When Pr[V >= p/2] > 2q the
    lemma's hypothesis fails and the case is reported as vacuous.
    """
    items = list(items)
    V = bundle_value(dists, items)
    if p is None:
        p = monopoly_price(V)[0]
    q = V.sf(p)
    if q <= 0:
        raise PreconditionError(f"bundle never sells at price {p}")
    half = V.sf(p / 2)
    if half > 2 * q + 1e-12:
        return Report("brendan", True, {"price": p, "q": q, "half_price_prob": half, "vacuous": True}, ["hypothesis Pr[V >= p/2] <= 2q fails"])
    rows, ok = [], True
    for i in items:
        others = [dists[k] for k in items if k != i]
        rest = sum_dists(others) if others else DiscreteDist.point_mass(0.0)
        di = dists[i]
        rest_sf = np.array([rest.sf(p - x) if p - x > 0 else 1.0 for x in di.support])
        for j in js:
            thr = p / 2**j
            tol = 1e-12 * max(1.0, thr)
            sel = di.support >= thr - tol
            joint = float(np.dot(di.probs[sel], rest_sf[sel]))
            lhs = joint / q
            rhs = 2 * di.sf(thr) + di.sf(p / 2) / q
            good = lhs <= rhs + 1e-9
            ok &= good
            rows.append({"item": i, "j": int(j), "lhs": lhs, "rhs": rhs, "passed": good})
    return Report("brendan", bool(ok), {"price": p, "q": q, "half_price_prob": half, "vacuous": False, "cases": rows})


def brev_zero(bidders: Sequence[DiscreteDist]) -> float:
    """Expected second-highest value: second-price revenue without reserve."""
    if len(bidders) < 2:
        return 0.0
    return second_price_reserve_rev(bidders, 0.0)


def exact_random_reserve(bidders: Sequence[DiscreteDist], method: str = "order") -> float:
    """Revenue of posting the max of fresh independent samples, one per bidder, as the price.

    ``"order"`` uses the distribution of that maximum; ``"enumerate"`` walks
    all (real, reserve) profile pairs and is capped.
    """
    if method == "enumerate":
        size = math.prod(b.size for b in bidders) ** 2
        if size > EXACT_PROFILE_CAP:
            raise ValidationError(f"{size} profile pairs exceed {EXACT_PROFILE_CAP}", "bidders")
        grids = np.meshgrid(*[np.arange(b.size) for b in bidders], indexing="ij")
        idx = [g.ravel() for g in grids]
        vals = np.stack([b.support[i] for b, i in zip(bidders, idx)], axis=1)
        probs = np.prod(np.stack([b.probs[i] for b, i in zip(bidders, idx)], axis=1), axis=1)
        top = vals.max(axis=1)
        res = top[:, None]
        sells = top[None, :] >= res - 1e-12 * np.maximum(1.0, res)
        return float(np.sum(probs[:, None] * probs[None, :] * np.where(sells, res, 0.0)))
    if method != "order":
        raise ValidationError(f"unknown method {method!r}", "method")
    reserve = max_dists(bidders)
    return float(sum(px * posted_price_rev(bidders, float(x)) for x, px in zip(reserve.support, reserve.probs)))


def random_reserve_sim(bidders: Sequence[DiscreteDist], trials: int, seed: int = 0, chunk: int = 10**5) -> tuple[RevenueEstimate, Report]:
    """Monte Carlo revenue of the random-reserve price against BRev_0 / 2 (3 standard errors)."""
    m = len(bidders)
    real_streams = [stream(seed, 0, j) for j in range(m)]
    res_streams = [stream(seed, 1, j) for j in range(m)]
    total = total_sq = 0.0
    done = 0
    while done < trials:
        k = min(chunk, trials - done)
        real = np.max(np.stack([sample(b, g, k) for b, g in zip(bidders, real_streams)]), axis=0)
        res = np.max(np.stack([sample(b, g, k) for b, g in zip(bidders, res_streams)]), axis=0)
        rev = np.where(real >= res, res, 0.0)
        total += rev.sum()
        total_sq += np.square(rev).sum()
        done += k
    mean = total / trials
    var = max(total_sq / trials - mean**2, 0.0)
    se = math.sqrt(var / trials)
    est = RevenueEstimate(mean, "monte-carlo", trials, se, seed)
    b0 = brev_zero(bidders)
    return est, Report(
        "random-reserve",
        mean >= 0.5 * b0 - 3 * se,
        {"revenue": mean, "std_error": se, "brev0": b0, "half_brev0": 0.5 * b0, "trials": trials, "seed": seed},
    )


def random_reserve_check(bidders: Sequence[DiscreteDist]) -> Report:
    """Exact random-reserve revenue >= BRev_0 / 2."""
    rev = exact_random_reserve(bidders)
    b0 = brev_zero(bidders)
    return Report("random-reserve", rev >= 0.5 * b0 - 1e-12, {"revenue": rev, "brev0": b0, "half_brev0": 0.5 * b0})


def _price_grid(bidders: Sequence[DiscreteDist]) -> np.ndarray:
    return np.unique(np.concatenate([[0.0]] + [b.support for b in bidders]))


def check_split(bidders: Sequence[DiscreteDist], prices: Sequence[float] | None = None) -> Report:
    """Per-profile BRev_p <= BPricingRev_p + BRev_0 at every price in the grid."""
    prices = _price_grid(bidders) if prices is None else prices
    rows = [split_lemma_profiles(bidders, float(p)) for p in prices]
    return Report(
        "split",
        all(r["passed"] for r in rows),
        {"prices": len(rows), "profiles": sum(r["profiles"] for r in rows), "violations": sum(r["violations"] for r in rows)},
    )


def check_pricing_corollary(bidders: Sequence[DiscreteDist], prices: Sequence[float] | None = None) -> Report:
    """max_p second-price-with-reserve revenue <= 3 * max_p posted-price revenue."""
    prices = _price_grid(bidders) if prices is None else np.asarray(prices, dtype=float)
    auction = max(second_price_reserve_rev(bidders, float(p)) for p in prices)
    posted = max(posted_price_rev(bidders, float(p)) for p in prices)
    return Report(
        "pricing-corollary",
        auction <= 3 * posted + 1e-9,
        {"auction_revenue": auction, "pricing_revenue": posted, "ratio": auction / posted if posted > 0 else math.inf},
    )
