"""Sample-based choice between selling separately and one grand-bundle price.

The bundle price is p* = (2/5) * Welfare(all-core), with every item's core cut
at SRev.  The sale probability at p* is estimated from samples; the bundle is
chosen only if that estimate is at least 47/72 and beats SRev.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .distcore import MarketInstance, condition_split, sum_dists, welfare
from .errors import ValidationError
from .optrev import TYPE_CAP, as_joint, rev
from .reports import Report
from .sampling import sample_profiles
from .simplerev import srev

SAMPLE_FLOOR = 100
Q_MIN = 47 / 72
PRICE_FRACTION = 2 / 5


@dataclass(frozen=True)
class ApproxDecision:
    p_star: float
    q_hat: float
    choice: str  # "separate" | "bundle"
    samples_used: int
    seed: int
    est_revenue: float
    srev: float
    epsilon: float
    sample_floor_applied: bool

    def __post_init__(self):
        if self.choice not in ("separate", "bundle"):
            raise ValidationError(f"unknown choice {self.choice!r}", "choice")
        if self.choice == "bundle" and (self.q_hat < Q_MIN or self.q_hat * self.p_star < self.srev):
            raise ValidationError("bundle chosen although the sampled test failed", "choice")

    def to_dict(self) -> dict:
        return asdict(self)


def sample_count(n: int, epsilon: float) -> tuple[int, bool]:
    """max(ceil(ln n / eps^2), SAMPLE_FLOOR) and whether the floor was binding."""
    raw = math.ceil(math.log(n) / epsilon**2) if n > 1 else 0
    return max(raw, SAMPLE_FLOOR), raw < SAMPLE_FLOOR


def bundle_price(inst: MarketInstance) -> tuple[float, float]:
    """(SRev, p*) with p* = (2/5) Welfare of the core under thresholds t_i = r/r_i.

    Every threshold t_i r_i equals SRev, so items with zero revenue (always
    valued 0) are cut at SRev too and simply add nothing to the core welfare.
    """
    s = srev(inst).value
    if s <= 0:
        return s, 0.0
    cores = [condition_split(d, s)[0] for d in inst.buyer_items(0)]
    return s, PRICE_FRACTION * float(sum(welfare(c) for c in cores if c is not None))


def run_approx(inst: MarketInstance, epsilon: float, seed: int = 0) -> ApproxDecision:
    if not epsilon > 0:
        raise ValidationError("epsilon must be positive", "epsilon")
    if inst.n_buyers != 1 or inst.is_correlated:
        raise ValidationError("needs an independent single-buyer instance", "instance")
    s, p_star = bundle_price(inst)
    count, floored = sample_count(inst.n_items, epsilon)
    draws = sample_profiles(inst.buyer_items(0), seed, count)
    tol = 1e-12 * max(1.0, p_star)
    q_hat = float(np.mean(draws.sum(axis=1) >= p_star - tol))
    bundle = q_hat >= Q_MIN and q_hat * p_star >= s
    return ApproxDecision(
        p_star=float(p_star),
        q_hat=q_hat,
        choice="bundle" if bundle else "separate",
        samples_used=count,
        seed=int(seed),
        est_revenue=float(q_hat * p_star if bundle else s),
        srev=float(s),
        epsilon=float(epsilon),
        sample_floor_applied=floored,
    )


def exact_sale_probability(inst: MarketInstance, price: float) -> float:
    """Pr[sum of values >= price] by exact convolution."""
    return sum_dists(inst.buyer_items(0)).sf(price)


def evaluate_decision(decision: ApproxDecision, inst: MarketInstance, rev_oracle=rev, cap: int = TYPE_CAP) -> Report:
    """Exact revenue of the chosen mechanism against Rev / (6 (1 + eps))."""
    if decision.choice == "separate":
        chosen = srev(inst).value
    else:
        chosen = decision.p_star * exact_sale_probability(inst, decision.p_star)
    full = float(rev_oracle(as_joint(inst, cap)))
    target = full / (6 * (1 + decision.epsilon))
    return Report(
        "approximation",
        chosen >= target - 1e-6,
        {
            "choice": decision.choice,
            "chosen_revenue": chosen,
            "rev": full,
            "ratio": full / chosen if chosen > 0 else math.inf,
            "target": target,
        },
    )
