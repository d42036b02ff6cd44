"""Transformations of a correlated single-buyer distribution that never lower BRev/SRev.

``to_pointmass_in_sum`` makes every type's total value equal the optimal
bundle price; ``symmetrize`` randomly permutes coordinates so all marginals agree.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .distcore import JointDist, MarketInstance
from .errors import PreconditionError, SizeError, ValidationError
from .reports import Report
from .singleitem import monopoly_price

SYMMETRIZE_MAX_ITEMS = 6
SYMMETRIZE_ROW_CAP = 10**6
SUM_TOL = 1e-9


def _joint(d) -> JointDist:
    if isinstance(d, JointDist):
        return d
    if isinstance(d, MarketInstance):
        if d.n_buyers != 1:
            raise ValidationError("reductions act on a single buyer's joint values", "buyers")
        return d.joint if d.is_correlated else d.to_joint()
    raise ValidationError("expected a JointDist or single-buyer MarketInstance", "joint")


def srev_joint(joint: JointDist) -> float:
    return float(sum(monopoly_price(joint.marginal(i))[1] for i in range(joint.n_items)))


def brev_joint(joint: JointDist) -> tuple[float, float]:
    """(price, revenue) of the optimal grand-bundle price."""
    return monopoly_price(joint.bundle())


def lower_to_sum(v: np.ndarray, p: float) -> np.ndarray:
    """Reduce the largest coordinates first until the row sums to p (rows already summing >= p)."""
    order = np.argsort(-v, kind="stable")
    out = v.copy()
    excess = v.sum() - p
    for i in order:
        if excess <= 0:
            break
        cut = min(out[i], excess)
        out[i] -= cut
        excess -= cut
    return out


def to_pointmass_in_sum(d, p: float | None = None) -> tuple[JointDist, JointDist, dict]:
    """(D', D'', info): D'' lowers sums above p to exactly p and zeroes rows below p;
    D' is D'' conditioned on the sum being p."""
    joint = _joint(d)
    if p is None:
        p = brev_joint(joint)[0]
    sums = joint.support.sum(axis=1)
    tol = SUM_TOL * max(1.0, p)
    sells = sums >= p - tol
    q = float(joint.probs[sells].sum())
    if q <= 0:
        raise PreconditionError(f"the bundle never sells at price {p}")
    rows = np.zeros_like(joint.support)
    for k in np.flatnonzero(sells):
        rows[k] = lower_to_sum(joint.support[k], p)
    d2 = JointDist(rows, joint.probs.copy())
    d1 = JointDist.normalized(rows[sells], joint.probs[sells])
    return d1, d2, {"price": float(p), "sale_prob": q}


def symmetrize(d, max_items: int = SYMMETRIZE_MAX_ITEMS) -> JointDist:
    """Equal-weight mixture of the joint over all coordinate permutations."""
    joint = _joint(d)
    n = joint.n_items
    if n > max_items:
        raise SizeError(f"{n} items exceeds the permutation cap {max_items}", n, max_items)
    perms = list(itertools.permutations(range(n)))
    size = len(perms) * joint.size
    if size > SYMMETRIZE_ROW_CAP:
        raise SizeError(f"{size} permuted rows exceeds {SYMMETRIZE_ROW_CAP}", size, SYMMETRIZE_ROW_CAP)
    rows = np.concatenate([joint.support[:, list(pi)] for pi in perms])
    probs = np.tile(joint.probs, len(perms)) / len(perms)
    return JointDist.normalized(rows, probs)


def ratio(joint: JointDist) -> float:
    s = srev_joint(joint)
    b = brev_joint(joint)[1]
    return b / s if s > 0 else math.inf


def check_reduction_ratios(d) -> Report:
    """BRev/SRev does not decrease along both reductions (up to 1e-9)."""
    joint = _joint(d)
    r0 = ratio(joint)
    d1, d2, info = to_pointmass_in_sum(joint)
    r_pm = ratio(d1)
    r_pm2 = ratio(d2)
    out = {"ratio": r0, "pointmass_ratio": r_pm, "lowered_ratio": r_pm2, **info}
    ok = r_pm >= r0 - 1e-9 and r_pm2 >= r0 - 1e-9
    if joint.n_items <= SYMMETRIZE_MAX_ITEMS:
        r_sym = ratio(symmetrize(joint))
        r_both = ratio(symmetrize(d1))
        out.update(symmetric_ratio=r_sym, pointmass_symmetric_ratio=r_both)
        ok = ok and r_sym >= r0 - 1e-9 and r_both >= r_pm - 1e-9
    return Report("reduction-ratios", bool(ok), out)


def check_cor_bound(d) -> Report:
    """BRev <= 5 ln(n) SRev for any single-buyer joint with n >= 2 items."""
    joint = _joint(d)
    n = joint.n_items
    if n < 2:
        raise PreconditionError("the bound needs at least two items")
    s = srev_joint(joint)
    b = brev_joint(joint)[1]
    bound = 5 * math.log(n) * s
    return Report("correlated-bundle-bound", b <= bound + 1e-6, {"brev": b, "srev": s, "bound": bound, "slack": bound - b})


def pointmass_welfare_check(d) -> Report:
    """For a symmetric point-mass-in-sum joint scaled to SRev = n, its welfare p obeys p <= n + n ln p."""
    joint = _joint(d)
    n = joint.n_items
    sums = joint.support.sum(axis=1)
    if np.ptp(sums) > SUM_TOL * max(1.0, float(sums.max())):
        raise PreconditionError("joint is not point-mass in sum")
    s = srev_joint(joint)
    if s <= 0:
        raise PreconditionError("SRev is zero")
    p = float(sums[0]) * n / s
    rhs = n + n * math.log(p) if p > 0 else -math.inf
    return Report(
        "pointmass-welfare",
        p <= rhs + 1e-9 and p <= 5 * n * math.log(n) + 1e-9,
        {"welfare": p, "bound": rhs, "log_bound": 5 * n * math.log(n)},
    )
