"""Core/tail decomposition of item values and the inequalities built on it.

For item i with revenue r_i and multiplier t_i, the tail is the event that the
highest value on the item exceeds t_i * r_i, and the core is its complement.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .distcore import (
    DiscreteDist,
    JointDist,
    MarketInstance,
    condition_split,
    max_dists,
    sum_dists,
    variance,
    welfare,
)
from .errors import PreconditionError, SizeError, ValidationError
from .optrev import TYPE_CAP, as_joint, rev
from .reports import Report
from .simplerev import brev
from .singleitem import monopoly_price, optimal_item_rev

TAIL_ITEM_CAP = 16
MODES = ("uniform", "uniform_a", "adaptive")


@dataclass(frozen=True, eq=False)
class CoreTailSplit:
    """Per-item thresholds and conditional core/tail distributions of the top value v*_i."""

    inst: MarketInstance
    mode: str
    c: float
    a: float
    vstar: tuple[DiscreteDist, ...]
    r_i: np.ndarray
    r: float
    t: np.ndarray
    thresholds: np.ndarray
    p: np.ndarray
    core: tuple  # DiscreteDist | None per item
    tail: tuple  # DiscreteDist | None per item

    @property
    def n_items(self) -> int:
        return len(self.vstar)

    def core_welfare(self) -> float:
        """Welfare of the all-core product; a null core contributes nothing."""
        return float(sum(welfare(d) for d in self.core if d is not None))

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "c": self.c,
            "a": self.a,
            "r_i": self.r_i.tolist(),
            "r": self.r,
            "t": self.t.tolist(),
            "thresholds": self.thresholds.tolist(),
            "p": self.p.tolist(),
            "core_welfare": self.core_welfare(),
        }


@dataclass(frozen=True, eq=False)
class TailEvent:
    """Exactly the items in ``A`` lie in their tails; ``tail_dist`` is the product of those tails."""

    A: tuple[int, ...]
    p_A: float
    tail_dists: tuple[DiscreteDist, ...]

    def tail_joint(self, cap: int = TYPE_CAP) -> JointDist | None:
        if not self.A:
            return None
        return JointDist.product(list(self.tail_dists), cap=cap)


def build_split(inst: MarketInstance, mode: str = "adaptive", c: float = 1.0, a: float = 1.0) -> CoreTailSplit:
    """Thresholds t_i*r_i with t_i = c*n (uniform), c*a*n (uniform_a) or c*r/r_i (adaptive)."""
    if inst.is_correlated:
        raise ValidationError("core/tail splits need independent item values", "instance")
    if mode not in MODES:
        raise ValidationError(f"unknown mode {mode!r}; expected one of {MODES}", "mode")
    if not c > 0 or not a > 0:
        raise ValidationError("c and a must be positive", "c")
    n = inst.n_items
    vstar = tuple(max_dists(inst.column(i)) for i in range(n))
    r_i = np.array([optimal_item_rev(inst.column(i)).value for i in range(n)])
    r = float(r_i.sum())
    if mode == "adaptive":
        zero = np.flatnonzero(r_i <= 0)
        if zero.size:
            raise PreconditionError(f"item {int(zero[0])} has zero revenue; adaptive thresholds c*r/r_i are undefined")
        t = c * r / r_i
        thresholds = np.full(n, c * r)
    else:
        mult = c * n if mode == "uniform" else c * a * n
        t = np.full(n, float(mult))
        thresholds = t * r_i
    cores, tails, ps = [], [], []
    for d, th in zip(vstar, thresholds):
        core, tail, p = condition_split(d, float(th))
        cores.append(core)
        tails.append(tail)
        ps.append(p)
    return CoreTailSplit(
        inst=inst,
        mode=mode,
        c=float(c),
        a=float(a),
        vstar=vstar,
        r_i=r_i,
        r=r,
        t=t,
        thresholds=thresholds,
        p=np.array(ps),
        core=tuple(cores),
        tail=tuple(tails),
    )


def tail_events(split: CoreTailSplit, max_items: int = TAIL_ITEM_CAP) -> list[TailEvent]:
    """All tail subsets A of items with p_i > 0, in order of increasing |A| then lexicographic."""
    pos = [i for i in range(split.n_items) if split.p[i] > 0]
    if len(pos) > max_items:
        raise SizeError(f"{len(pos)} items have tail mass; enumeration is capped at {max_items}", len(pos), max_items)
    events = []
    for k in range(len(pos) + 1):
        for A in itertools.combinations(pos, k):
            pa = 1.0
            for i in pos:
                pa *= split.p[i] if i in A else 1.0 - split.p[i]
            events.append(TailEvent(A, float(pa), tuple(split.tail[i] for i in A)))
    return events


def ly1_check(split: CoreTailSplit) -> Report:
    """Tail probabilities never exceed 1/t_i."""
    slack = 1.0 / split.t - split.p
    return Report("tail-probability", bool(np.all(slack >= -1e-12)), {"p": split.p, "inv_t": 1.0 / split.t})


def _single_buyer(split: CoreTailSplit):
    if split.inst.n_buyers != 1:
        raise PreconditionError("optimal revenue oracle is available for a single buyer only")


def tail_revenue_sum(
    split: CoreTailSplit,
    rev_oracle: Callable = rev,
    events: Sequence[TailEvent] | None = None,
    cap: int = TYPE_CAP,
) -> tuple[float, list[dict]]:
    """Sum over A of p_A * Rev(tail product on A), with the per-event terms."""
    _single_buyer(split)
    events = tail_events(split) if events is None else events
    total, terms = 0.0, []
    for ev in events:
        if not ev.A or ev.p_A == 0.0:
            terms.append({"A": list(ev.A), "p_A": ev.p_A, "rev": 0.0})
            continue
        rv = float(rev_oracle(ev.tail_joint(cap)))
        total += ev.p_A * rv
        terms.append({"A": list(ev.A), "p_A": ev.p_A, "rev": rv})
    return total, terms


def ly2_checks(split: CoreTailSplit, rev_oracle: Callable = rev) -> Report:
    """Rev(core_i) <= r_i and Rev(tail_i) <= r_i / p_i for every non-null part."""
    _single_buyer(split)
    rows, ok = [], True
    for i in range(split.n_items):
        row = {"item": i, "r_i": float(split.r_i[i]), "p_i": float(split.p[i])}
        if split.core[i] is not None:
            row["rev_core"] = float(rev_oracle(JointDist.product([split.core[i]])))
            ok &= row["rev_core"] <= split.r_i[i] + 1e-6
        if split.tail[i] is not None:
            row["rev_tail"] = float(rev_oracle(JointDist.product([split.tail[i]])))
            row["tail_bound"] = float(split.r_i[i] / split.p[i])
            ok &= row["rev_tail"] <= row["tail_bound"] + 1e-6
        rows.append(row)
    return Report("core-tail-item-revenue", bool(ok), {"items": rows})


def core_decomposition_bound(split: CoreTailSplit, rev_oracle: Callable = rev, cap: int = TYPE_CAP) -> Report:
    """Rev(D) <= Welfare(all-core) + sum_A p_A Rev(tail product on A)."""
    _single_buyer(split)
    events = tail_events(split)
    mass = sum(ev.p_A for ev in events)
    lhs = float(rev_oracle(as_joint(split.inst, cap)))
    core_w = split.core_welfare()
    tail_sum, terms = tail_revenue_sum(split, rev_oracle, events, cap)
    rhs = core_w + tail_sum
    ly2 = ly2_checks(split, rev_oracle)
    passed = lhs <= rhs + 1e-6 and abs(mass - 1.0) <= 1e-9 and ly2.passed
    return Report(
        "core-decomposition",
        passed,
        {
            "lhs": lhs,
            "rhs": rhs,
            "core_welfare": core_w,
            "tail_sum": tail_sum,
            "event_mass": mass,
            "events": terms,
            "ly2": ly2.values["items"],
            "ly2_passed": ly2.passed,
        },
    )


def tail_bound_check(split: CoreTailSplit, rev_oracle: Callable = rev, cap: int = TYPE_CAP) -> Report:
    """Tail revenue sum against the bound for the split's mode, in units of SRev.

    uniform: (1 + 1/c); uniform_a: (1 + 2 e^{1/(ca)}/c) when Rev <= a n SRev
    (vacuous otherwise); adaptive: (1 + 1/c), which is 2 at c = 1, and the
    looser 5 is also reported at c = 4.
    """
    tail_sum, _ = tail_revenue_sum(split, rev_oracle, cap=cap)
    s = split.r
    n = split.n_items
    values = {"tail_sum": tail_sum, "srev": s, "mode": split.mode, "c": split.c}
    premise = True
    if split.mode == "uniform_a":
        factor = 1 + 2 * math.exp(1 / (split.c * split.a)) / split.c
        full = float(rev_oracle(as_joint(split.inst, cap)))
        premise = full <= split.a * n * s + 1e-9
        values.update(rev=full, premise=premise)
    else:
        factor = 1 + 1 / split.c
    bound = factor * s
    values.update(factor=factor, bound=bound)
    passed = tail_sum <= bound + 1e-6 or not premise
    if split.mode == "adaptive" and split.c == 4:
        values["within_5_srev"] = tail_sum <= 5 * s + 1e-6
        passed = passed and values["within_5_srev"]
    return Report("tail-bound", bool(passed), values)


def core_welfare_bound_check(split: CoreTailSplit) -> Report:
    """Core welfare against (1 + ln c + ln n) SRev, (1 + ln c + ln a + ln n) SRev,
    or, for adaptive thresholds, max(SRev, BRev) >= Welfare(core) / 4 (single buyer)
    and Var(core) <= 2 c r^2 (any number of buyers)."""
    n = split.n_items
    s = split.r
    w = split.core_welfare()
    values = {"core_welfare": w, "srev": s, "mode": split.mode}
    if split.mode in ("uniform", "uniform_a"):
        factor = 1 + math.log(split.c) + math.log(n)
        if split.mode == "uniform_a":
            factor += math.log(split.a)
        values.update(factor=factor, bound=factor * s)
        return Report("core-welfare", w <= factor * s + 1e-9, values)
    var = float(sum(variance(d) for d in split.core if d is not None))
    var_bound = 2 * split.c * s * s
    values.update(core_variance=var, variance_bound=var_bound)
    passed = var <= var_bound + 1e-9
    if split.inst.n_buyers == 1 and split.c == 1:
        b = brev(split.inst).value
        values.update(brev=b, quarter_welfare=w / 4)
        passed = passed and max(s, b) >= w / 4 - 1e-9
    return Report("core-welfare", bool(passed), values)


def variance_bound_check(d: DiscreteDist, c: float, t: float) -> Report:
    """Var(F) <= (2t - 1) c^2 for F on [0, t c] with optimal revenue at most c."""
    if c < 0 or t <= 0:
        raise PreconditionError("need c >= 0 and t > 0")
    tol = 1e-9 * max(1.0, t * c)
    if d.max_value > t * c + tol:
        raise PreconditionError(f"support reaches {d.max_value}, beyond t*c = {t * c}")
    mono = monopoly_price(d)[1]
    if mono > c + 1e-9 * max(1.0, c):
        raise PreconditionError(f"monopoly revenue {mono} exceeds c = {c}")
    var = variance(d)
    bound = (2 * t - 1) * c * c
    return Report(
        "variance-bound",
        var <= bound + 1e-9,
        {"variance": var, "bound": bound, "relaxed_bound": 2 * t * c * c, "monopoly_revenue": mono},
    )


def core_variance_checks(split: CoreTailSplit) -> Report:
    """Var(core_i) <= 2 t_i r_i^2 for every item with a non-null core."""
    rows, ok = [], True
    for i, core in enumerate(split.core):
        if core is None:
            continue
        rep = variance_bound_check(core, float(split.r_i[i]), float(split.t[i]))
        row_ok = rep["variance"] <= rep["relaxed_bound"] + 1e-9 and rep.passed
        ok &= row_ok
        rows.append({"item": i, **rep.values})
    return Report("core-variance", bool(ok), {"items": rows})


def concentration_report(welfare_dist: DiscreteDist, C: float) -> float:
    """Probability mass within [C/2, 3C/2]."""
    if C < 0:
        raise ValidationError("centre must be nonnegative", "C")
    tol = 1e-12 * max(1.0, C)
    x = welfare_dist.support
    inside = (x >= C / 2 - tol) & (x <= 1.5 * C + tol)
    return float(welfare_dist.probs[inside].sum())


def best_concentration(welfare_dist: DiscreteDist) -> tuple[float, float]:
    """(C, d) maximizing the concentration mass; an optimal window starts or ends at an atom."""
    x = welfare_dist.support
    cands = np.unique(np.concatenate([2 * x, 2 * x / 3]))
    best_c, best_d = 0.0, -1.0
    for C in cands:
        d = concentration_report(welfare_dist, float(C))
        if d > best_d + 1e-15:
            best_c, best_d = float(C), d
    return best_c, best_d


def welfare_distribution(inst: MarketInstance, cap: int = 10**6) -> DiscreteDist:
    """Distribution of sum_i v*_i, the welfare of allocating each item to its top bidder."""
    if inst.is_correlated:
        return inst.joint.bundle()
    return sum_dists([max_dists(inst.column(i)) for i in range(inst.n_items)], cap=cap)


def many_max_check(inst: MarketInstance, c: float = 8.0) -> Report:
    """Either (c + 5) SRev bounds Rev, or the welfare is (3/4 - 24/c^2)-concentrated.

    Rev itself is not computable for many buyers, so the first branch compares
    against the logarithmic upper bound (2 + 2e^{1/4} + ln 4 + ln n) SRev,
    which is only a surrogate for Rev.
    """
    if c < 4 * math.sqrt(2) - 1e-12:
        raise PreconditionError(f"need c >= 4*sqrt(2), got {c}")
    split = build_split(inst, "adaptive", c=4.0)
    s = split.r
    n = inst.n_items
    surrogate = (2 + 2 * math.exp(0.25) + math.log(4) + math.log(n)) * s
    branch_srev = (c + 5) * s >= surrogate - 1e-9
    wdist = welfare_distribution(inst)
    target = 0.75 - 24 / c**2
    C, d = best_concentration(wdist)
    d_core = concentration_report(wdist, split.core_welfare())
    branch_conc = d >= target - 1e-12
    return Report(
        "many-buyer-concentration",
        bool(branch_srev or branch_conc),
        {
            "srev": s,
            "rev_upper_surrogate": surrogate,
            "branch_srev": bool(branch_srev),
            "concentration_target": target,
            "best_centre": C,
            "best_concentration": d,
            "core_welfare": split.core_welfare(),
            "concentration_at_core_welfare": d_core,
            "branch_concentrated": bool(branch_conc),
        },
        ["first branch uses an upper-bound surrogate for Rev"],
    )


def amplification_check(inst: MarketInstance, a: float, c: float = 1.0, cap: int = TYPE_CAP) -> Report:
    """If Rev <= a n SRev then Rev <= (2 + 2 e^{1/(ca)}/c + ln c + ln a + ln n) SRev (single buyer)."""
    if a <= 1 or c < 1:
        raise PreconditionError("need a > 1 and c >= 1")
    if inst.n_buyers != 1:
        raise PreconditionError("optimal revenue oracle is available for a single buyer only")
    n = inst.n_items
    full = float(rev(as_joint(inst, cap), cap))
    s = sum(optimal_item_rev(inst.column(i)).value for i in range(n))
    premise = full <= a * n * s + 1e-9
    factor = 2 + 2 * math.exp(1 / (c * a)) / c + math.log(c) + math.log(a) + math.log(n)
    holds = full <= factor * s + 1e-6
    return Report(
        "amplification",
        bool(holds or not premise),
        {"rev": full, "srev": s, "a": a, "c": c, "premise": bool(premise), "factor": factor, "conclusion": bool(holds)},
    )
