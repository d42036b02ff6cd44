"""Simple-mechanism benchmarks: selling separately, grand bundling, partitions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

from .distcore import DEFAULT_ATOM_CAP, MarketInstance, RevenueEstimate, sum_dists
from .errors import SizeError, ValidationError
from .singleitem import monopoly_price, optimal_item_rev

PARTITION_CAP = 10


@dataclass(frozen=True)
class PartitionSpec:
    """Disjoint nonempty blocks of 0-based item indices covering all items."""

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(sorted(tuple(sorted(b)) for b in self.blocks))
        if any(len(b) == 0 for b in blocks):
            raise ValidationError("empty block", "blocks")
        seen = [i for b in blocks for i in b]
        if len(seen) != len(set(seen)):
            raise ValidationError("blocks overlap", "blocks")
        if sorted(seen) != list(range(len(seen))):
            raise ValidationError("blocks must cover items 0..n-1", "blocks")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def singletons(cls, n: int) -> "PartitionSpec":
        return cls(tuple((i,) for i in range(n)))

    @classmethod
    def grand(cls, n: int) -> "PartitionSpec":
        return cls((tuple(range(n)),))

    @classmethod
    def from_rgs(cls, rgs: Sequence[int]) -> "PartitionSpec":
        blocks: dict[int, list[int]] = {}
        for item, b in enumerate(rgs):
            blocks.setdefault(b, []).append(item)
        return cls(tuple(tuple(v) for v in blocks.values()))

    @property
    def n_items(self) -> int:
        return sum(len(b) for b in self.blocks)


def restricted_growth_strings(n: int) -> Iterator[tuple[int, ...]]:
    """All set partitions of n items as restricted growth strings, in lexicographic order."""
    if n == 0:
        yield ()
        return
    a = [0] * n
    b = [1] * n  # b[i] = 1 + max(a[:i])
    while True:
        yield tuple(a)
        i = n - 1
        while i > 0 and a[i] == b[i]:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        for k in range(i + 1, n):
            a[k] = 0
            b[k] = max(b[i], a[i] + 1)


def bundle_revenue(inst: MarketInstance, items: Sequence[int], cap: int = DEFAULT_ATOM_CAP) -> float:
    """Myerson revenue of selling ``items`` as one bundle."""
    items = list(items)
    if inst.is_correlated:
        return monopoly_price(inst.joint.bundle(items))[1]
    per_buyer = [sum_dists([inst.grid[i][j] for i in items], cap=cap) for j in range(inst.n_buyers)]
    return optimal_item_rev(per_buyer).value


def srev(inst: MarketInstance) -> RevenueEstimate:
    if inst.is_correlated:
        return RevenueEstimate.exact(sum(monopoly_price(d)[1] for d in inst.marginals()))
    return RevenueEstimate.exact(sum(optimal_item_rev(inst.column(i)).value for i in range(inst.n_items)))


def brev(inst: MarketInstance, cap: int = DEFAULT_ATOM_CAP) -> RevenueEstimate:
    return RevenueEstimate.exact(bundle_revenue(inst, range(inst.n_items), cap=cap))


def brev_price(inst: MarketInstance, cap: int = DEFAULT_ATOM_CAP) -> tuple[float, float]:
    """Optimal grand-bundle posted price and revenue for a single buyer."""
    if inst.n_buyers != 1:
        raise ValidationError("posted bundle price is defined for one buyer", "buyers")
    if inst.is_correlated:
        return monopoly_price(inst.joint.bundle())
    return monopoly_price(sum_dists(inst.buyer_items(0), cap=cap))


def prev_on(inst: MarketInstance, part: PartitionSpec, cap: int = DEFAULT_ATOM_CAP) -> RevenueEstimate:
    if part.n_items != inst.n_items:
        raise ValidationError("partition does not cover the instance's items", "blocks")
    return RevenueEstimate.exact(sum(bundle_revenue(inst, b, cap=cap) for b in part.blocks))


def prev_exact(
    inst: MarketInstance,
    max_items: int = PARTITION_CAP,
    cap: int = DEFAULT_ATOM_CAP,
) -> tuple[RevenueEstimate, PartitionSpec]:
    """Best partition mechanism by enumerating all set partitions.

    Ties go to the partition with more blocks, then to the lexicographically
    smallest block list.
    """
    n = inst.n_items
    if n > max_items:
        raise SizeError(
            f"{n} items exceeds the partition enumeration cap {max_items}; use prev_on with explicit partitions",
            n,
            max_items,
        )
    cache: dict[tuple[int, ...], float] = {}
    best_val = -1.0
    best: PartitionSpec | None = None
    for rgs in restricted_growth_strings(n):
        part = PartitionSpec.from_rgs(rgs)
        total = 0.0
        for b in part.blocks:
            if b not in cache:
                cache[b] = bundle_revenue(inst, b, cap=cap)
            total += cache[b]
        tol = 1e-12 * max(1.0, abs(best_val))
        if best is None or total > best_val + tol:
            best_val, best = total, part
        elif abs(total - best_val) <= tol:
            key = (-len(part.blocks), part.blocks)
            if key < (-len(best.blocks), best.blocks):
                best_val, best = max(total, best_val), part
    return RevenueEstimate.exact(best_val), best
