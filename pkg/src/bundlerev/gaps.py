"""Generators and experiments for the logarithmic separations between mechanisms.

Three constructions, all built on the truncated Equal-Revenue (ER) distribution:

* ``many_iid``: sqrt(n) buyers, n items, every value i.i.d. ER with mass
  1 - 1/sqrt(n) moved to 0; a sequential bundle-selling mechanism beats SRev.
* ``prev_max``: sqrt(n) buyers, buyer k values only block k of sqrt(n) items;
  bundling each block beats both SRev and the grand bundle.
* ``cor``: one buyer with correlated values; log2(n) blocks, block k is
  switched on with probability n^(-2k) and then scaled by n^(2k).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distcore import (
    DEFAULT_ATOM_CAP,
    DiscreteDist,
    JointDist,
    MarketInstance,
    RevenueEstimate,
    er_truncated,
    point_mass,
    sum_dists,
    zero_inflate,
)
from .errors import SizeError, ValidationError
from .sampling import inverse_cdf, stream
from .simplerev import PartitionSpec, brev, prev_on, srev
from .singleitem import monopoly_price

KINDS = ("many_iid", "prev_max", "cor")
COR_COARSEN = 0.01
COR_TYPE_BUDGET = 2 * 10**5
MANY_IID_ATOMS = 64


def _isqrt_exact(n: int) -> int:
    k = math.isqrt(n)
    if k * k != n:
        raise ValidationError(f"n = {n} must be a perfect square", "n")
    return k


def _log2_exact(n: int) -> int:
    if n < 2 or n & (n - 1):
        raise ValidationError(f"n = {n} must be a power of 2", "n")
    return n.bit_length() - 1


def near_equal_blocks(n: int, k: int) -> list[tuple[int, ...]]:
    """Split items 0..n-1 into k consecutive blocks whose sizes differ by at most one."""
    sizes = [n // k + (1 if b < n % k else 0) for b in range(k)]
    out, start = [], 0
    for s in sizes:
        out.append(tuple(range(start, start + s)))
        start += s
    return out


# --- many i.i.d. buyers ------------------------------------------------------


def many_iid_truncation(n: int) -> float:
    return n ** (1 / 8)


def gen_lb_many_iid(n: int, atoms: int = MANY_IID_ATOMS) -> MarketInstance:
    m = _isqrt_exact(n)
    d = zero_inflate(er_truncated(many_iid_truncation(n), atoms=atoms), 1 / m)
    grid = [[d] * m for _ in range(n)]
    return MarketInstance.from_grid(grid, label=f"many_iid(n={n})")


def _buyer_values(inst: MarketInstance, j: int, gen: np.random.Generator, count: int) -> np.ndarray:
    """(count, n) values of buyer j; items sharing a distribution object are drawn together."""
    u = gen.random((count, inst.n_items))
    out = np.empty_like(u)
    groups: dict[int, list[int]] = {}
    for i in range(inst.n_items):
        groups.setdefault(id(inst.grid[i][j]), []).append(i)
    for cols in groups.values():
        out[:, cols] = inverse_cdf(inst.grid[cols[0]][j], u[:, cols])
    return out


def sequential_revenues(
    inst: MarketInstance,
    configs: list[tuple[int, float]],
    trials: int,
    seed: int = 0,
    chunk: int = 2000,
) -> list[RevenueEstimate]:
    """Monte Carlo revenue of the sequential bundle mechanism for several (bundle_size, price) configs.

    Buyers arrive in index order.  A buyer facing at least ``bundle_size``
    unsold items takes the ``bundle_size`` available items it values most and
    buys them iff their total value is at least ``price``.  All configs share
    the same sampled values (common random numbers).
    """
    if inst.is_correlated:
        raise ValidationError("sequential simulation needs independent values", "instance")
    n, m = inst.n_items, inst.n_buyers
    for k, p in configs:
        if not 1 <= k <= n:
            raise ValidationError(f"bundle size {k} must lie in [1, {n}]", "bundle_size")
        if p < 0:
            raise ValidationError("price must be nonnegative", "price")
    gens = [stream(seed, j) for j in range(m)]
    sums = np.zeros(len(configs))
    sq = np.zeros(len(configs))
    done = 0
    while done < trials:
        c = min(chunk, trials - done)
        vals = [_buyer_values(inst, j, gens[j], c) for j in range(m)]
        rows = np.arange(c)[:, None]
        for idx, (k, p) in enumerate(configs):
            avail = np.ones((c, n), dtype=bool)
            left = np.full(c, n)
            sold = np.zeros(c)
            for j in range(m):
                v = np.where(avail, vals[j], -np.inf)
                top = np.argpartition(-v, k - 1, axis=1)[:, :k]
                bundle = v[rows, top].sum(axis=1)
                buys = (left >= k) & (bundle >= p - 1e-12 * max(1.0, p)) & (p > 0)
                avail[rows[buys], top[buys]] = False
                left = left - k * buys
                sold += buys
            rev = p * sold
            sums[idx] += rev.sum()
            sq[idx] += np.square(rev).sum()
        done += c
    out = []
    for idx in range(len(configs)):
        mean = sums[idx] / trials
        var = max(sq[idx] / trials - mean**2, 0.0)
        out.append(RevenueEstimate(mean, "monte-carlo", trials, math.sqrt(var / trials), seed))
    return out


def simulate_sequential(inst: MarketInstance, bundle_size: int, price: float, trials: int, seed: int = 0) -> RevenueEstimate:
    return sequential_revenues(inst, [(bundle_size, price)], trials, seed)[0]


def many_iid_configs(n: int, prices_per_size: int = 24) -> list[tuple[int, float]]:
    """Bundle sizes sqrt(n)/4 .. sqrt(n) and prices spanning the plausible bundle values."""
    m = math.isqrt(n)
    mean_item = 1 + math.log(many_iid_truncation(n))
    sizes = sorted({max(1, round(m * f)) for f in (0.25, 0.5, 0.75, 1.0)})
    configs = []
    for k in sizes:
        for p in np.linspace(0.5 * k, 1.2 * k * mean_item, prices_per_size):
            configs.append((k, float(p)))
    return configs


# --- partition beats max(SRev, BRev) with many buyers ------------------------


def gen_lb_prev_max(n: int, truncation: int | None = None) -> MarketInstance:
    m = _isqrt_exact(n)
    M = n if truncation is None else int(truncation)
    er = er_truncated(M, grid="integer")
    zero = point_mass(0.0)
    grid = [[er if j == i // m else zero for j in range(m)] for i in range(n)]
    return MarketInstance.from_grid(grid, label=f"prev_max(n={n}, M={M})")


def prev_max_blocks(n: int) -> PartitionSpec:
    m = _isqrt_exact(n)
    return PartitionSpec(tuple(tuple(range(k * m, (k + 1) * m)) for k in range(m)))


# --- one buyer, correlated blocks ------------------------------------------------


@dataclass(frozen=True, eq=False)
class BlockCorrelatedInstance:
    """Structured form of the correlated construction.

    Block k (1-based) is active with probability n^(-2k); when active every
    item in it has value n^(2k) * X with X i.i.d. from ``er``.  Blocks are
    independent.  Exact joints are only feasible for tiny n, so revenues are
    computed from per-block bundle distributions.
    """

    n: int
    blocks: tuple[tuple[int, ...], ...]
    er: DiscreteDist

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def activation(self, k: int) -> float:
        return float(self.n) ** (-2 * k)

    def scale(self, k: int) -> float:
        return float(self.n) ** (2 * k)

    def block_value(self, k: int, cap: int = DEFAULT_ATOM_CAP) -> DiscreteDist:
        """Unscaled value of block k's bundle given activation."""
        return sum_dists([self.er] * len(self.blocks[k - 1]), cap=cap)

    def srev(self) -> RevenueEstimate:
        """Every marginal earns exactly the ER revenue, scaled and thinned by the same factor."""
        r = monopoly_price(self.er)[1]
        return RevenueEstimate.exact(self.n * r)

    def prev_blocks(self) -> RevenueEstimate:
        """Bundle each block separately; activation and scale cancel in each block's revenue."""
        return RevenueEstimate.exact(sum(monopoly_price(self.block_value(k))[1] for k in range(1, self.n_blocks + 1)))

    def grand_bundle(self, rel_step: float | None = COR_COARSEN) -> DiscreteDist:
        parts = []
        for k in range(1, self.n_blocks + 1):
            b = self.block_value(k).scale(self.scale(k))
            parts.append(zero_inflate(b, self.activation(k)))
        return sum_dists(parts, coarsen_step=rel_step)

    def brev(self, rel_step: float | None = COR_COARSEN) -> RevenueEstimate:
        """Grand-bundle revenue; with coarsening this is an upper bound (values rounded up)."""
        value = monopoly_price(self.grand_bundle(rel_step))[1]
        if rel_step is None:
            return RevenueEstimate.exact(value)
        return RevenueEstimate(value, "upper-bound", note=f"values rounded up to a (1+{rel_step})^j grid")

    def joint_size(self) -> int:
        return math.prod(1 + self.er.size ** len(b) for b in self.blocks)

    def to_market_instance(self) -> MarketInstance:
        size = self.joint_size()
        if size > COR_TYPE_BUDGET:
            raise SizeError(f"explicit joint would have {size} types", size, COR_TYPE_BUDGET)
        rows = [np.zeros((1, self.n))]
        probs = [np.ones(1)]
        for k, block in enumerate(self.blocks, start=1):
            a = self.activation(k)
            grids = np.meshgrid(*[np.arange(self.er.size)] * len(block), indexing="ij")
            idx = np.stack([g.ravel() for g in grids], axis=1)
            vals = np.zeros((idx.shape[0] + 1, self.n))
            vals[1:, list(block)] = self.er.support[idx] * self.scale(k)
            pr = np.concatenate([[1 - a], a * np.prod(self.er.probs[idx], axis=1)])
            # combine with previous blocks (values add since blocks are disjoint)
            old_v, old_p = rows[0], probs[0]
            rows[0] = (old_v[:, None, :] + vals[None, :, :]).reshape(-1, self.n)
            probs[0] = (old_p[:, None] * pr[None, :]).reshape(-1)
        joint = JointDist.normalized(rows[0], probs[0])
        return MarketInstance.correlated(joint, label=f"cor(n={self.n}, er_atoms={self.er.size})")


def lb_cor_structure(n: int, er: DiscreteDist | None = None) -> BlockCorrelatedInstance:
    L = _log2_exact(n)
    er = er_truncated(n, grid="integer") if er is None else er
    return BlockCorrelatedInstance(n, tuple(near_equal_blocks(n, L)), er)


def gen_lb_cor(n: int, budget: int = COR_TYPE_BUDGET) -> MarketInstance:
    """Explicit correlated instance, using the finest geometric ER grid that fits ``budget`` types."""
    L = _log2_exact(n)
    blocks = near_equal_blocks(n, L)
    for atoms in range(n, 1, -1):
        size = math.prod(1 + atoms ** len(b) for b in blocks)
        if size <= budget:
            er = er_truncated(n, atoms=atoms)
            return lb_cor_structure(n, er).to_market_instance()
    raise SizeError(f"no ER grid fits the {budget}-type budget at n = {n}", None, budget)


# --- experiments -----------------------------------------------------------------


@dataclass
class GapExperimentResult:
    kind: str
    n: int
    seed: int
    metrics: dict = field(default_factory=dict)  # name -> RevenueEstimate | None
    ratio: float = float("nan")
    ratio_se: float = 0.0
    config: dict = field(default_factory=dict)

    def to_row(self) -> dict:
        row = {"kind": self.kind, "n": self.n, "seed": self.seed}
        for name in ("srev", "brev", "prev_blocks", "seq_rev"):
            est = self.metrics.get(name)
            row[name] = "" if est is None else repr(est.value)
            row[f"{name}_kind"] = "" if est is None else est.kind
            row[f"{name}_se"] = "" if est is None else repr(est.std_error)
        row["ratio"] = repr(self.ratio)
        row["ratio_se"] = repr(self.ratio_se)
        for key in CONFIG_COLUMNS:
            row[key] = self.config.get(key, "")
        return row


CONFIG_COLUMNS = ("truncation", "er_grid", "blocks", "bundle_size", "price", "trials")
CSV_COLUMNS = (
    "kind",
    "n",
    "seed",
    *[f"{m}{s}" for m in ("srev", "brev", "prev_blocks", "seq_rev") for s in ("", "_kind", "_se")],
    "ratio",
    "ratio_se",
    *CONFIG_COLUMNS,
)


def _run_prev_max(n: int, seed: int) -> GapExperimentResult:
    inst = gen_lb_prev_max(n)
    s, b = srev(inst), brev(inst)
    p = prev_on(inst, prev_max_blocks(n))
    return GapExperimentResult(
        "prev_max",
        n,
        seed,
        {"srev": s, "brev": b, "prev_blocks": p},
        p.value / max(s.value, b.value),
        0.0,
        {"truncation": n, "er_grid": "integer", "blocks": math.isqrt(n)},
    )


def _run_cor(n: int, seed: int) -> GapExperimentResult:
    st = lb_cor_structure(n)
    s, b, p = st.srev(), st.brev(), st.prev_blocks()
    return GapExperimentResult(
        "cor",
        n,
        seed,
        {"srev": s, "brev": b, "prev_blocks": p},
        p.value / max(s.value, b.value),
        0.0,
        {"truncation": n, "er_grid": "integer", "blocks": "/".join(str(len(x)) for x in st.blocks)},
    )


def _run_many_iid(n: int, seed: int, trials: int, tune_trials: int) -> GapExperimentResult:
    inst = gen_lb_many_iid(n)
    s = srev(inst)
    configs = many_iid_configs(n)
    # pick the best config on a tuning stream, then re-estimate it on an independent stream
    tuned = sequential_revenues(inst, configs, tune_trials, seed=seed * 2 + 1)
    best = int(np.argmax([e.value for e in tuned]))
    k, price = configs[best]
    seq = sequential_revenues(inst, [(k, price)], trials, seed=seed * 2)[0]
    return GapExperimentResult(
        "many_iid",
        n,
        seed,
        {"srev": s, "seq_rev": seq},
        seq.value / s.value,
        seq.std_error / s.value,
        {
            "truncation": repr(many_iid_truncation(n)),
            "er_grid": f"geometric{MANY_IID_ATOMS}",
            "bundle_size": k,
            "price": repr(price),
            "trials": trials,
        },
    )


def run_gap_experiment(
    kind: str,
    n_list,
    seed: int = 0,
    trials: int = 10**5,
    tune_trials: int = 10**4,
) -> list[GapExperimentResult]:
    if kind not in KINDS:
        raise ValidationError(f"unknown kind {kind!r}; expected one of {KINDS}", "kind")
    out = []
    for n in n_list:
        if kind == "prev_max":
            out.append(_run_prev_max(int(n), seed))
        elif kind == "cor":
            out.append(_run_cor(int(n), seed))
        else:
            out.append(_run_many_iid(int(n), seed, trials, tune_trials))
    return out
