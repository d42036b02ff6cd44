"""Exact algebra over finite-support value distributions.

Everything in the package is built from :class:`DiscreteDist` (one value,
finite support), :class:`JointDist` (a correlated value vector for one buyer)
and :class:`MarketInstance` (items x buyers).  All objects are immutable: the
numpy arrays they hold are flagged read-only after validation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import SizeError, ValidationError

VALUE_TOL = 1e-12
PROB_TOL = 1e-12
LOAD_PROB_TOL = 1e-9
DEFAULT_ATOM_CAP = 10**6
# outer-product work bound for a single convolution
OUTER_CAP = 4 * 10**7


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _group(values: np.ndarray, tol: float = VALUE_TOL):
    """Merge values closer than ``tol`` (relative above 1, absolute below).

    Returns the representative of each group (its smallest member) and, for
    every input element, the index of its group.
    """
    order = np.argsort(values, kind="stable")
    v = values[order]
    if v.size == 0:
        return v, np.zeros(0, dtype=np.intp)
    gap = np.diff(v) > tol * np.maximum(1.0, np.abs(v[:-1]))
    sorted_ids = np.concatenate(([0], np.cumsum(gap)))
    inverse = np.empty_like(sorted_ids)
    inverse[order] = sorted_ids
    starts = np.concatenate(([0], np.nonzero(gap)[0] + 1))
    return v[starts], inverse


@dataclass(frozen=True, eq=False)
class DiscreteDist:
    """A finite-support distribution of a nonnegative value.

    ``support`` is strictly increasing, ``probs`` strictly positive and summing
    to one.  Use :meth:`from_atoms` to build from unsorted or duplicated atoms.
    """

    support: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        support = np.array(self.support, dtype=np.float64).reshape(-1)
        probs = np.array(self.probs, dtype=np.float64).reshape(-1)
        if support.shape != probs.shape:
            raise ValidationError("support and probs differ in length", "probs")
        if support.size == 0:
            raise ValidationError("empty support", "support")
        if not np.all(np.isfinite(support)) or np.any(support < 0):
            raise ValidationError("values must be finite and nonnegative", "support")
        if np.any(np.diff(support) <= 0):
            raise ValidationError("support must be strictly increasing", "support")
        if not np.all(np.isfinite(probs)) or np.any(probs <= 0):
            raise ValidationError("probabilities must be positive", "probs")
        total = probs.sum()
        if abs(total - 1.0) > PROB_TOL:
            raise ValidationError(f"probabilities sum to {total!r}, not 1", "probs")
        object.__setattr__(self, "support", _readonly(support))
        object.__setattr__(self, "probs", _readonly(probs))

    @classmethod
    def from_atoms(cls, values, probs, tol: float = VALUE_TOL) -> "DiscreteDist":
        """Sort, merge near-equal values, drop zero masses and renormalize."""
        values = np.asarray(values, dtype=np.float64).reshape(-1)
        probs = np.asarray(probs, dtype=np.float64).reshape(-1)
        if values.shape != probs.shape:
            raise ValidationError("values and probs differ in length", "probs")
        if np.any(probs < 0):
            raise ValidationError("negative probability", "probs")
        keep = probs > 0
        values, probs = values[keep], probs[keep]
        if values.size == 0:
            raise ValidationError("no positive-probability atoms", "probs")
        uniq, inv = _group(values, tol)
        merged = np.zeros(uniq.size)
        np.add.at(merged, inv, probs)
        return cls(uniq, merged / merged.sum())

    @classmethod
    def point_mass(cls, c: float) -> "DiscreteDist":
        return cls(np.array([float(c)]), np.array([1.0]))

    @property
    def size(self) -> int:
        return int(self.support.size)

    @property
    def max_value(self) -> float:
        return float(self.support[-1])

    def survival(self) -> np.ndarray:
        """Pr[v >= support[k]] for every atom, summed from the top so tiny tails keep precision."""
        return np.minimum(np.cumsum(self.probs[::-1])[::-1], 1.0)

    def sf(self, x: float, strict: bool = False) -> float:
        """Pr[v >= x], or Pr[v > x] when ``strict``."""
        eps = VALUE_TOL * max(1.0, abs(x))
        if strict:
            mask = self.support > x + eps
        else:
            mask = self.support >= x - eps
        return min(float(self.probs[mask].sum()), 1.0)

    def scale(self, lam: float) -> "DiscreteDist":
        if not lam > 0:
            raise ValidationError("scale factor must be positive", "lam")
        return DiscreteDist(self.support * lam, self.probs.copy())

    def allclose(self, other: "DiscreteDist", tol: float = 1e-12) -> bool:
        return (
            self.size == other.size
            and np.allclose(self.support, other.support, rtol=tol, atol=tol)
            and np.allclose(self.probs, other.probs, rtol=0, atol=tol)
        )

    def to_dict(self) -> dict:
        return {"support": self.support.tolist(), "probs": self.probs.tolist()}

    def __repr__(self) -> str:
        if self.size <= 6:
            atoms = ", ".join(f"{v:g}:{p:.4g}" for v, p in zip(self.support, self.probs))
            return f"DiscreteDist({{{atoms}}})"
        return f"DiscreteDist(<{self.size} atoms on [{self.support[0]:g}, {self.support[-1]:g}]>)"


def point_mass(c: float) -> DiscreteDist:
    return DiscreteDist.point_mass(c)


def convolve(a: DiscreteDist, b: DiscreteDist, cap: int = DEFAULT_ATOM_CAP) -> DiscreteDist:
    """Distribution of X + Y for independent X ~ a, Y ~ b."""
    work = a.size * b.size
    if work > OUTER_CAP:
        raise SizeError(f"convolution of {a.size} x {b.size} atoms exceeds work cap {OUTER_CAP}", work, OUTER_CAP)
    values = np.add.outer(a.support, b.support).ravel()
    probs = np.multiply.outer(a.probs, b.probs).ravel()
    out = DiscreteDist.from_atoms(values, probs)
    if out.size > cap:
        raise SizeError(f"convolution support of {out.size} atoms exceeds cap {cap}", out.size, cap)
    return out


def sum_dists(
    dists: Sequence[DiscreteDist],
    cap: int = DEFAULT_ATOM_CAP,
    coarsen_step: float | None = None,
) -> DiscreteDist:
    """Distribution of the sum of independent values.

    With ``coarsen_step`` every partial sum is rounded *up* onto a geometric
    grid, so the result stochastically dominates the exact sum.
    """
    if not dists:
        return point_mass(0.0)

    def step(acc, d):
        if coarsen_step is not None:
            d = coarsen(d, coarsen_step)
        out = convolve(acc, d, cap=cap)
        return coarsen(out, coarsen_step) if coarsen_step is not None else out

    first = coarsen(dists[0], coarsen_step) if coarsen_step is not None else dists[0]
    return reduce(step, dists[1:], first)


def max_dist(a: DiscreteDist, b: DiscreteDist) -> DiscreteDist:
    """Distribution of max(X, Y) for independent X ~ a, Y ~ b."""
    values = np.concatenate((a.support, b.support))
    grid, inv = _group(values)
    fa = np.zeros(grid.size)
    fb = np.zeros(grid.size)
    np.add.at(fa, inv[: a.size], a.probs)
    np.add.at(fb, inv[a.size :], b.probs)
    cdf_b = np.cumsum(fb)
    below_a = np.cumsum(fa) - fa
    # Pr[max = x] = Pr[X = x, Y <= x] + Pr[Y = x, X < x]
    mass = fa * cdf_b + fb * below_a
    return DiscreteDist.from_atoms(grid, mass)


def max_dists(dists: Iterable[DiscreteDist]) -> DiscreteDist:
    return reduce(max_dist, dists)


def welfare(d: DiscreteDist) -> float:
    """Expected value."""
    return float(np.dot(d.support, d.probs))


def variance(d: DiscreteDist) -> float:
    mu = welfare(d)
    return float(np.dot(d.probs, (d.support - mu) ** 2))


def condition_split(d: DiscreteDist, theta: float):
    """Split ``d`` at ``theta``: returns (core, tail, p_tail).

    core is ``d | v <= theta`` and tail is ``d | v > theta``; either is ``None``
    (the null distribution) when its conditioning event has probability zero.
    """
    if not theta >= 0:
        raise ValidationError("threshold must be nonnegative", "theta")
    in_tail = d.support > theta + VALUE_TOL * max(1.0, theta)
    p_tail = float(d.probs[in_tail].sum())
    core = None
    tail = None
    if np.any(~in_tail):
        core = DiscreteDist.from_atoms(d.support[~in_tail], d.probs[~in_tail])
    if np.any(in_tail):
        tail = DiscreteDist.from_atoms(d.support[in_tail], d.probs[in_tail])
    return core, tail, p_tail


def er_truncated(M: float, atoms: int = 64, grid: str = "geometric") -> DiscreteDist:
    """Equal-Revenue distribution truncated at ``M``, discretized.

    Pr[v >= x] = 1/x at every grid point and the mass above ``M`` sits on an
    atom at ``M``, so every grid price earns revenue exactly 1.  ``grid`` is
    ``"geometric"`` (``atoms`` points from 1 to M) or ``"integer"`` (1, 2, ..., M;
    sums stay on the integer lattice, which keeps convolutions small).
    """
    if not M >= 1:
        raise ValidationError("truncation level must be >= 1", "M")
    if M == 1:
        return point_mass(1.0)
    if grid == "geometric":
        if atoms < 2:
            raise ValidationError("need at least 2 atoms", "atoms")
        xs = np.geomspace(1.0, M, atoms)
        xs[-1] = M
    elif grid == "integer":
        if float(M) != int(M):
            raise ValidationError("integer grid needs an integer truncation level", "M")
        xs = np.arange(1, int(M) + 1, dtype=np.float64)
    else:
        raise ValidationError(f"unknown grid {grid!r}", "grid")
    inv = 1.0 / xs
    probs = np.append(inv[:-1] - inv[1:], inv[-1])
    return DiscreteDist(xs, probs / probs.sum())


def uniform_grid(a: float, b: float, k: int) -> DiscreteDist:
    """Equal mass 1/k at the midpoints a + (i + 1/2)(b - a)/k."""
    if not a < b:
        raise ValidationError("need a < b", "b")
    if k < 2:
        raise ValidationError("need at least 2 atoms", "k")
    if a < 0:
        raise ValidationError("values must be nonnegative", "a")
    xs = a + (np.arange(k) + 0.5) * (b - a) / k
    return DiscreteDist(xs, np.full(k, 1.0 / k))


def zero_inflate(d: DiscreteDist, q: float) -> DiscreteDist:
    """Mixture q*d + (1-q)*point_mass(0)."""
    if not 0 <= q <= 1:
        raise ValidationError("mixing weight must lie in [0, 1]", "q")
    if q == 1:
        return d
    if q == 0:
        return point_mass(0.0)
    values = np.append(d.support, 0.0)
    probs = np.append(d.probs * q, 1.0 - q)
    return DiscreteDist.from_atoms(values, probs)


def coarsen(d: DiscreteDist, rel_step: float, direction: str = "up") -> DiscreteDist:
    """Round positive values onto the geometric grid (1 + rel_step)^j.

    ``direction="up"`` yields a dominating distribution, ``"down"`` a dominated one.
    """
    if not rel_step > 0:
        raise ValidationError("rel_step must be positive", "rel_step")
    pos = d.support > 0
    logb = math.log1p(rel_step)
    j = np.log(d.support[pos]) / logb
    if direction == "up":
        j = np.ceil(j - 1e-9)
    elif direction == "down":
        j = np.floor(j + 1e-9)
    else:
        raise ValidationError(f"unknown direction {direction!r}", "direction")
    values = d.support.copy()
    values[pos] = np.exp(j * logb)
    return DiscreteDist.from_atoms(values, d.probs)


@dataclass(frozen=True, eq=False)
class JointDist:
    """Explicit joint distribution of one buyer's value vector."""

    support: np.ndarray  # (K, n)
    probs: np.ndarray  # (K,)

    def __post_init__(self):
        support = np.array(self.support, dtype=np.float64)
        probs = np.array(self.probs, dtype=np.float64).reshape(-1)
        if support.ndim != 2 or support.shape[0] != probs.size or support.shape[1] == 0:
            raise ValidationError("support must be a (types x items) matrix matching probs", "support")
        if not np.all(np.isfinite(support)) or np.any(support < 0):
            raise ValidationError("value vectors must be finite and nonnegative", "support")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise ValidationError("probabilities must be nonnegative", "probs")
        total = probs.sum()
        if abs(total - 1.0) > PROB_TOL:
            raise ValidationError(f"probabilities sum to {total!r}, not 1", "probs")
        keep = probs > 0
        support, probs = support[keep], probs[keep]
        rows, inv = np.unique(support, axis=0, return_inverse=True)
        merged = np.zeros(rows.shape[0])
        np.add.at(merged, inv.reshape(-1), probs)
        object.__setattr__(self, "support", _readonly(rows))
        object.__setattr__(self, "probs", _readonly(merged))

    @classmethod
    def normalized(cls, support, probs) -> "JointDist":
        probs = np.asarray(probs, dtype=np.float64)
        return cls(support, probs / probs.sum())

    @classmethod
    def product(cls, dists: Sequence[DiscreteDist], cap: int = DEFAULT_ATOM_CAP) -> "JointDist":
        size = math.prod(d.size for d in dists)
        if size > cap:
            raise SizeError(f"product support {size} exceeds cap {cap}", size, cap)
        grids = np.meshgrid(*[d.support for d in dists], indexing="ij")
        pgrids = np.meshgrid(*[d.probs for d in dists], indexing="ij")
        support = np.stack([g.ravel() for g in grids], axis=1)
        probs = np.prod(np.stack([g.ravel() for g in pgrids], axis=1), axis=1)
        return cls.normalized(support, probs)

    @property
    def n_items(self) -> int:
        return int(self.support.shape[1])

    @property
    def size(self) -> int:
        return int(self.support.shape[0])

    def marginal(self, i: int) -> DiscreteDist:
        return DiscreteDist.from_atoms(self.support[:, i], self.probs)

    def bundle(self, items: Iterable[int] | None = None) -> DiscreteDist:
        """Distribution of the summed value of ``items`` (default: all)."""
        cols = self.support if items is None else self.support[:, list(items)]
        return DiscreteDist.from_atoms(cols.sum(axis=1), self.probs)

    def conditional(self, mask: np.ndarray):
        """(JointDist | None, mass) for the event given by a boolean mask over types."""
        mask = np.asarray(mask, dtype=bool)
        mass = float(self.probs[mask].sum())
        if mass <= 0:
            return None, 0.0
        return JointDist.normalized(self.support[mask], self.probs[mask]), mass

    def permute_items(self, perm: Sequence[int]) -> "JointDist":
        return JointDist(self.support[:, list(perm)], self.probs.copy())

    def welfare(self) -> float:
        return float(np.dot(self.probs, self.support.sum(axis=1)))

    def to_dict(self) -> dict:
        return {"support": self.support.tolist(), "probs": self.probs.tolist()}


@dataclass(frozen=True, eq=False)
class MarketInstance:
    """``n_items`` x ``n_buyers`` market.

    Either ``grid[i][j]`` holds the independent distribution of buyer j's value
    for item i, or ``joint`` holds one buyer's correlated value vector.
    """

    n_items: int
    n_buyers: int
    grid: tuple | None = None
    joint: JointDist | None = None
    label: str = ""

    def __post_init__(self):
        if (self.grid is None) == (self.joint is None):
            raise ValidationError("exactly one of grid/joint must be given", "grid")
        if self.n_items < 1 or self.n_buyers < 1:
            raise ValidationError("need at least one item and one buyer", "items")
        if self.joint is not None:
            if self.n_buyers != 1:
                raise ValidationError("correlated instances have a single buyer", "buyers")
            if self.joint.n_items != self.n_items:
                raise ValidationError("joint dimension does not match item count", "joint")
        else:
            grid = tuple(tuple(row) for row in self.grid)
            if len(grid) != self.n_items or any(len(row) != self.n_buyers for row in grid):
                raise ValidationError("grid shape does not match items x buyers", "grid")
            if not all(isinstance(d, DiscreteDist) for row in grid for d in row):
                raise ValidationError("grid entries must be DiscreteDist", "grid")
            object.__setattr__(self, "grid", grid)

    @classmethod
    def independent(cls, items: Sequence[DiscreteDist], label: str = "") -> "MarketInstance":
        """Single buyer with independent item values."""
        return cls(len(items), 1, grid=tuple((d,) for d in items), label=label)

    @classmethod
    def from_grid(cls, grid: Sequence[Sequence[DiscreteDist]], label: str = "") -> "MarketInstance":
        grid = tuple(tuple(row) for row in grid)
        return cls(len(grid), len(grid[0]), grid=grid, label=label)

    @classmethod
    def correlated(cls, joint: JointDist, label: str = "") -> "MarketInstance":
        return cls(joint.n_items, 1, joint=joint, label=label)

    @property
    def is_correlated(self) -> bool:
        return self.joint is not None

    def column(self, i: int) -> list[DiscreteDist]:
        """All buyers' distributions for item ``i``."""
        self._need_grid()
        return list(self.grid[i])

    def buyer_items(self, j: int = 0) -> list[DiscreteDist]:
        """Buyer ``j``'s per-item distributions."""
        self._need_grid()
        return [row[j] for row in self.grid]

    def marginals(self) -> list[DiscreteDist]:
        """Per-item marginals of the single buyer."""
        if self.n_buyers != 1:
            raise ValidationError("marginals are defined for single-buyer instances", "buyers")
        if self.joint is not None:
            return [self.joint.marginal(i) for i in range(self.n_items)]
        return self.buyer_items(0)

    def to_joint(self, cap: int = DEFAULT_ATOM_CAP) -> JointDist:
        if self.joint is not None:
            return self.joint
        if self.n_buyers != 1:
            raise ValidationError("only single-buyer instances have a joint type space", "buyers")
        return JointDist.product(self.buyer_items(0), cap=cap)

    def _need_grid(self):
        if self.grid is None:
            raise ValidationError("operation needs an independent (grid) instance", "grid")

    def to_dict(self) -> dict:
        out = {"label": self.label, "items": self.n_items, "buyers": self.n_buyers}
        if self.joint is not None:
            out["joint"] = self.joint.to_dict()
        else:
            out["grid"] = [[d.to_dict() for d in row] for row in self.grid]
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "MarketInstance":
        return _instance_from_obj(obj)


@dataclass(frozen=True)
class RevenueEstimate:
    """A revenue number and where it came from.

    ``kind`` is ``"exact"``, ``"monte-carlo"``, or ``"upper-bound"`` (an exact
    computation on a coarsened, dominating distribution).
    """

    value: float
    kind: str = "exact"
    samples: int = 0
    std_error: float = 0.0
    seed: int | None = None
    note: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind not in ("exact", "monte-carlo", "upper-bound"):
            raise ValidationError(f"unknown kind {self.kind!r}", "kind")
        if self.kind != "monte-carlo" and (self.samples != 0 or self.std_error != 0):
            raise ValidationError("non-sampled estimates carry no samples or std error", "samples")
        if not self.value >= -1e-12:
            raise ValidationError("revenue must be nonnegative", "value")

    @classmethod
    def exact(cls, value: float) -> "RevenueEstimate":
        return cls(max(float(value), 0.0))

    def __float__(self) -> float:
        return self.value


# --- JSON instance files -------------------------------------------------


def _number_list(obj, path: str, nonneg: bool = True) -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise ValidationError("expected a nonempty list of numbers", path)
    try:
        arr = np.array(obj, dtype=np.float64)
    except (TypeError, ValueError):
        raise ValidationError("expected numbers", path) from None
    if not np.all(np.isfinite(arr)):
        raise ValidationError("non-finite number", path)
    if nonneg and np.any(arr < 0):
        raise ValidationError("negative entry", path)
    return arr


def _check_probs(probs: np.ndarray, path: str) -> np.ndarray:
    total = probs.sum()
    if abs(total - 1.0) > LOAD_PROB_TOL:
        raise ValidationError(f"probabilities sum to {total:.12g}, not 1", path)
    return probs / total


def _dist_from_obj(obj, path: str) -> DiscreteDist:
    if not isinstance(obj, dict):
        raise ValidationError("expected an object with support and probs", path)
    for key in ("support", "probs"):
        if key not in obj:
            raise ValidationError("missing field", f"{path}.{key}")
    support = _number_list(obj["support"], f"{path}.support")
    probs = _check_probs(_number_list(obj["probs"], f"{path}.probs"), f"{path}.probs")
    if support.size != probs.size:
        raise ValidationError("length differs from support", f"{path}.probs")
    return DiscreteDist.from_atoms(support, probs)


def _instance_from_obj(obj) -> MarketInstance:
    if not isinstance(obj, dict):
        raise ValidationError("instance must be a JSON object", "$")
    label = obj.get("label", "")
    if not isinstance(label, str):
        raise ValidationError("expected a string", "label")
    for key in ("items", "buyers"):
        val = obj.get(key)
        if not isinstance(val, int) or isinstance(val, bool) or val < 1:
            raise ValidationError("expected a positive integer", key)
    n, m = obj["items"], obj["buyers"]
    has_grid, has_joint = "grid" in obj, "joint" in obj
    if has_grid == has_joint:
        raise ValidationError("exactly one of grid/joint must be present", "grid")
    if has_grid:
        grid = obj["grid"]
        if not isinstance(grid, list) or len(grid) != n:
            raise ValidationError(f"expected {n} rows (one per item)", "grid")
        rows = []
        for i, row in enumerate(grid):
            if not isinstance(row, list) or len(row) != m:
                raise ValidationError(f"expected {m} entries (one per buyer)", f"grid[{i}]")
            rows.append(tuple(_dist_from_obj(d, f"grid[{i}][{j}]") for j, d in enumerate(row)))
        return MarketInstance(n, m, grid=tuple(rows), label=label)
    if m != 1:
        raise ValidationError("joint instances must have buyers = 1", "buyers")
    joint = obj["joint"]
    if not isinstance(joint, dict) or "support" not in joint or "probs" not in joint:
        raise ValidationError("expected an object with support and probs", "joint")
    rows = joint["support"]
    if not isinstance(rows, list) or not rows:
        raise ValidationError("expected a nonempty list of value vectors", "joint.support")
    vectors = []
    for k, row in enumerate(rows):
        vec = _number_list(row, f"joint.support[{k}]")
        if vec.size != n:
            raise ValidationError(f"expected {n} values", f"joint.support[{k}]")
        vectors.append(vec)
    probs = _check_probs(_number_list(joint["probs"], "joint.probs"), "joint.probs")
    if probs.size != len(vectors):
        raise ValidationError("length differs from support", "joint.probs")
    return MarketInstance.correlated(JointDist(np.array(vectors), probs), label=label)


def load_instance(path) -> MarketInstance:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON: {exc}", "$") from None
    return _instance_from_obj(obj)


def dump_instance(inst: MarketInstance, path) -> None:
    with open(path, "w") as fh:
        json.dump(inst.to_dict(), fh, indent=2)


def ddt_instance() -> MarketInstance:
    """Two items, D1 = U{1,2}, D2 = U{1,3}: the standard 1.05 gap example."""
    u12 = DiscreteDist([1.0, 2.0], [0.5, 0.5])
    u13 = DiscreteDist([1.0, 3.0], [0.5, 0.5])
    return MarketInstance.independent([u12, u13], label="ddt")
