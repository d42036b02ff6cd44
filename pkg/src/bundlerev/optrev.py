"""Optimal single-buyer revenue by linear programming over menus."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix

from .distcore import DiscreteDist, JointDist, MarketInstance
from .errors import SizeError, SolverError, ValidationError
from .reports import Report
from .simplerev import srev

TYPE_CAP = 512
IC_TOL = 1e-7
CHOICE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class MenuMechanism:
    """Truthful menu: type k receives ``alloc[k]`` and pays ``pay[k]``."""

    types: np.ndarray  # (K, n)
    probs: np.ndarray  # (K,)
    alloc: np.ndarray  # (K, n)
    pay: np.ndarray  # (K,)
    objective: float
    lp_objective: float

    def utilities(self) -> np.ndarray:
        """utility[k, l] of type k reporting type l."""
        return self.types @ self.alloc.T - self.pay[None, :]

    def ic_violation(self) -> float:
        u = self.utilities()
        return float(max((u.max(axis=1) - np.diag(u)).max(), 0.0))

    def ir_violation(self) -> float:
        return float(max(-np.diag(self.utilities()).min(), 0.0))

    def certify(self, tol: float = IC_TOL) -> None:
        ic, ir = self.ic_violation(), self.ir_violation()
        if ic > tol or ir > tol:
            raise SolverError(f"menu fails re-certification (IC {ic:.3g}, IR {ir:.3g})")
        if abs(float(np.dot(self.probs, self.pay)) - self.objective) > 1e-9 * max(1.0, abs(self.objective)):
            raise SolverError("objective does not match expected payment")

    def to_dict(self) -> dict:
        return {
            "types": self.types.tolist(),
            "alloc": self.alloc.tolist(),
            "pay": self.pay.tolist(),
            "revenue": self.objective,
        }

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def as_joint(d, cap: int = TYPE_CAP) -> JointDist:
    """Single-buyer joint distribution from a JointDist, instance, or list of item distributions."""
    if isinstance(d, JointDist):
        return d
    if isinstance(d, MarketInstance):
        if d.n_buyers != 1:
            raise ValidationError("optimal revenue is computed for a single buyer only", "buyers")
        return d.to_joint(cap=cap)
    if isinstance(d, DiscreteDist):
        return JointDist.product([d], cap=cap)
    return JointDist.product(list(d), cap=cap)


def _close_menu(types: np.ndarray, alloc: np.ndarray, pay: np.ndarray):
    """Let each type pick its favourite entry (ties to higher payment) from the menu plus opting out."""
    menu_a = np.vstack([alloc, np.zeros((1, alloc.shape[1]))])
    menu_p = np.concatenate([pay, [0.0]])
    u = types @ menu_a.T - menu_p[None, :]
    best = u.max(axis=1, keepdims=True)
    scale = np.maximum(1.0, np.abs(best))
    near = u >= best - CHOICE_TOL * scale
    pick = np.argmax(np.where(near, menu_p[None, :], -np.inf), axis=1)
    return menu_a[pick].copy(), menu_p[pick].copy()


def rev_lp(d, cap: int = TYPE_CAP) -> MenuMechanism:
    """Optimal truthful mechanism for one additive buyer (allocations in [0,1], free-sign payments)."""
    joint = as_joint(d, cap=max(cap, 1))
    types, f = joint.support, joint.probs
    K, n = types.shape
    if K > cap:
        raise SizeError(f"{K} types exceeds the LP cap {cap}", K, cap)

    # variables: alloc (K*n, row-major) then pay (K)
    nv = K * n + K
    pay_col = K * n
    rows, cols, vals = [], [], []
    r = 0
    # IC: t_k . (a_l - a_k) + p_k - p_l <= 0 for k != l
    kk, ll = np.nonzero(~np.eye(K, dtype=bool))
    m = kk.size
    rid = np.arange(m)
    for i in range(n):
        rows += [rid, rid]
        cols += [ll * n + i, kk * n + i]
        vals += [types[kk, i], -types[kk, i]]
    rows += [rid, rid]
    cols += [pay_col + kk, pay_col + ll]
    vals += [np.ones(m), -np.ones(m)]
    r = m
    # IR: p_k - t_k . a_k <= 0
    rid = r + np.arange(K)
    for i in range(n):
        rows.append(rid)
        cols.append(np.arange(K) * n + i)
        vals.append(-types[:, i])
    rows.append(rid)
    cols.append(pay_col + np.arange(K))
    vals.append(np.ones(K))
    r += K
    A = coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(r, nv)).tocsr()
    c = np.concatenate([np.zeros(K * n), -f])
    bounds = [(0.0, 1.0)] * (K * n) + [(None, None)] * K
    res = linprog(c, A_ub=A, b_ub=np.zeros(r), bounds=bounds, method="highs")
    if res.status != 0 or res.x is None:
        raise SolverError(f"LP solver failed: {res.message}")
    alloc = np.clip(res.x[: K * n].reshape(K, n), 0.0, 1.0)
    pay = res.x[K * n :]
    alloc, pay = _close_menu(types, alloc, pay)
    mech = MenuMechanism(
        types=types.copy(),
        probs=f.copy(),
        alloc=alloc,
        pay=pay,
        objective=float(np.dot(f, pay)),
        lp_objective=float(-res.fun),
    )
    mech.certify()
    return mech


def rev(d, cap: int = TYPE_CAP) -> float:
    return rev_lp(d, cap=cap).objective


def check_marginal_mechanism(dA, dB, cap: int = TYPE_CAP) -> Report:
    """Rev(A x B) <= Welfare(A) + Rev(B) for independent item groups A and B."""
    ja, jb = as_joint(dA, cap), as_joint(dB, cap)
    size = ja.size * jb.size
    if size > cap:
        raise SizeError(f"combined support {size} exceeds the LP cap {cap}", size, cap)
    ia = np.repeat(np.arange(ja.size), jb.size)
    ib = np.tile(np.arange(jb.size), ja.size)
    both = JointDist.normalized(
        np.hstack([ja.support[ia], jb.support[ib]]),
        ja.probs[ia] * jb.probs[ib],
    )
    lhs = rev(both, cap)
    wa = ja.welfare()
    rb = rev(jb, cap)
    rhs = wa + rb
    return Report(
        "marginal-mechanism",
        lhs <= rhs + 1e-6,
        {"lhs": lhs, "rhs": rhs, "welfare_a": wa, "rev_b": rb},
    )


def check_rev_vs_srev(inst: MarketInstance, cap: int = TYPE_CAP) -> Report:
    """Rev against the n * SRev and (ln n + 3) * SRev upper bounds."""
    joint = as_joint(inst, cap)
    r = rev(joint, cap)
    s = srev(inst).value
    n = inst.n_items
    linear = r <= n * s + 1e-6
    log = r <= (math.log(n) + 3) * s + 1e-6
    return Report(
        "rev-vs-srev",
        linear and log,
        {"rev": r, "srev": s, "n": n, "within_n_srev": linear, "within_log_srev": log},
    )


def check_subdomain_stitching(joint, parts: Sequence, cap: int = TYPE_CAP) -> Report:
    """Sum_i s_i Rev(D | S_i) >= Rev(D) for a partition of the support.

    ``parts`` is either one integer label per support row of ``joint`` or a
    list of boolean masks over those rows.  Empty parts count with weight 0.
    """
    joint = as_joint(joint, cap)
    labels = np.asarray(parts)
    if labels.ndim == 1 and labels.size == joint.size and labels.dtype != bool:
        masks = [labels == lab for lab in np.unique(labels)]
    else:
        masks = [np.asarray(m, dtype=bool) for m in parts]
        if any(m.size != joint.size for m in masks):
            raise ValidationError("each mask must have one entry per support row", "parts")
        cover = np.sum(masks, axis=0)
        if np.any(cover != 1):
            raise ValidationError("masks must partition the support", "parts")
    full = rev(joint, cap)
    pieces = []
    for m in masks:
        cond, mass = joint.conditional(m)
        pieces.append((mass, rev(cond, cap) if cond is not None else 0.0))
    stitched = sum(s * r for s, r in pieces)
    return Report(
        "subdomain-stitching",
        stitched >= full - 1e-6,
        {"stitched": stitched, "rev": full, "parts": [{"mass": s, "rev": r} for s, r in pieces]},
    )
