"""Structured check reports returned by the numeric lemma checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _plain(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if hasattr(x, "to_dict"):
        return x.to_dict()
    return x


@dataclass
class Report:
    """Outcome of one inequality check: the compared numbers plus a verdict."""

    name: str
    passed: bool
    values: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def __getitem__(self, key):
        return self.values[key]

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "values": _plain(self.values), "notes": list(self.notes)}


def combine(name: str, reports: list[Report]) -> Report:
    """Aggregate report that passes iff every part passes."""
    failed = [r.name for r in reports if not r.passed]
    return Report(
        name,
        not failed,
        {"checked": len(reports), "failed": len(failed)},
        [f"failed: {n}" for n in failed],
    )
