"""Epsilon-box dominance archive."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACCEPTED = "accepted"
REJECTED = "rejected"
REPLACED = "replaced"


@dataclass
class Solution:
    x: np.ndarray
    f: np.ndarray  # minimization sense
    operator: int = -1  # index of the producing operator, -1 for random/restart
    penalized: bool = False
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "x": [float(v) for v in self.x],
            "f": [float(v) for v in self.f],
            "operator": self.operator,
            "penalized": self.penalized,
            "info": self.info,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Solution":
        return cls(np.array(d["x"], dtype=float), np.array(d["f"], dtype=float), int(d["operator"]),
                   bool(d["penalized"]), dict(d.get("info", {})))


@dataclass(frozen=True)
class InsertResult:
    status: str
    progress: bool


def epsilon_box(f, eps) -> tuple[int, ...]:
    """Integer box index floor(f / eps) per objective."""
    return tuple(int(v) for v in np.floor(np.asarray(f, dtype=float) / np.asarray(eps, dtype=float)))


def pareto_compare(a, b) -> int:
    """-1 if a dominates b, 1 if b dominates a, 0 otherwise (including equality)."""
    a_better = b_better = False
    for x, y in zip(a, b):
        if x < y:
            a_better = True
        elif y < x:
            b_better = True
    if a_better == b_better:
        return 0
    return -1 if a_better else 1


class Archive:
    """Entries occupy distinct, mutually non-dominated epsilon boxes."""

    def __init__(self, eps):
        self.eps = np.asarray(eps, dtype=float)
        if np.any(self.eps <= 0):
            raise ValueError("epsilon values must be positive")
        self.entries: list[Solution] = []
        self.boxes: list[tuple[int, ...]] = []
        self.improvements = 0

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def insert(self, cand: Solution) -> InsertResult:
        box = epsilon_box(cand.f, self.eps)
        evict = []
        same = -1
        for k, other in enumerate(self.boxes):
            c = pareto_compare(box, other)
            if c == 1:
                return InsertResult(REJECTED, False)
            if c == -1:
                evict.append(k)
            elif box == other:
                same = k

        if same >= 0:
            inc = self.entries[same]
            c = pareto_compare(cand.f, inc.f)
            if c == 1:
                return InsertResult(REJECTED, False)
            if c == 0:
                corner = np.array(box) * self.eps
                d_new = float(np.sum((cand.f - corner) ** 2))
                d_old = float(np.sum((inc.f - corner) ** 2))
                if not d_new < d_old:
                    return InsertResult(REJECTED, False)
            self.entries[same] = cand
            return InsertResult(REPLACED, False)

        for k in reversed(evict):
            del self.entries[k]
            del self.boxes[k]
        self.entries.append(cand)
        self.boxes.append(box)
        self.improvements += 1
        return InsertResult(ACCEPTED, True)

    def objectives(self) -> np.ndarray:
        if not self.entries:
            return np.zeros((0, len(self.eps)))
        return np.array([s.f for s in self.entries])

    def check_invariants(self) -> None:
        """Raise AssertionError if two entries share a box or one box dominates another."""
        if len(self.boxes) < 2:
            return
        B = np.array(self.boxes)
        if len({tuple(r) for r in B}) != len(B):
            raise AssertionError("two archive entries share an epsilon box")
        le = np.all(B[:, None, :] <= B[None, :, :], axis=2)
        lt = np.any(B[:, None, :] < B[None, :, :], axis=2)
        if np.any(le & lt):
            raise AssertionError("archive contains an epsilon-dominated entry")
        for s, box in zip(self.entries, self.boxes):
            if epsilon_box(s.f, self.eps) != box:
                raise AssertionError("stale box index")


def operator_credits(archive: Archive, n_ops: int) -> np.ndarray:
    """Number of archive members produced by each operator."""
    c = np.zeros(n_ops, dtype=int)
    for s in archive.entries:
        if 0 <= s.operator < n_ops:
            c[s.operator] += 1
    return c
