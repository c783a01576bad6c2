"""Named exact checks shared by all identity suites."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence


@dataclass
class Check:
    name: str
    holds: bool
    detail: str = ""
    witness: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"name": self.name, "holds": self.holds}
        if self.detail:
            out["detail"] = self.detail
        if self.witness:
            out["witness"] = self.witness
        return out


def _same(left, right) -> bool:
    if hasattr(left, "equals"):
        return left.equals(right)
    return left == right


def _is_zero(value) -> bool:
    if hasattr(value, "is_zero"):
        return value.is_zero()
    return value == 0


def _dump(value):
    return value.to_json() if hasattr(value, "to_json") else str(value)


def compare(name: str, cases: Sequence, lhs: Callable, rhs: Callable) -> Check:
    """lhs(c) = rhs(c) for every case; the first failure becomes the witness."""
    if not cases:
        return Check(name, False, "no test cases")
    nonzero = 0
    for k, case in enumerate(cases):
        left, right = lhs(case), rhs(case)
        if not _same(left, right):
            return Check(name, False, f"differs on case {k}", {"lhs": _dump(left), "rhs": _dump(right)})
        if not _is_zero(left):
            nonzero += 1
    return Check(name, True, f"{len(cases)} cases, {nonzero} nonzero")


def flag(name: str, issues: Sequence[str]) -> Check:
    return Check(name, not issues, "; ".join(issues))
