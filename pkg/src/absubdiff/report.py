"""Verdict records produced by every verification routine."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass(frozen=True)
class Hypothesis:
    """One machine-checked hypothesis of a check, with the measured quantity."""

    name: str
    satisfied: bool
    measured: float

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "satisfied": bool(self.satisfied), "measured": _jsonable(self.measured)}


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one property, lemma or theorem verification.

    ``slack`` is signed so that ``slack >= -tol`` means the claimed inequality
    holds up to the tolerance. A report whose hypotheses are not all satisfied
    is marked not applicable and never passes.
    """

    theorem_id: str
    bound: float
    measured: float
    slack: float
    passed: bool
    hypotheses: tuple[Hypothesis, ...] = ()
    tol: float = 0.0
    details: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.passed and not self.applicable:
            raise ValueError(f"{self.theorem_id}: a report cannot pass with unsatisfied hypotheses")

    @property
    def applicable(self) -> bool:
        return all(h.satisfied for h in self.hypotheses)

    def to_dict(self) -> dict[str, Any]:
        return {
            "theorem_id": self.theorem_id,
            "hypotheses": [h.to_dict() for h in self.hypotheses],
            "bound": _jsonable(self.bound),
            "measured": _jsonable(self.measured),
            "slack": _jsonable(self.slack),
            "tol": _jsonable(self.tol),
            "applicable": self.applicable,
            "passed": bool(self.passed),
            "details": {k: _jsonable(v) for k, v in self.details.items()},
        }


def not_applicable(theorem_id: str, hypotheses, **details) -> CheckReport:
    nan = float("nan")
    return CheckReport(theorem_id, nan, nan, nan, False, tuple(hypotheses), details=dict(details))


def _jsonable(value):
    if isinstance(value, (bool, str)) or value is None:
        return value
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    try:
        f = float(value)
    except (TypeError, ValueError):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    return f if math.isfinite(f) else None
