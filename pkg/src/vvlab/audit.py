"""Measured-inequality record shared by every lemma audit."""
from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class InequalityAudit:
    """One measured instance of ``lhs <= C * sum(rhs_terms)``.

    ``implied_constant`` is the smallest ``C`` consistent with the measurement;
    ``passed`` compares it against ``ceiling`` (and ``floor`` for two-sided
    audits such as Bernstein's inequality).
    """

    name: str
    lhs: float
    rhs_terms: dict[str, float]
    implied_constant: float
    ceiling: float
    passed: bool
    time: float | None = None
    floor: float = field(default=0.0, repr=False)

    @classmethod
    def measure(cls, name, lhs, rhs_terms, ceiling, time=None, floor=0.0):
        lhs = float(lhs)
        rhs_terms = {k: float(v) for k, v in rhs_terms.items()}
        total = sum(rhs_terms.values())
        if total > 0:
            implied = lhs / total
        else:
            implied = 0.0 if lhs == 0 else math.inf
        passed = floor <= implied <= ceiling
        return cls(name, lhs, rhs_terms, implied, float(ceiling), bool(passed), time, float(floor))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "time": self.time,
            "lhs": self.lhs,
            "rhs_terms": dict(self.rhs_terms),
            "implied_constant": self.implied_constant,
            "ceiling": self.ceiling,
            "pass": self.passed,
        }


AUDIT_JSON_SCHEMA = {
    "type": "object",
    "required": ["name", "time", "lhs", "rhs_terms", "implied_constant", "ceiling", "pass"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "time": {"type": ["number", "null"]},
        "lhs": {"type": "number"},
        "rhs_terms": {"type": "object", "additionalProperties": {"type": "number"}},
        # null stands in for an unbounded constant (lhs > 0 against a zero right side)
        "implied_constant": {"type": ["number", "null"]},
        "ceiling": {"type": "number"},
        "pass": {"type": "boolean"},
    },
}
