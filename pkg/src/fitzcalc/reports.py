"""Verdicts of the semi-decidable checks and their serializable report."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Optional


class Verdict(str, enum.Enum):
    HOLDS = "HOLDS"
    HOLDS_AT_RESOLUTION = "HOLDS_AT_RESOLUTION"
    FAILS = "FAILS"
    POSSIBLE_FAIL = "POSSIBLE_FAIL"
    INAPPLICABLE = "INAPPLICABLE"
    ERROR = "ERROR"

    @property
    def passed(self) -> bool:
        return self in (Verdict.HOLDS, Verdict.HOLDS_AT_RESOLUTION)


def _plain(value):
    """Turn numpy scalars/arrays and infinities into YAML-friendly values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if hasattr(value, "tolist"):
        return _plain(value.tolist())
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return str(value)


@dataclass
class CheckReport:
    """Outcome of a check.

    ``witness`` is the point that refutes the checked property (when the
    verdict is ``FAILS`` or ``POSSIBLE_FAIL``), as a flat coordinate tuple.
    """

    check: str
    verdict: Verdict
    witness: Optional[tuple[float, ...]] = None
    details: dict[str, Any] = field(default_factory=dict)
    tolerances: dict[str, float] = field(default_factory=dict)
    subreports: list["CheckReport"] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.verdict.passed

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"check": self.check, "verdict": self.verdict.value}
        if self.witness is not None:
            out["witness"] = [float(v) for v in self.witness]
        if self.details:
            out["details"] = _plain(self.details)
        if self.tolerances:
            out["tolerances"] = _plain(self.tolerances)
        if self.subreports:
            out["subreports"] = [r.to_dict() for r in self.subreports]
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CheckReport":
        witness = data.get("witness")
        return cls(
            check=data["check"],
            verdict=Verdict(data["verdict"]),
            witness=None if witness is None else tuple(float(v) for v in witness),
            details=dict(data.get("details", {})),
            tolerances=dict(data.get("tolerances", {})),
            subreports=[cls.from_dict(r) for r in data.get("subreports", [])],
        )


def combine(check: str, parts: list[CheckReport], **details) -> CheckReport:
    """Conjunction of sub-checks; the weakest verdict wins."""
    order = [Verdict.ERROR, Verdict.FAILS, Verdict.POSSIBLE_FAIL, Verdict.INAPPLICABLE,
             Verdict.HOLDS_AT_RESOLUTION, Verdict.HOLDS]
    verdict = min((p.verdict for p in parts), key=order.index, default=Verdict.HOLDS)
    witness = next((p.witness for p in parts if p.verdict is verdict and p.witness), None)
    return CheckReport(check, verdict, witness=witness, details=dict(details), subreports=parts)
