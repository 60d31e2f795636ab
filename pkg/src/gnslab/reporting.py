"""Check results and machine-readable verification reports.

Every verification routine in the package returns ``CheckResult`` values
collected into a ``Report``.  Reports serialize to JSON deterministically
(checks sorted by name, no timestamps) so that identical runs produce
byte-identical files.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PASS = "pass"
FAIL = "fail"
SKIP = "skip"

SCHEMA_VERSION = "gnslab-1"


def jsonable(value):
    """Convert numpy/complex data into plain JSON-safe structures.

    Complex scalars become ``{"re": ..., "im": ...}``; arrays become nested
    lists of those pairs.
    """
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return repr(value)


@dataclass
class CheckResult:
    """A single named check with its worst observed ratio and residual."""

    name: str
    status: str
    worst_ratio: float | None = None
    residual: float | None = None
    witness: dict | None = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status != FAIL

    def to_dict(self) -> dict:
        out = {"name": self.name, "status": self.status}
        if self.worst_ratio is not None:
            out["worst_ratio"] = float(self.worst_ratio)
        if self.residual is not None:
            out["residual"] = float(self.residual)
        if self.witness is not None:
            out["witness"] = jsonable(self.witness)
        if self.details:
            out["details"] = jsonable(self.details)
        return out

    @staticmethod
    def from_dict(data: dict) -> "CheckResult":
        return CheckResult(
            name=data["name"],
            status=data["status"],
            worst_ratio=data.get("worst_ratio"),
            residual=data.get("residual"),
            witness=data.get("witness"),
            details=data.get("details", {}),
        )


def passing(name: str, **kwargs) -> CheckResult:
    return CheckResult(name=name, status=PASS, **kwargs)


def failing(name: str, **kwargs) -> CheckResult:
    return CheckResult(name=name, status=FAIL, **kwargs)


def skipped(name: str, reason: str) -> CheckResult:
    return CheckResult(name=name, status=SKIP, details={"reason": reason})


@dataclass
class Report:
    """A bundle of check results plus the run environment that produced them."""

    environment: dict = field(default_factory=dict)
    checks: list[CheckResult] = field(default_factory=list)

    def add(self, check: CheckResult) -> CheckResult:
        self.checks.append(check)
        return check

    def extend(self, checks) -> None:
        for check in checks:
            self.add(check)

    def find(self, name: str) -> CheckResult | None:
        for check in self.checks:
            if check.name == name:
                return check
        return None

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failures(self) -> list[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def to_dict(self) -> dict:
        return {
            "version": SCHEMA_VERSION,
            "environment": jsonable(self.environment),
            "checks": [c.to_dict() for c in sorted(self.checks, key=lambda c: c.name)],
        }

    @staticmethod
    def from_dict(data: dict) -> "Report":
        return Report(
            environment=data.get("environment", {}),
            checks=[CheckResult.from_dict(c) for c in data.get("checks", [])],
        )
