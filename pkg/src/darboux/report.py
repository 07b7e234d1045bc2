"""Verification checks and the ``report.json`` document written by every CLI run."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path


@dataclass
class Check:
    name: str
    passed: bool
    value: float | None
    tolerance: float | None

    @classmethod
    def below(cls, name: str, value: float, tolerance: float) -> "Check":
        """Passes when ``value < tolerance``."""
        return cls(name, bool(value < tolerance), float(value), float(tolerance))

    @classmethod
    def above(cls, name: str, value: float, threshold: float) -> "Check":
        """Passes when ``value > threshold``."""
        return cls(name, bool(value > threshold), float(value), float(threshold))


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


@dataclass
class Report:
    command: str
    parameters: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    files: list = field(default_factory=list)
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(c.passed for c in self.checks)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def to_dict(self) -> dict:
        doc = {
            "command": self.command,
            "parameters": _clean(self.parameters),
            "checks": [_clean(asdict(c)) for c in self.checks],
            "files": sorted(self.files),
        }
        if self.error is not None:
            doc["error"] = self.error
        return doc

    def write(self, out_dir) -> Path:
        path = Path(out_dir) / "report.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n")
        return path
