"""Named checks with tolerances, serialized as CSV or JSON."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import List

COLUMNS = ("name", "quantity", "norm", "tolerance", "pass")


@dataclass
class Check:
    name: str
    quantity: str
    norm: float
    tolerance: float
    comparison: str = "le"  # "le": pass when norm <= tolerance, "ge": pass when norm >= tolerance

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.norm):
            return False
        if self.comparison == "ge":
            return self.norm >= self.tolerance
        return self.norm <= self.tolerance


@dataclass
class VerificationReport:
    title: str = ""
    checks: List[Check] = field(default_factory=list)

    def add(self, name: str, quantity: str, norm: float, tolerance: float, comparison: str = "le") -> Check:
        c = Check(name, quantity, float(norm), float(tolerance), comparison)
        self.checks.append(c)
        return c

    def extend(self, other: "VerificationReport") -> None:
        self.checks.extend(other.checks)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> List[Check]:
        return [c for c in self.checks if not c.passed]

    def rows(self):
        return [(c.name, c.quantity, c.norm, c.tolerance, c.passed) for c in self.checks]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for name, quantity, norm, tol, ok in self.rows():
            writer.writerow([name, quantity, repr(norm), repr(tol), "PASS" if ok else "FAIL"])
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {
            "title": self.title,
            "passed": self.passed,
            "checks": [dict(asdict(c), **{"pass": c.passed}) for c in self.checks],
        }
        return json.dumps(payload, indent=2, allow_nan=True)

    def summary(self) -> str:
        lines = [self.title] if self.title else []
        for c in self.checks:
            op = ">=" if c.comparison == "ge" else "<="
            lines.append(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<32s} {c.quantity:<44s} "
                         f"{c.norm:.3e} {op} {c.tolerance:.1e}")
        return "\n".join(lines)
