"""Pass/fail records shared by experiments, the acceptance suite and the CLI."""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field


@dataclass
class Check:
    quantity: str
    value: float | str
    target: float | str
    tolerance: str
    passed: bool


@dataclass
class CriterionResult:
    id: str
    title: str
    checks: list[Check] = field(default_factory=list)
    runtime: float = 0.0
    runtime_limit: float | None = None
    note: str = ""

    def add(self, quantity, value, target, tolerance, passed) -> Check:
        c = Check(quantity, value, target, tolerance, bool(passed))
        self.checks.append(c)
        return c

    @property
    def science_passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    @property
    def runtime_ok(self) -> bool:
        return self.runtime_limit is None or self.runtime <= self.runtime_limit

    @property
    def passed(self) -> bool:
        return self.science_passed and self.runtime_ok

    def summary_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        bad = [c.quantity for c in self.checks if not c.passed]
        extra = f" failed: {', '.join(bad)}" if bad else ""
        if not self.runtime_ok:
            extra += f" runtime {self.runtime:.1f}s > {self.runtime_limit:g}s"
        return f"[{status}] {self.id} {self.title} ({self.runtime:.2f}s){extra}"

    def csv_rows(self):
        return [(self.id, self.title, c.quantity, c.value, c.target, c.tolerance, c.passed)
                for c in self.checks]

    def to_dict(self) -> dict:
        return {"id": self.id, "title": self.title, "passed": self.passed,
                "science_passed": self.science_passed, "runtime_s": self.runtime,
                "runtime_limit_s": self.runtime_limit, "runtime_ok": self.runtime_ok,
                "note": self.note,
                "checks": [vars(c) for c in self.checks]}


CRITERION_COLUMNS = ("criterion", "title", "quantity", "value", "target", "tolerance", "passed")


@contextmanager
def timed(result: CriterionResult):
    t0 = time.perf_counter()
    try:
        yield result
    finally:
        result.runtime = time.perf_counter() - t0


def within(value: float, target: float, rel: float) -> bool:
    return abs(value - target) <= rel * abs(target)
