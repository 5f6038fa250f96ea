"""Estimate records shared by the numerical routines and the CLI.

Every Monte Carlo quantity travels as an ``EstimateReport`` carrying the
value, its standard error, and enough metadata (samples, seed, method)
to reproduce the number exactly.  ``to_record`` emits the JSON-friendly
dict used by report documents; floats are serialized with ``repr`` so a
byte-level comparison of two runs is meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

__all__ = ["EstimateReport", "Certificate"]


@dataclass(frozen=True)
class EstimateReport:
    """A numerical estimate with provenance.

    ``value`` and ``std_error`` describe the estimate; ``samples`` and
    ``seed`` the stream it came from; ``method`` names the estimator.
    ``details`` holds estimator-specific extras (schedules, residuals,
    per-step tables) that figures downstream can plot without
    recomputation.
    """

    value: float
    std_error: float
    samples: int
    seed: int
    method: str
    details: dict[str, Any] = field(default_factory=dict)

    def to_record(self) -> dict[str, Any]:
        rec: dict[str, Any] = {
            "kind": "estimate",
            "method": self.method,
            "value": self.value,
            "std_error": self.std_error,
            "samples": self.samples,
            "seed": self.seed,
        }
        if self.details:
            rec["details"] = self.details
        return rec


@dataclass(frozen=True)
class Certificate:
    """Outcome of checking a measured quantity against a cited bound.

    ``verdict`` is "pass" or "fail"; ``bound_ref`` names the bound in
    the citation registry; ``direction`` records whether the bound is a
    floor ("lower") or a ceiling ("upper") for the measured value.
    """

    bound_ref: str
    bound: float
    measured: float
    direction: str
    verdict: str
    tolerance: float
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_record(self) -> dict[str, Any]:
        rec: dict[str, Any] = {
            "kind": "certificate",
            "bound_ref": self.bound_ref,
            "bound": self.bound,
            "measured": self.measured,
            "direction": self.direction,
            "verdict": self.verdict,
            "tolerance": self.tolerance,
        }
        if self.details:
            rec["details"] = self.details
        return rec
