from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable

from inhomwalk.types import GridRowDict, RowStatus, Verdict, VerificationReportDict
from inhomwalk.version import __version__

logger = logging.getLogger(__name__)

SKIP_FAIL_FRACTION = 0.5


@dataclass(frozen=True)
class GridRow:
    """One evaluated grid point of a verifier.

    ``ratio`` is the normalized quantity the envelope is fitted to; skipped
    rows keep their inputs and carry a reason instead.
    """

    check: str
    member: str
    inputs: dict[str, float]
    exact: float | None = None
    ratio: float | None = None
    status: RowStatus = "ok"
    reason: str | None = None
    extra: dict[str, float] = field(default_factory=dict)

    @classmethod
    def skipped(cls, check: str, member: str, inputs: dict[str, float], reason: str) -> "GridRow":
        return cls(check=check, member=member, inputs=inputs, status="skipped", reason=reason)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def sort_key(self) -> tuple:
        return (self.check, self.member, tuple(sorted(self.inputs.items())))

    def to_dict(self) -> GridRowDict:
        return {
            "check": self.check,
            "member": self.member,
            "inputs": dict(sorted(self.inputs.items())),
            "exact": self.exact,
            "ratio": self.ratio,
            "status": self.status,
            "reason": self.reason,
            "extra": dict(sorted(self.extra.items())),
        }


@dataclass(frozen=True)
class VerificationReport:
    theorem_id: str
    family: str
    verdict: Verdict
    rows: tuple[GridRow, ...]
    fitted_constants: dict[str, float]
    spread: float | None
    spread_cap: float
    notes: tuple[str, ...] = ()

    @property
    def skipped(self) -> int:
        return sum(1 for row in self.rows if not row.ok)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def rows_for(self, check: str) -> tuple[GridRow, ...]:
        return tuple(row for row in self.rows if row.check == check)

    def to_dict(self) -> VerificationReportDict:
        return {
            "theorem_id": self.theorem_id,
            "family": self.family,
            "verdict": self.verdict,
            "spread": self.spread,
            "spread_cap": self.spread_cap,
            "skipped": self.skipped,
            "fitted_constants": dict(sorted(self.fitted_constants.items())),
            "notes": list(self.notes),
            "rows": [row.to_dict() for row in self.rows],
            "version": __version__,
        }


def within_cap(spread: float | None, cap: float) -> bool:
    return spread is not None and math.isfinite(spread) and spread <= cap


def build_report(
    theorem_id: str,
    family: str,
    rows: Iterable[GridRow],
    *,
    fitted: dict[str, float],
    spread: float | None,
    spread_cap: float,
    passed: bool,
    notes: Iterable[str] = (),
    blockers: Iterable[str] = (),
) -> VerificationReport:
    """Sort rows, apply the blocker, empty-grid and skip-fraction rules, settle the verdict.

    Any blocker (for instance a member law outside the declared class) fails
    the report whatever the rows say.
    """
    ordered = tuple(sorted(rows, key=GridRow.sort_key))
    notes = list(notes)
    blockers = list(blockers)
    skipped = sum(1 for row in ordered if not row.ok)
    verdict: Verdict
    if blockers:
        logger.warning("[Harness][%s] family=%s blocked: %s", theorem_id, family, "; ".join(blockers))
        notes.extend(blockers)
        verdict = "fail"
    elif not ordered:
        logger.warning("[Harness][%s] empty grid for family=%s; passing vacuously", theorem_id, family)
        notes.append("empty grid: vacuous pass")
        verdict = "pass"
    elif skipped > SKIP_FAIL_FRACTION * len(ordered):
        notes.append(f"{skipped} of {len(ordered)} grid points skipped")
        verdict = "fail"
    else:
        verdict = "pass" if passed else "fail"
    logger.info(
        "[Harness][%s] family=%s rows=%s skipped=%s verdict=%s",
        theorem_id,
        family,
        len(ordered),
        skipped,
        verdict,
    )
    return VerificationReport(
        theorem_id=theorem_id,
        family=family,
        verdict=verdict,
        rows=ordered,
        fitted_constants=fitted,
        spread=spread,
        spread_cap=spread_cap,
        notes=tuple(notes),
    )
