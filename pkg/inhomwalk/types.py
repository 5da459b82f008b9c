from __future__ import annotations

from typing import Literal, TypedDict

RowStatus = Literal["ok", "skipped"]
Verdict = Literal["pass", "fail"]
Task = Literal["prob", "sample", "verify"]
OutputFormat = Literal["csv", "json"]


class GridRowDict(TypedDict):
    check: str
    member: str
    inputs: dict[str, float]
    exact: float | None
    ratio: float | None
    status: RowStatus
    reason: str | None
    extra: dict[str, float]


class VerificationReportDict(TypedDict):
    theorem_id: str
    family: str
    verdict: Verdict
    spread: float | None
    spread_cap: float
    skipped: int
    fitted_constants: dict[str, float]
    notes: list[str]
    rows: list[GridRowDict]
    version: str


class ProbRowDict(TypedDict):
    member: str
    n: int
    u: int
    probability: float
    log_probability: float


class SampleRowDict(TypedDict):
    member: str
    n: int
    u: int
    method: str
    value: float
    stderr: float
    samples: int
    seed: int
    accepted_fraction: float


class MergedReportDict(TypedDict):
    verdict: Verdict
    reports: list[VerificationReportDict]
    sha256: dict[str, str]
    bundle_sha256: str
    version: str
