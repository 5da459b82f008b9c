"""inhomwalk: exact and Gaussian estimates for time-inhomogeneous random walks."""

from __future__ import annotations

from inhomwalk.core_adapter import (
    IncrementLaw,
    PathConstraint,
    StepSchedule,
    centered_constraint,
    event_prob,
    validate_law,
)
from inhomwalk.harness import FamilySpec, GridSpec, MemberSpec, RunContext, VerificationReport, run_all, run_verifier
from inhomwalk.version import __version__

__all__ = [
    "__version__",
    "FamilySpec",
    "GridSpec",
    "IncrementLaw",
    "MemberSpec",
    "PathConstraint",
    "RunContext",
    "StepSchedule",
    "VerificationReport",
    "centered_constraint",
    "event_prob",
    "run_all",
    "run_verifier",
    "validate_law",
]
