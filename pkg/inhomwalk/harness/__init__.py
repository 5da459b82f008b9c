"""Theorem verification harness: families, envelope fits, verifiers."""

from inhomwalk.harness.context import RunContext
from inhomwalk.harness.family import FamilySpec, GridSpec, MemberSpec, TiltProfile, random_centered_law
from inhomwalk.harness.registry import REGISTRY, get_verifier, run_all, run_verifier, theorem_ids
from inhomwalk.harness.report import GridRow, VerificationReport

__all__ = [
    "FamilySpec",
    "GridRow",
    "GridSpec",
    "MemberSpec",
    "REGISTRY",
    "RunContext",
    "TiltProfile",
    "VerificationReport",
    "get_verifier",
    "random_centered_law",
    "run_all",
    "run_verifier",
    "theorem_ids",
]
