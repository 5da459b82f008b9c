from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

from inhomwalk.errors import UnknownTheoremError
from inhomwalk.harness import verifiers
from inhomwalk.harness.context import RunContext
from inhomwalk.harness.family import FamilySpec
from inhomwalk.harness.report import VerificationReport

logger = logging.getLogger(__name__)

Verifier = Callable[[FamilySpec, RunContext], VerificationReport]


@dataclass(frozen=True)
class VerifierEntry:
    theorem_id: str
    func: Verifier
    input_columns: tuple[str, ...]
    description: str


_ENTRIES = (
    VerifierEntry("ballot", verifiers.verify_ballot, ("n", "u"), "positivity from u, scaled by sqrt(n)/(u+1)"),
    VerifierEntry("smallball_free", verifiers.verify_smallball_free, ("n", "lambda"), "confinement rates -lambda^2 ln p / n"),
    VerifierEntry("llt", verifiers.verify_llt, ("n", "alpha", "y"), "local limit ratio envelope"),
    VerifierEntry("berry_esseen", verifiers.verify_berry_esseen, ("n",), "Kolmogorov distance over the moment bound"),
    VerifierEntry("bridge_positivity", verifiers.verify_bridge_positivity, ("n", "u", "v"), "positive bridges"),
    VerifierEntry("smallball_bridge", verifiers.verify_smallball_bridge, ("n", "x", "s", "lambda"), "bridge tubes"),
    VerifierEntry("excursion", verifiers.verify_excursion, ("n", "lambda", "u", "v"), "strip bridges, lambda <= sqrt(n)"),
    VerifierEntry("ceiling", verifiers.verify_ceiling, ("n", "lambda", "u", "v"), "strip bridges, lambda >= sqrt(n)"),
    VerifierEntry("tails", verifiers.verify_tails, ("n", "k", "t", "u", "v"), "positive bridges high at mid times"),
    VerifierEntry("coarse_grain", verifiers.verify_coarse_grain, ("n", "x", "K"), "bridge deviation from the segment"),
    VerifierEntry("gaussian_swap", verifiers.verify_gaussian_swap, ("n", "checkpoints"), "lattice vs Gaussian checkpoints"),
    VerifierEntry(
        "moment_lemmas",
        verifiers.verify_moment_lemmas,
        ("n", "u", "k", "t", "lambda", "law", "i", "a"),
        "step moments, tails, Doob, conditioning",
    ),
    VerifierEntry("truncation", verifiers.verify_truncation, ("law", "K", "alpha"), "bounded coupling of centered laws"),
    VerifierEntry("theta", verifiers.verify_theta, ("z", "epsilon", "n", "x", "s"), "Jacobi theta and Gaussian bridges"),
)

REGISTRY: dict[str, VerifierEntry] = {entry.theorem_id: entry for entry in _ENTRIES}


def theorem_ids() -> list[str]:
    return [entry.theorem_id for entry in _ENTRIES]


def get_verifier(theorem_id: str) -> VerifierEntry:
    try:
        return REGISTRY[theorem_id]
    except KeyError as exc:
        raise UnknownTheoremError(theorem_id=theorem_id, known=theorem_ids()) from exc


def run_verifier(theorem_id: str, family: FamilySpec, ctx: RunContext | None = None) -> VerificationReport:
    entry = get_verifier(theorem_id)
    ctx = ctx if ctx is not None else RunContext()
    ctx.emit("start", {"theorem": theorem_id, "family": family.name})
    return entry.func(family, ctx)


def run_all(family: FamilySpec, ctx: RunContext | None = None) -> list[VerificationReport]:
    """Every registered verifier exactly once, in registry order."""
    return [run_verifier(theorem_id, family, ctx) for theorem_id in theorem_ids()]
