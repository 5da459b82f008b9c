from __future__ import annotations

from inhomwalk_core import (
    Band,
    Checkpoint,
    ClassParams,
    IncrementLaw,
    MembershipVerdict,
    PathConstraint,
    PositionDistribution,
    StepSchedule,
    TiltSchedule,
    block_kernel,
    center,
    centered_constraint,
    check_class_membership,
    check_periodicity,
    conditional_step_means,
    endpoint_distribution,
    event_log_prob,
    event_prob,
    forward_backward,
    growing_jump_law,
    lattice_endpoint,
    log_mgf,
    moment,
    solve_tilt_for_mean,
    tilt,
    truncate_couple,
    validate_law,
)
from inhomwalk_core.engine import EDGE_TOL
from inhomwalk_core.errors import (
    DegenerateScheduleError,
    InfeasibleConstraintError,
    InvalidLawError,
    TargetOutOfRangeError,
    TiltNonConvergenceError,
    ZeroProbabilityEventError,
)
from inhomwalk_core.laws import TiltProfileKind
from inhomwalk_core.version import __version__ as CORE_VERSION

CORE_BACKEND = "inhomwalk_core"

__all__ = [
    "Band",
    "Checkpoint",
    "ClassParams",
    "CORE_BACKEND",
    "CORE_VERSION",
    "DegenerateScheduleError",
    "EDGE_TOL",
    "IncrementLaw",
    "InfeasibleConstraintError",
    "InvalidLawError",
    "MembershipVerdict",
    "PathConstraint",
    "PositionDistribution",
    "StepSchedule",
    "TargetOutOfRangeError",
    "TiltNonConvergenceError",
    "TiltProfileKind",
    "TiltSchedule",
    "ZeroProbabilityEventError",
    "block_kernel",
    "center",
    "centered_constraint",
    "check_class_membership",
    "check_periodicity",
    "conditional_step_means",
    "endpoint_distribution",
    "event_log_prob",
    "event_prob",
    "forward_backward",
    "growing_jump_law",
    "lattice_endpoint",
    "log_mgf",
    "moment",
    "solve_tilt_for_mean",
    "tilt",
    "truncate_couple",
    "validate_law",
]
