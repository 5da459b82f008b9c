"""inhomwalk-core: exact lattice layer for time-inhomogeneous random walks."""

from inhomwalk_core.engine import (
    Band,
    Checkpoint,
    PathConstraint,
    PositionDistribution,
    block_kernel,
    brute_force_prob,
    centered_constraint,
    conditional_step_means,
    endpoint_distribution,
    event_log_prob,
    event_prob,
    forward_backward,
    lattice_endpoint,
    propagate,
    reflection_oracle,
)
from inhomwalk_core.laws import (
    ClassParams,
    IncrementLaw,
    MembershipVerdict,
    Periodicity,
    TiltSchedule,
    TruncationResult,
    center,
    check_class_membership,
    check_periodicity,
    growing_jump_law,
    log_mgf,
    moment,
    solve_tilt_for_mean,
    tilt,
    truncate_couple,
    validate_law,
)
from inhomwalk_core.schedule import StepSchedule
from inhomwalk_core.version import __version__

__all__ = [
    "__version__",
    "Band",
    "Checkpoint",
    "ClassParams",
    "IncrementLaw",
    "MembershipVerdict",
    "PathConstraint",
    "Periodicity",
    "PositionDistribution",
    "StepSchedule",
    "TiltSchedule",
    "TruncationResult",
    "block_kernel",
    "brute_force_prob",
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
    "propagate",
    "reflection_oracle",
    "solve_tilt_for_mean",
    "tilt",
    "truncate_couple",
    "validate_law",
]
