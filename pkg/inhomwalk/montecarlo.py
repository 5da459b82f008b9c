"""Path sampling and Monte Carlo estimators for lattice schedules.

Every estimator owns its generator, derived from (seed, task_index) through
``numpy.random.SeedSequence``, so concurrent sweeps are reproducible.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from inhomwalk.core_adapter import (
    InfeasibleConstraintError,
    PathConstraint,
    StepSchedule,
    centered_constraint,
    log_mgf,
    solve_tilt_for_mean,
)
from inhomwalk.errors import DegenerateAcceptanceError

logger = logging.getLogger(__name__)

MIN_EVENT_SAMPLES = 1_000
ACCEPTANCE_FLOOR = 1e-5
CHUNK = 1 << 14


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float
    samples: int
    seed: int
    accepted_fraction: float = 1.0


def derive_rng(seed: int, task_index: int = 0) -> np.random.Generator:
    """PCG64 stream for task ``task_index`` of a run seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(task_index,))))


def sample_paths(schedule: StepSchedule, u: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` paths S_0 = u, ..., S_n by inverse-CDF sampling, shape (count, n + 1)."""
    n = schedule.n
    uniforms = rng.random((count, n))
    steps = np.empty((count, n), dtype=np.int64 if schedule.is_lattice else float)
    columns: dict[int, list[int]] = {}
    for i, law in enumerate(schedule.laws):
        columns.setdefault(id(law), []).append(i)
    for law, _ in schedule.grouped():
        cols = columns[id(law)]
        cdf = np.cumsum(law.probs)
        idx = np.minimum(np.searchsorted(cdf, uniforms[:, cols], side="right"), law.size - 1)
        atoms = law.int_atoms if schedule.is_lattice else law.atoms
        steps[:, cols] = atoms[idx]
    paths = np.empty((count, n + 1), dtype=steps.dtype)
    paths[:, 0] = u
    paths[:, 1:] = u + np.cumsum(steps, axis=1)
    return paths


def sample_path(schedule: StepSchedule, u: float, seed: int) -> np.ndarray:
    return sample_paths(schedule, u, 1, derive_rng(seed))[0]


def _chunks(samples: int) -> Iterator[int]:
    done = 0
    while done < samples:
        count = min(CHUNK, samples - done)
        yield count
        done += count


def _mean_and_stderr(total: float, total_sq: float, samples: int) -> tuple[float, float]:
    mean = total / samples
    if samples < 2:
        return mean, 0.0
    var = max(total_sq - samples * mean * mean, 0.0) / (samples - 1)
    return mean, math.sqrt(var / samples)


def _reachable(schedule: StepSchedule, u: int, y: int) -> bool:
    lo = u + sum(law.min_atom for law in schedule.laws)
    hi = u + sum(law.max_atom for law in schedule.laws)
    return lo <= y <= hi


def estimate_event(
    schedule: StepSchedule,
    u: int,
    constraint: PathConstraint | None = None,
    samples: int = 10_000,
    seed: int = 0,
) -> McEstimate:
    """Indicator-mean estimate of P_u(event); pinned endpoints are handled by rejection."""
    if samples < MIN_EVENT_SAMPLES:
        raise ValueError(f"estimate_event needs >= {MIN_EVENT_SAMPLES} samples, got {samples}")
    constraint = constraint if constraint is not None else PathConstraint()
    try:
        constraint.check_feasible(schedule.n)
    except InfeasibleConstraintError:
        return McEstimate(value=0.0, stderr=0.0, samples=samples, seed=seed, accepted_fraction=0.0)
    endpoint = constraint.endpoint
    if endpoint is not None and not _reachable(schedule, u, endpoint):
        return McEstimate(value=0.0, stderr=0.0, samples=samples, seed=seed, accepted_fraction=0.0)

    rng = derive_rng(seed)
    hits = 0
    pinned = 0
    for count in _chunks(samples):
        paths = sample_paths(schedule, u, count, rng)
        hits += int(np.count_nonzero(constraint.path_mask(paths)))
        if endpoint is not None:
            pinned += int(np.count_nonzero(paths[:, -1] == endpoint))
    accepted = pinned / samples if endpoint is not None else 1.0
    logger.debug("[MonteCarlo][estimate_event] samples=%s accepted=%.3e", samples, accepted)
    if endpoint is not None and accepted < ACCEPTANCE_FLOOR:
        raise DegenerateAcceptanceError(accepted_fraction=accepted, threshold=ACCEPTANCE_FLOOR)
    value, stderr = _mean_and_stderr(float(hits), float(hits), samples)
    return McEstimate(value=value, stderr=stderr, samples=samples, seed=seed, accepted_fraction=accepted)


def importance_tilted_estimate(
    schedule: StepSchedule,
    u: int,
    constraint: PathConstraint,
    samples: int = 10_000,
    seed: int = 0,
) -> McEstimate:
    """Unbiased estimate of P_u(event, S_n = y) sampling from the tilt that centres S_n on y.

    A path of the tilted walk carries weight exp(H_n(lam) - lam (S_n - u)),
    which is constant on {S_n = y}.
    """
    if constraint.endpoint is None:
        raise ValueError("importance_tilted_estimate needs a pinned endpoint")
    if samples < MIN_EVENT_SAMPLES:
        raise ValueError(f"importance_tilted_estimate needs >= {MIN_EVENT_SAMPLES} samples, got {samples}")
    y = constraint.endpoint
    lam = solve_tilt_for_mean(schedule, float(y - u))
    tilted = schedule.tilted(lam)
    log_h = math.fsum(count * log_mgf(law, lam) for law, count in schedule.grouped())

    rng = derive_rng(seed)
    total = 0.0
    total_sq = 0.0
    accepted = 0
    for count in _chunks(samples):
        paths = sample_paths(tilted, u, count, rng)
        mask = constraint.path_mask(paths)
        weights = np.where(mask, np.exp(log_h - lam * (paths[:, -1] - u)), 0.0)
        total += float(weights.sum())
        total_sq += float(np.dot(weights, weights))
        accepted += int(np.count_nonzero(mask))
    value, stderr = _mean_and_stderr(total, total_sq, samples)
    logger.debug("[MonteCarlo][importance] lam=%.6g accepted=%s/%s", lam, accepted, samples)
    return McEstimate(
        value=value,
        stderr=stderr,
        samples=samples,
        seed=seed,
        accepted_fraction=accepted / samples,
    )


def conditional_running_max_sq(
    schedule: StepSchedule,
    u: int,
    samples: int = 10_000,
    seed: int = 0,
) -> McEstimate:
    """Rejection estimate of E_u(max_i S_bar_i^2 | S_bar_i >= 0 for i <= n)."""
    floor = centered_constraint(schedule, lower=0.0)
    means = np.asarray(schedule.partial_means)
    rng = derive_rng(seed)
    total = 0.0
    total_sq = 0.0
    accepted = 0
    for count in _chunks(samples):
        paths = sample_paths(schedule, u, count, rng)
        mask = floor.path_mask(paths)
        if not mask.any():
            continue
        centred = paths[mask] - means
        stat = np.max(centred**2, axis=1)
        total += float(stat.sum())
        total_sq += float(np.dot(stat, stat))
        accepted += int(stat.size)
    fraction = accepted / samples
    if accepted < 2 or fraction < ACCEPTANCE_FLOOR:
        raise DegenerateAcceptanceError(accepted_fraction=fraction, threshold=ACCEPTANCE_FLOOR)
    value, stderr = _mean_and_stderr(total, total_sq, accepted)
    return McEstimate(value=value, stderr=stderr, samples=samples, seed=seed, accepted_fraction=fraction)
