"""Exact constrained-path probabilities for inhomogeneous lattice walks.

The walk always lives on the uncentered lattice. Events about the centered
walk are expressed through real-valued band edges (``centered_constraint``).
Mass vectors are kept over a contiguous integer window that is the
intersection of the reachability hull and the current band; a log-scale
accumulator takes over when the peak cell drops below ``RESCALE_FLOOR``.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from inhomwalk_core.errors import (
    EmptyDistributionError,
    InfeasibleConstraintError,
    NotLatticeError,
    ParityViolationError,
    TooLargeError,
    ZeroProbabilityEventError,
)
from inhomwalk_core.laws import IncrementLaw
from inhomwalk_core.schedule import StepSchedule

logger = logging.getLogger(__name__)

EDGE_TOL = 1e-9
RESCALE_FLOOR = 1e-300
ENUMERATION_LIMIT = 10**8
_SUFFIX_BLOCK = 1 << 16

CellRange = tuple[int | None, int | None]


@dataclass(frozen=True)
class Band:
    """Interval [lo, hi] on real edges; infinite edges mean no bound.

    Integer x is inside when lo <= x <= hi (or the strict version on a side
    whose flag is set). Edges are compared with a tolerance of ``EDGE_TOL``
    so that m_i computed in floating point lands on the intended lattice cell.
    """

    lo: float = -math.inf
    hi: float = math.inf
    lo_strict: bool = False
    hi_strict: bool = False

    def __post_init__(self) -> None:
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError("band edges must not be NaN")

    def cells(self, strict_floor: bool = False) -> CellRange:
        if self.lo == math.inf or self.hi == -math.inf:
            return 1, 0
        lo_cell = hi_cell = None
        if math.isfinite(self.lo):
            if self.lo_strict or strict_floor:
                lo_cell = math.floor(self.lo + EDGE_TOL) + 1
            else:
                lo_cell = math.ceil(self.lo - EDGE_TOL)
        if math.isfinite(self.hi):
            if self.hi_strict:
                hi_cell = math.ceil(self.hi - EDGE_TOL) - 1
            else:
                hi_cell = math.floor(self.hi + EDGE_TOL)
        return lo_cell, hi_cell

    def contains(self, x: np.ndarray | int, strict_floor: bool = False) -> np.ndarray | bool:
        lo_cell, hi_cell = self.cells(strict_floor)
        ok = np.ones_like(x, dtype=bool) if isinstance(x, np.ndarray) else True
        if lo_cell is not None:
            ok = ok & (x >= lo_cell)
        if hi_cell is not None:
            ok = ok & (x <= hi_cell)
        return ok


@dataclass(frozen=True)
class Checkpoint:
    """Constraint on S_L at time L.

    ``allowed`` is a finite set of integers or a Band. ``inc_cap`` bounds
    |S_L - S_L' - inc_shift| where L' is the previous checkpoint time
    (0 for the first one, where S_0 = u).
    """

    time: int
    allowed: frozenset[int] | Band | None = None
    inc_cap: float | None = None
    inc_shift: float = 0.0

    def __post_init__(self) -> None:
        if self.allowed is not None and not isinstance(self.allowed, Band):
            object.__setattr__(self, "allowed", frozenset(int(x) for x in self.allowed))
        if self.inc_cap is not None and not self.inc_cap >= 0:
            raise ValueError(f"increment cap must be >= 0, got {self.inc_cap}")

    def cells(self) -> CellRange:
        if self.allowed is None:
            return None, None
        if isinstance(self.allowed, Band):
            return self.allowed.cells()
        if not self.allowed:
            return 1, 0
        return min(self.allowed), max(self.allowed)

    def admits(self, x: np.ndarray) -> np.ndarray:
        if self.allowed is None:
            return np.ones_like(x, dtype=bool)
        if isinstance(self.allowed, Band):
            return np.asarray(self.allowed.contains(x), dtype=bool)
        return np.isin(x, np.fromiter(self.allowed, dtype=np.int64, count=len(self.allowed)))

    def cap_cells(self, previous: int) -> CellRange:
        if self.inc_cap is None:
            return None, None
        centre = previous + self.inc_shift
        return (
            math.ceil(centre - self.inc_cap - EDGE_TOL),
            math.floor(centre + self.inc_cap + EDGE_TOL),
        )


@dataclass(frozen=True)
class PathConstraint:
    """Bands for steps 1..n, checkpoints and an optional pinned endpoint.

    ``bands[i - 1]`` constrains S_i; missing trailing entries and ``None``
    entries are unconstrained. ``strict_floor`` makes every lower edge strict.
    """

    bands: tuple[Band | None, ...] = ()
    strict_floor: bool = False
    checkpoints: tuple[Checkpoint, ...] = ()
    endpoint: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "bands", tuple(self.bands))
        object.__setattr__(self, "checkpoints", tuple(self.checkpoints))
        previous = 0
        for ck in self.checkpoints:
            if ck.time <= previous:
                raise ValueError("checkpoint times must be strictly increasing and >= 1")
            previous = ck.time

    @classmethod
    def floor(
        cls,
        n: int,
        level: float = 0.0,
        *,
        strict: bool = False,
        ceiling: float = math.inf,
        endpoint: int | None = None,
    ) -> "PathConstraint":
        return cls(bands=(Band(level, ceiling),) * n, strict_floor=strict, endpoint=endpoint)

    def with_endpoint(self, endpoint: int | None) -> "PathConstraint":
        return replace(self, endpoint=endpoint)

    @property
    def has_caps(self) -> bool:
        return any(ck.inc_cap is not None for ck in self.checkpoints)

    def band_at(self, i: int) -> Band | None:
        return self.bands[i - 1] if 0 < i <= len(self.bands) else None

    def checkpoint_at(self, i: int) -> Checkpoint | None:
        for ck in self.checkpoints:
            if ck.time == i:
                return ck
        return None

    def validate_for(self, n: int) -> None:
        if len(self.bands) > n:
            raise ValueError(f"{len(self.bands)} bands for a {n}-step schedule")
        if self.checkpoints and self.checkpoints[-1].time > n:
            raise ValueError(f"checkpoint at time {self.checkpoints[-1].time} beyond n={n}")

    def step_cells(self, i: int, n: int) -> CellRange:
        """Integer bounds on S_i from the band, a checkpoint and the endpoint."""
        lo, hi = None, None
        band = self.band_at(i)
        if band is not None:
            lo, hi = band.cells(self.strict_floor)
        ck = self.checkpoint_at(i)
        if ck is not None:
            lo, hi = _intersect((lo, hi), ck.cells())
        if i == n and self.endpoint is not None:
            lo, hi = _intersect((lo, hi), (self.endpoint, self.endpoint))
        return lo, hi

    def check_feasible(self, n: int) -> None:
        self.validate_for(n)
        for i in range(1, n + 1):
            lo, hi = self.step_cells(i, n)
            if lo is not None and hi is not None and lo > hi:
                raise InfeasibleConstraintError(step=i, reason=f"empty cell range [{lo}, {hi}]")
            ck = self.checkpoint_at(i)
            if ck is not None and isinstance(ck.allowed, frozenset):
                inside = [x for x in ck.allowed if (lo is None or x >= lo) and (hi is None or x <= hi)]
                if not inside:
                    raise InfeasibleConstraintError(step=i, reason="checkpoint set misses the band")

    def path_mask(self, paths: np.ndarray) -> np.ndarray:
        """Indicator of the event for each row of an (m, n+1) path array."""
        n = paths.shape[1] - 1
        ok = np.ones(paths.shape[0], dtype=bool)
        for i in range(1, n + 1):
            band = self.band_at(i)
            if band is not None:
                ok &= band.contains(paths[:, i], self.strict_floor)
        previous = 0
        for ck in self.checkpoints:
            col = paths[:, ck.time]
            ok &= ck.admits(col)
            if ck.inc_cap is not None:
                ok &= np.abs(col - paths[:, previous] - ck.inc_shift) <= ck.inc_cap + EDGE_TOL
            previous = ck.time
        if self.endpoint is not None:
            ok &= paths[:, n] == self.endpoint
        return ok


def _intersect(a: CellRange, b: CellRange) -> CellRange:
    lo = a[0] if b[0] is None else (b[0] if a[0] is None else max(a[0], b[0]))
    hi = a[1] if b[1] is None else (b[1] if a[1] is None else min(a[1], b[1]))
    return lo, hi


@dataclass(frozen=True, eq=False)
class PositionDistribution:
    """Mass over positions offset..offset+len(mass)-1, times exp(log_scale)."""

    offset: int
    mass: np.ndarray
    log_scale: float = 0.0

    @classmethod
    def point(cls, x: int) -> "PositionDistribution":
        return cls(offset=int(x), mass=np.ones(1))

    @property
    def is_empty(self) -> bool:
        return self.mass.size == 0 or not bool(np.any(self.mass > 0))

    @property
    def positions(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.mass.size, dtype=np.int64)

    def log_total(self) -> float:
        if self.is_empty:
            return -math.inf
        return math.log(math.fsum(self.mass.tolist())) + self.log_scale

    def total(self) -> float:
        return math.exp(self.log_total())

    def log_probability_at(self, x: int) -> float:
        idx = int(x) - self.offset
        if not 0 <= idx < self.mass.size or self.mass[idx] <= 0:
            return -math.inf
        return math.log(self.mass[idx]) + self.log_scale

    def probability_at(self, x: int) -> float:
        return math.exp(self.log_probability_at(x))

    def probabilities(self) -> np.ndarray:
        return self.mass * math.exp(self.log_scale)

    def as_dict(self) -> dict[int, float]:
        probs = self.probabilities()
        return {int(x): float(p) for x, p in zip(self.positions, probs) if p > 0}


def _require_lattice(schedule: StepSchedule, operation: str) -> None:
    if not schedule.is_lattice:
        raise NotLatticeError(operation=operation)


def _shift_add(offset: int, mass: np.ndarray, law: IncrementLaw) -> tuple[int, np.ndarray]:
    atoms = law.int_atoms
    amin = int(atoms[0])
    out = np.zeros(mass.size + int(atoms[-1]) - amin)
    for a, p in zip((atoms - amin).tolist(), law.probs.tolist()):
        out[a : a + mass.size] += p * mass
    return offset + amin, out


def _restrict(offset: int, mass: np.ndarray, cells: CellRange) -> tuple[int, np.ndarray]:
    lo, hi = cells
    start = 0 if lo is None else max(0, lo - offset)
    stop = mass.size if hi is None else min(mass.size, hi - offset + 1)
    if start >= stop:
        return offset, mass[:0]
    return offset + start, mass[start:stop]


def _trim(offset: int, mass: np.ndarray) -> tuple[int, np.ndarray]:
    nonzero = np.flatnonzero(mass)
    if nonzero.size == 0:
        return offset, mass[:0]
    first, last = int(nonzero[0]), int(nonzero[-1])
    return offset + first, mass[first : last + 1]


def _rescale(mass: np.ndarray, log_scale: float, step: int) -> tuple[np.ndarray, float]:
    if mass.size == 0:
        return mass, log_scale
    peak = float(mass.max())
    if 0 < peak < RESCALE_FLOOR:
        logger.debug("[Engine][rescale] step=%s peak=%.3e", step, peak)
        return mass / peak, log_scale + math.log(peak)
    return mass, log_scale


def _apply_step(
    dist: PositionDistribution,
    law: IncrementLaw,
    cells: CellRange,
    checkpoint: Checkpoint | None,
    step: int,
) -> PositionDistribution:
    offset, mass = _shift_add(dist.offset, dist.mass, law)
    offset, mass = _restrict(offset, mass, cells)
    if checkpoint is not None and isinstance(checkpoint.allowed, frozenset) and mass.size:
        mass = mass * checkpoint.admits(np.arange(offset, offset + mass.size))
    offset, mass = _trim(offset, mass)
    mass, log_scale = _rescale(mass, dist.log_scale, step)
    if mass.size == 0:
        logger.debug("[Engine][annihilated] step=%s", step)
    return PositionDistribution(offset=offset, mass=mass, log_scale=log_scale)


def propagate(
    dist: PositionDistribution,
    law: IncrementLaw,
    band: Band | None = None,
    strict: bool = False,
    *,
    require_positive: bool = False,
) -> PositionDistribution:
    """One step of the walk: convolve with ``law``, then cut to ``band``.

    An annihilated distribution comes back empty (probability 0) unless
    ``require_positive`` is set.
    """
    if not law.lattice:
        raise NotLatticeError(operation="propagate")
    cells = band.cells(strict) if band is not None else (None, None)
    out = _apply_step(dist, law, cells, None, step=1)
    if require_positive and out.is_empty:
        raise EmptyDistributionError(step=1)
    return out


def _run(
    dist: PositionDistribution,
    schedule: StepSchedule,
    constraint: PathConstraint,
    start: int,
    stop: int,
) -> PositionDistribution:
    """Propagate from time ``start`` to ``stop`` ignoring increment caps."""
    n = schedule.n
    for i in range(start + 1, stop + 1):
        if dist.is_empty:
            break
        dist = _apply_step(
            dist,
            schedule.laws[i - 1],
            constraint.step_cells(i, n),
            constraint.checkpoint_at(i),
            step=i,
        )
    return dist


def _capped_segment(
    dist: PositionDistribution,
    schedule: StepSchedule,
    constraint: PathConstraint,
    start: int,
    ck: Checkpoint,
) -> PositionDistribution:
    """Segment ending at a capped checkpoint: one run per start cell."""
    rows = []
    for idx in np.flatnonzero(dist.mass).tolist():
        x = dist.offset + idx
        row = _run(PositionDistribution.point(x), schedule, constraint, start, ck.time)
        offset, mass = _trim(*_restrict(row.offset, row.mass, ck.cap_cells(x)))
        if mass.size:
            weight = math.log(dist.mass[idx]) + row.log_scale
            rows.append((offset, mass, weight))
    if not rows:
        return PositionDistribution(offset=dist.offset, mass=dist.mass[:0], log_scale=dist.log_scale)
    top = max(weight for _, _, weight in rows)
    lo = min(offset for offset, _, _ in rows)
    hi = max(offset + mass.size for offset, mass, _ in rows)
    out = np.zeros(hi - lo)
    for offset, mass, weight in rows:
        out[offset - lo : offset - lo + mass.size] += mass * math.exp(weight - top)
    mass, log_scale = _rescale(out, dist.log_scale + top, ck.time)
    return PositionDistribution(offset=lo, mass=mass, log_scale=log_scale)


def _forward(u: int, schedule: StepSchedule, constraint: PathConstraint) -> PositionDistribution:
    dist = PositionDistribution.point(u)
    t = 0
    for ck in constraint.checkpoints:
        if ck.inc_cap is None:
            continue
        previous = max((c.time for c in constraint.checkpoints if c.time < ck.time), default=0)
        dist = _run(dist, schedule, constraint, t, previous)
        dist = _capped_segment(dist, schedule, constraint, previous, ck)
        t = ck.time
    return _run(dist, schedule, constraint, t, schedule.n)


def _prepare(schedule: StepSchedule, constraint: PathConstraint | None, operation: str) -> PathConstraint:
    _require_lattice(schedule, operation)
    constraint = constraint if constraint is not None else PathConstraint()
    constraint.check_feasible(schedule.n)
    return constraint


def endpoint_distribution(
    u: int, schedule: StepSchedule, constraint: PathConstraint | None = None
) -> PositionDistribution:
    """Joint law of (event, S_n) as a sub-probability over positions."""
    constraint = _prepare(schedule, constraint, "endpoint_distribution")
    return _forward(int(u), schedule, constraint)


def event_log_prob(u: int, schedule: StepSchedule, constraint: PathConstraint | None = None) -> float:
    return endpoint_distribution(u, schedule, constraint).log_total()


def event_prob(u: int, schedule: StepSchedule, constraint: PathConstraint | None = None) -> float:
    """Exact P_u(bands, checkpoints, endpoint) by forward DP."""
    return math.exp(event_log_prob(u, schedule, constraint))


def _hull_forward(
    schedule: StepSchedule, constraint: PathConstraint, k: int, window: tuple[int, int]
) -> list[tuple[int, int]]:
    """Reachable [lo, hi] at times k..n starting from ``window`` at time k."""
    n = schedule.n
    hulls = [window]
    lo, hi = window
    for j in range(k + 1, n + 1):
        law = schedule.laws[j - 1]
        lo, hi = lo + int(law.int_atoms[0]), hi + int(law.int_atoms[-1])
        c_lo, c_hi = constraint.step_cells(j, n)
        if c_lo is not None:
            lo = max(lo, c_lo)
        if c_hi is not None:
            hi = min(hi, c_hi)
        hulls.append((lo, hi))
    return hulls


def _step_mask(constraint: PathConstraint, j: int, lo: int, size: int) -> np.ndarray | None:
    ck = constraint.checkpoint_at(j)
    if ck is None or not isinstance(ck.allowed, frozenset):
        return None
    return ck.admits(np.arange(lo, lo + size))


def _pull_back(v: np.ndarray, v_lo: int, law: IncrementLaw, lo: int, size: int) -> np.ndarray:
    """x -> sum_a p(a) v(x + a) over positions lo..lo+size-1."""
    out = np.zeros(size)
    v_hi = v_lo + v.size - 1
    for a, p in zip(law.int_atoms.tolist(), law.probs.tolist()):
        x_lo = max(lo, v_lo - a)
        x_hi = min(lo + size - 1, v_hi - a)
        if x_lo > x_hi:
            continue
        out[x_lo - lo : x_hi - lo + 1] += p * v[x_lo + a - v_lo : x_hi + a - v_lo + 1]
    return out


def _backward(
    schedule: StepSchedule,
    constraint: PathConstraint,
    k: int,
    window: tuple[int, int],
    *,
    mask_start: bool = False,
) -> np.ndarray:
    """Survival weights P(event on steps k+1..n | S_k = x), up to one common factor."""
    n = schedule.n
    hulls = _hull_forward(schedule, constraint, k, window)
    lo_n, hi_n = hulls[-1]
    if lo_n > hi_n:
        return np.zeros(window[1] - window[0] + 1)
    v = np.ones(hi_n - lo_n + 1)
    v_lo = lo_n
    if n > k or mask_start:
        mask = _step_mask(constraint, n, lo_n, v.size)
        if mask is not None:
            v = v * mask
    for j in range(n - 1, k - 1, -1):
        lo, hi = hulls[j - k]
        if lo > hi:
            return np.zeros(window[1] - window[0] + 1)
        v = _pull_back(v, v_lo, schedule.laws[j], lo, hi - lo + 1)
        v_lo = lo
        if j > k or mask_start:
            mask = _step_mask(constraint, j, lo, v.size)
            if mask is not None:
                v = v * mask
        peak = float(v.max()) if v.size else 0.0
        if 0 < peak < RESCALE_FLOOR:
            v = v / peak
    return v


def forward_backward(
    u: int,
    schedule: StepSchedule,
    constraint: PathConstraint,
    k: int,
    f: Callable[[np.ndarray], np.ndarray | float],
) -> float:
    """E_u(f(S_k) | event) from a forward pass to k and a backward pass from n."""
    constraint = _prepare(schedule, constraint, "forward_backward")
    if constraint.has_caps:
        raise ValueError("forward_backward does not support increment caps")
    if not 0 <= k <= schedule.n:
        raise ValueError(f"time k={k} outside 0..{schedule.n}")
    fwd = _run(PositionDistribution.point(int(u)), schedule, constraint, 0, k)
    if fwd.is_empty:
        raise ZeroProbabilityEventError(detail=f"no path reaches time {k}")
    window = (fwd.offset, fwd.offset + fwd.mass.size - 1)
    weights = fwd.mass * _backward(schedule, constraint, k, window)
    total = math.fsum(weights.tolist())
    if total <= 0:
        raise ZeroProbabilityEventError(detail=f"no surviving continuation from time {k}")
    values = np.broadcast_to(np.asarray(f(fwd.positions), dtype=float), weights.shape)
    return float(np.dot(values, weights) / total)


def conditional_step_means(
    u: int, schedule: StepSchedule, constraint: PathConstraint, i: int
) -> tuple[np.ndarray, np.ndarray]:
    """Positions x reachable at time i under the event, and E_u(S_{i+1} | S_i = x, event)."""
    constraint = _prepare(schedule, constraint, "conditional_step_means")
    if constraint.has_caps:
        raise ValueError("conditional_step_means does not support increment caps")
    if not 0 <= i < schedule.n:
        raise ValueError(f"time i={i} outside 0..{schedule.n - 1}")
    fwd = _run(PositionDistribution.point(int(u)), schedule, constraint, 0, i)
    if fwd.is_empty:
        raise ZeroProbabilityEventError(detail=f"no path reaches time {i}")
    law = schedule.laws[i]
    lo = fwd.offset + int(law.int_atoms[0])
    hi = fwd.offset + fwd.mass.size - 1 + int(law.int_atoms[-1])
    c_lo, c_hi = constraint.step_cells(i + 1, schedule.n)
    lo = lo if c_lo is None else max(lo, c_lo)
    hi = hi if c_hi is None else min(hi, c_hi)
    if lo > hi:
        raise ZeroProbabilityEventError(detail=f"no admissible position at time {i + 1}")
    v = _backward(schedule, constraint, i + 1, (lo, hi), mask_start=True)
    positions, means = [], []
    for idx in np.flatnonzero(fwd.mass).tolist():
        x = fwd.offset + idx
        targets = x + law.int_atoms
        inside = (targets >= lo) & (targets <= hi)
        w = np.zeros(law.size)
        w[inside] = law.probs[inside] * v[targets[inside] - lo]
        total = w.sum()
        if total > 0:
            positions.append(x)
            means.append(float(np.dot(w, targets) / total))
    return np.asarray(positions, dtype=np.int64), np.asarray(means)


def block_kernel(
    segment: StepSchedule,
    xs: Sequence[int],
    ys: Sequence[int],
    constraint: PathConstraint | None = None,
) -> np.ndarray:
    """Matrix K[r, c] = P(S_L = ys[c], segment constraint | S_0 = xs[r]).

    ``constraint`` is expressed in the segment's own step numbering 1..len.
    """
    constraint = _prepare(segment, constraint, "block_kernel")
    out = np.zeros((len(xs), len(ys)))
    for r, x in enumerate(xs):
        dist = _forward(int(x), segment, constraint)
        if dist.is_empty:
            continue
        for c, y in enumerate(ys):
            out[r, c] = dist.probability_at(int(y))
    return out


def brute_force_prob(u: int, schedule: StepSchedule, constraint: PathConstraint | None = None) -> float:
    """Exhaustive enumeration of all step sequences; oracle for the DP."""
    _require_lattice(schedule, "brute_force_prob")
    constraint = constraint if constraint is not None else PathConstraint()
    constraint.validate_for(schedule.n)
    n = schedule.n
    sizes = [law.size for law in schedule.laws]
    paths = math.prod(sizes)
    if paths > ENUMERATION_LIMIT:
        raise TooLargeError(paths=paths, limit=ENUMERATION_LIMIT)

    split = n
    while split > 0 and math.prod(sizes[split - 1 :]) <= _SUFFIX_BLOCK:
        split -= 1
    suffix_laws = schedule.laws[split:]
    if suffix_laws:
        grids = np.meshgrid(*[law.int_atoms for law in suffix_laws], indexing="ij")
        suffix_steps = np.stack([g.ravel() for g in grids], axis=1)
        weight_grids = np.meshgrid(*[law.probs for law in suffix_laws], indexing="ij")
        suffix_weights = np.prod(np.stack([g.ravel() for g in weight_grids], axis=1), axis=1)
        suffix_walk = np.cumsum(suffix_steps, axis=1)
    else:
        suffix_walk = np.zeros((1, 0), dtype=np.int64)
        suffix_weights = np.ones(1)

    block = np.empty((suffix_walk.shape[0], n + 1), dtype=np.int64)
    block[:, 0] = u
    terms = []
    prefix_laws = schedule.laws[:split]
    for choice in itertools.product(*[range(law.size) for law in prefix_laws]):
        level = int(u)
        weight = 1.0
        for i, (law, j) in enumerate(zip(prefix_laws, choice), start=1):
            level += int(law.int_atoms[j])
            weight *= float(law.probs[j])
            block[:, i] = level
        block[:, split + 1 :] = level + suffix_walk
        ok = constraint.path_mask(block)
        terms.append(weight * float(np.dot(suffix_weights, ok.astype(float))))
    return math.fsum(terms)


def reflection_oracle(u: int, v: int, n: int) -> float:
    """P_u(S_i >= 0 for i <= n, S_n = v) for the simple +-1 walk."""
    if u < 0 or v < 0 or n < 0:
        raise ValueError(f"reflection oracle needs u, v, n >= 0, got u={u} v={v} n={n}")
    if (n + v - u) % 2:
        raise ParityViolationError(u=u, v=v, n=n)

    def paths(k: int) -> int:
        return math.comb(n, k) if 0 <= k <= n else 0

    count = paths((n + v - u) // 2) - paths((n + v + u + 2) // 2)
    return float(Fraction(count, 2**n))


def lattice_endpoint(schedule: StepSchedule, centered: float, k: int | None = None) -> int:
    """Lattice point nearest to m_k + centered (halves round up)."""
    k = schedule.n if k is None else k
    return int(math.floor(centered + float(schedule.partial_means[k]) + 0.5))


def centered_constraint(
    schedule: StepSchedule,
    *,
    lower: float | Sequence[float | None] | None = None,
    upper: float | Sequence[float | None] | None = None,
    strict_floor: bool = False,
    open_edges: bool = False,
    endpoint: int | None = None,
    checkpoints: Iterable[Checkpoint] = (),
) -> PathConstraint:
    """Bands m_i + lower_i <= S_i <= m_i + upper_i for the centered walk.

    ``lower``/``upper`` are scalars applied at every step or per-step
    sequences (``None`` entries are unbounded). ``endpoint`` is already in
    uncentered lattice coordinates.
    """
    n = schedule.n
    means = schedule.partial_means

    def per_step(value: float | Sequence[float | None] | None, default: float) -> list[float]:
        if value is None:
            return [default] * n
        if isinstance(value, (int, float)):
            return [float(value)] * n
        if len(value) != n:
            raise ValueError(f"per-step bound has {len(value)} entries for n={n}")
        return [default if item is None else float(item) for item in value]

    lows = per_step(lower, -math.inf)
    highs = per_step(upper, math.inf)
    bands = tuple(
        Band(
            lo=float(means[i]) + lows[i - 1],
            hi=float(means[i]) + highs[i - 1],
            lo_strict=open_edges,
            hi_strict=open_edges,
        )
        for i in range(1, n + 1)
    )
    return PathConstraint(
        bands=bands,
        strict_floor=strict_floor,
        checkpoints=tuple(checkpoints),
        endpoint=endpoint,
    )
