"""Finite-support increment laws.

Everything about a single step lives here: validation, moments, the log-MGF
and its derivatives, the admissible class check, exponential tilting, tilt
solving over a whole schedule, and the truncation coupling that replaces a
heavy-tailed law by a bounded one with the same mean.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property, reduce
from typing import TYPE_CHECKING, Literal, Mapping, NamedTuple, Sequence

import numpy as np

from inhomwalk_core.errors import (
    DegenerateScheduleError,
    EmptySupportError,
    InvalidLawError,
    MomentHypothesisViolatedError,
    NegativeWeightError,
    NonIntegerAtomOnLatticeError,
    NotCenteredError,
    NotLatticeError,
    TargetOutOfRangeError,
    TiltNonConvergenceError,
)

if TYPE_CHECKING:
    from inhomwalk_core.schedule import StepSchedule

logger = logging.getLogger(__name__)

MomentKind = Literal["mean", "variance", "abs_p", "raw_p", "positive_part"]
TiltProfileKind = Literal["constant", "linear", "sine", "alternating"]

CENTERING_TOL = 1e-12
_REL_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class IncrementLaw:
    """Probability mass function on finitely many atoms.

    Instances are built by :func:`validate_law`; arrays are frozen so a law can
    be shared between concurrent tasks.
    """

    atoms: np.ndarray
    probs: np.ndarray
    lattice: bool

    def __post_init__(self) -> None:
        self.atoms.setflags(write=False)
        self.probs.setflags(write=False)

    @property
    def size(self) -> int:
        return int(self.atoms.size)

    @property
    def min_atom(self) -> float:
        return float(self.atoms[0])

    @property
    def max_atom(self) -> float:
        return float(self.atoms[-1])

    @cached_property
    def int_atoms(self) -> np.ndarray:
        if not self.lattice:
            raise NotLatticeError(operation="int_atoms")
        out = self.atoms.astype(np.int64)
        out.setflags(write=False)
        return out

    @cached_property
    def mean(self) -> float:
        return moment(self, "mean")

    @cached_property
    def variance(self) -> float:
        return moment(self, "variance")

    def prob_of(self, atom: float) -> float:
        idx = np.searchsorted(self.atoms, atom)
        if idx < self.size and self.atoms[idx] == atom:
            return float(self.probs[idx])
        return 0.0

    def to_literal(self) -> dict:
        atoms = [int(a) for a in self.atoms] if self.lattice else [float(a) for a in self.atoms]
        return {"atoms": atoms, "probs": [float(p) for p in self.probs], "lattice": self.lattice}

    def __repr__(self) -> str:
        pairs = ", ".join(f"{a:g}:{p:.6g}" for a, p in zip(self.atoms, self.probs))
        return f"IncrementLaw({{{pairs}}}, lattice={self.lattice})"


def validate_law(
    atoms: Sequence[float],
    weights: Sequence[float],
    lattice: bool = True,
) -> IncrementLaw:
    """Normalize raw weights into an :class:`IncrementLaw`.

    Zero-weight atoms are dropped, atoms are sorted ascending.
    """
    a = np.asarray(atoms, dtype=float).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    if a.shape != w.shape:
        raise InvalidLawError(reason=f"{a.size} atoms but {w.size} weights")
    if a.size == 0:
        raise EmptySupportError(atoms=[])
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(w))):
        raise InvalidLawError(reason="atoms and weights must be finite")
    negative = np.flatnonzero(w < 0)
    if negative.size:
        i = int(negative[0])
        raise NegativeWeightError(atom=float(a[i]), weight=float(w[i]))
    if np.unique(a).size != a.size:
        raise InvalidLawError(reason="atoms must be distinct")
    if lattice:
        off_grid = a[a != np.round(a)]
        if off_grid.size:
            raise NonIntegerAtomOnLatticeError(atom=float(off_grid[0]))
    keep = w > 0
    if not keep.any():
        raise EmptySupportError(atoms=a.tolist())
    a, w = a[keep], w[keep]
    order = np.argsort(a, kind="stable")
    a, w = a[order], w[order]
    return IncrementLaw(atoms=a.copy(), probs=w / math.fsum(w), lattice=bool(lattice))


def moment(law: IncrementLaw, kind: MomentKind, p: float | None = None) -> float:
    x, q = law.atoms, law.probs
    if kind == "mean":
        return float(np.dot(q, x))
    if kind == "variance":
        mu = float(np.dot(q, x))
        return float(np.dot(q, (x - mu) ** 2))
    if kind == "positive_part":
        return float(np.dot(q, np.where(x > 0, x, 0.0)))
    if kind in ("abs_p", "raw_p"):
        if p is None or not p >= 1:
            raise ValueError(f"moment kind={kind} needs p >= 1, got p={p}")
        if kind == "abs_p":
            return float(np.dot(q, np.abs(x) ** p))
        if float(p) != int(p):
            raise ValueError(f"raw_p needs an integer order, got p={p}")
        return float(np.dot(q, x ** int(p)))
    raise ValueError(f"unknown moment kind={kind!r}")


def center(law: IncrementLaw) -> IncrementLaw:
    """Law of X - E(X)."""
    mu = law.mean
    if mu == 0.0:
        return law
    lattice = law.lattice and float(mu).is_integer()
    return IncrementLaw(atoms=law.atoms - mu, probs=law.probs.copy(), lattice=lattice)


def _tilted_weights(law: IncrementLaw, t: float) -> tuple[np.ndarray, float]:
    exponent = t * law.atoms
    shift = float(exponent.max())
    return law.probs * np.exp(exponent - shift), shift


def log_mgf(law: IncrementLaw, z: float, order: Literal[0, 1, 2] = 0) -> float:
    """H(z) = ln E e^{zX} and its first two derivatives.

    Derivatives are the mean and variance of the z-tilted law.
    """
    w, shift = _tilted_weights(law, z)
    total = float(w.sum())
    if order == 0:
        return math.log(total) + shift
    q = w / total
    m1 = float(np.dot(q, law.atoms))
    if order == 1:
        return m1
    if order == 2:
        return float(np.dot(q, (law.atoms - m1) ** 2))
    raise ValueError(f"log_mgf order must be 0, 1 or 2, got {order}")


def tilt(law: IncrementLaw, t: float) -> IncrementLaw:
    if t == 0:
        return law
    w, _ = _tilted_weights(law, t)
    return IncrementLaw(atoms=law.atoms.copy(), probs=w / w.sum(), lattice=law.lattice)


@dataclass(frozen=True)
class ClassParams:
    """Parameters (delta0, c0, minorant) of the admissible class."""

    delta0: float
    c0: float
    minorant: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not (math.isfinite(self.delta0) and self.delta0 >= 0):
            raise ValueError(f"delta0 must be finite and >= 0, got {self.delta0}")
        if not (math.isfinite(self.c0) and self.c0 > 1):
            raise ValueError(f"c0 must be > 1, got {self.c0}")
        for atom, floor in self.minorant.items():
            if not isinstance(atom, int):
                raise ValueError(f"minorant keys must be integers, got {atom!r}")
            if not 0.0 <= floor <= 1.0:
                raise ValueError(f"minorant entry a_{atom}={floor} outside [0, 1]")
        if math.fsum(self.minorant.values()) > 1.0 + _REL_TOL:
            raise ValueError("minorant must be a sub-probability")

    def minorant_periodicity(self) -> "Periodicity":
        support = sorted(a for a, w in self.minorant.items() if w > 0)
        if not support:
            return Periodicity(irreducible=False, aperiodic=False)
        return _periodicity_of(support)


@dataclass(frozen=True)
class MembershipVerdict:
    member: bool
    mgf_minus: float
    mgf_plus: float
    failing_t: float | None = None
    failing_atom: int | None = None


def check_class_membership(law: IncrementLaw, params: ClassParams) -> MembershipVerdict:
    if not law.lattice:
        raise NotLatticeError(operation="check_class_membership")
    # M is convex, so its sup over [-delta0, delta0] sits at an endpoint.
    mgf_minus = math.exp(log_mgf(law, -params.delta0))
    mgf_plus = math.exp(log_mgf(law, params.delta0))
    failing_t = None
    for t, value in ((-params.delta0, mgf_minus), (params.delta0, mgf_plus)):
        if value > params.c0 * (1 + _REL_TOL):
            failing_t = t
            break
    failing_atom = None
    for atom in sorted(params.minorant):
        if law.prob_of(atom) < params.minorant[atom] - 1e-15:
            failing_atom = atom
            break
    return MembershipVerdict(
        member=failing_t is None and failing_atom is None,
        mgf_minus=mgf_minus,
        mgf_plus=mgf_plus,
        failing_t=failing_t,
        failing_atom=failing_atom,
    )


class Periodicity(NamedTuple):
    irreducible: bool
    aperiodic: bool


def lattice_span(atoms: Sequence[int]) -> int:
    """gcd of the differences between atoms (0 for a single atom)."""
    base = int(atoms[0])
    return reduce(math.gcd, (abs(int(a) - base) for a in atoms[1:]), 0)


def _periodicity_of(atoms: Sequence[int]) -> Periodicity:
    generated = reduce(math.gcd, (abs(int(a)) for a in atoms), 0)
    irreducible = generated == 1 and min(atoms) < 0 < max(atoms)
    return Periodicity(irreducible=irreducible, aperiodic=lattice_span(atoms) == 1)


def check_periodicity(law: IncrementLaw) -> Periodicity:
    return _periodicity_of(law.int_atoms.tolist())


def growing_jump_law(i: int) -> IncrementLaw:
    """Step i of the walk with jumps +-(i+1) of probability 1/(2(i+1)^2) each.

    Variances stay bounded away from zero but E(X_i 1{X_i>0}) -> 0, so the
    positive-part hypothesis of the ballot estimate cannot be dropped.
    """
    if i < 1:
        raise ValueError(f"step index must be >= 1, got {i}")
    side = 1.0 / (2 * (i + 1) ** 2)
    return validate_law([-(i + 1), 0, i + 1], [side, 1.0 - 2 * side, side])


def tilt_profile(kind: TiltProfileKind, n: int, amplitude: float, period: int = 16) -> tuple[float, ...]:
    """Tilt sequence t_1..t_n; all values lie in [-|amplitude|, |amplitude|]."""
    if n < 1:
        raise ValueError(f"profile length must be >= 1, got {n}")
    k = np.arange(1, n + 1, dtype=float)
    if kind == "constant":
        values = np.full(n, amplitude)
    elif kind == "linear":
        values = amplitude * (2 * (k - 1) / max(n - 1, 1) - 1)
    elif kind == "sine":
        if period < 1:
            raise ValueError(f"sine period must be >= 1, got {period}")
        values = amplitude * np.sin(2 * np.pi * k / period)
    elif kind == "alternating":
        values = amplitude * np.where(k % 2 == 1, 1.0, -1.0)
    else:
        raise ValueError(f"unknown tilt profile kind={kind!r}")
    return tuple(float(v) for v in values)


@dataclass(frozen=True, eq=False)
class TiltSchedule:
    """Base law(s) tilted by a time-dependent sequence t_k.

    With several base laws, step k uses base[(k - 1) % len(base)].
    """

    base: tuple[IncrementLaw, ...]
    tilts: tuple[float, ...]
    interval: tuple[float, float] = (-math.inf, math.inf)

    def __post_init__(self) -> None:
        if isinstance(self.base, IncrementLaw):
            object.__setattr__(self, "base", (self.base,))
        object.__setattr__(self, "tilts", tuple(float(t) for t in self.tilts))
        if not self.base:
            raise ValueError("tilt schedule needs at least one base law")
        if not self.tilts:
            raise ValueError("tilt schedule needs at least one tilt")
        a_tilt, b_tilt = self.interval
        if a_tilt > b_tilt:
            raise ValueError(f"tilt interval is empty: {self.interval}")
        for k, t in enumerate(self.tilts, start=1):
            if not (math.isfinite(t) and a_tilt <= t <= b_tilt):
                raise ValueError(f"tilt t_{k}={t} outside [{a_tilt}, {b_tilt}]")

    def __len__(self) -> int:
        return len(self.tilts)

    @classmethod
    def from_profile(
        cls,
        base: IncrementLaw | Sequence[IncrementLaw],
        n: int,
        *,
        kind: TiltProfileKind,
        amplitude: float,
        period: int = 16,
        interval: tuple[float, float] | None = None,
    ) -> "TiltSchedule":
        bases = (base,) if isinstance(base, IncrementLaw) else tuple(base)
        bound = abs(amplitude)
        return cls(
            base=bases,
            tilts=tilt_profile(kind, n, amplitude, period),
            interval=interval if interval is not None else (-bound, bound),
        )

    def laws(self) -> tuple[IncrementLaw, ...]:
        cache: dict[tuple[int, float], IncrementLaw] = {}
        out = []
        for k, t in enumerate(self.tilts):
            key = (k % len(self.base), t)
            if key not in cache:
                cache[key] = tilt(self.base[key[0]], t)
            out.append(cache[key])
        return tuple(out)

    def to_schedule(self) -> "StepSchedule":
        from inhomwalk_core.schedule import StepSchedule

        return StepSchedule(self.laws())


def _mean_and_variance(groups: Sequence[tuple[IncrementLaw, int]], lam: float) -> tuple[float, float]:
    mean = math.fsum(count * log_mgf(law, lam, 1) for law, count in groups)
    var = math.fsum(count * log_mgf(law, lam, 2) for law, count in groups)
    return mean, var


def solve_tilt_for_mean(schedule: "StepSchedule", target: float, tol: float = 1e-10) -> float:
    """λ with |sum_i H_i'(λ) - target| <= tol.

    Safeguarded Newton on the increasing function sum_i H_i'; a Newton step
    leaving the current bracket is replaced by bisection.
    """
    groups = schedule.grouped()
    if all(law.size == 1 for law, _ in groups):
        raise DegenerateScheduleError(steps=schedule.n)
    lower = math.fsum(count * law.min_atom for law, count in groups)
    upper = math.fsum(count * law.max_atom for law, count in groups)
    if not lower < target < upper:
        raise TargetOutOfRangeError(target=target, lower=lower, upper=upper)

    mean0, _ = _mean_and_variance(groups, 0.0)
    if abs(mean0 - target) <= tol:
        return 0.0
    # Bracket the root by doubling away from zero.
    direction = 1.0 if mean0 < target else -1.0
    near, far = 0.0, direction
    while True:
        value, _ = _mean_and_variance(groups, far)
        if (value - target) * direction >= 0:
            break
        near, far = far, 2 * far
        if abs(far) > 1e8:
            raise TargetOutOfRangeError(target=target, lower=lower, upper=upper)
    lo, hi = min(near, far), max(near, far)

    lam = 0.5 * (lo + hi)
    for _ in range(500):
        value, slope = _mean_and_variance(groups, lam)
        diff = value - target
        if abs(diff) <= tol:
            return lam
        if diff > 0:
            hi = lam
        else:
            lo = lam
        step = lam - diff / slope if slope > 0 else math.nan
        lam = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(lam)):
            break
    # a collapsed bracket is accepted only up to the rounding of the mean sum
    value, _ = _mean_and_variance(groups, lam)
    residual = abs(value - target)
    scale = math.fsum(count * max(abs(law.min_atom), abs(law.max_atom)) for law, count in groups)
    if residual <= tol + 16 * np.finfo(float).eps * scale:
        return lam
    logger.warning("[Laws][solve_tilt] bracket collapsed target=%s lam=%s residual=%s", target, lam, residual)
    raise TiltNonConvergenceError(target=target, lam=lam, residual=residual, tol=tol)


@dataclass(frozen=True)
class TruncationCheck:
    name: str
    lhs: float
    rhs: float
    holds: bool


@dataclass(frozen=True, eq=False)
class TruncationResult:
    truncated: IncrementLaw
    atom_value: float
    bernoulli_param: float
    mismatch_bound: float
    mismatch_prob: float
    conclusions: tuple[TruncationCheck, ...]

    @property
    def all_hold(self) -> bool:
        return all(check.holds for check in self.conclusions)


def _leq(name: str, lhs: float, rhs: float) -> TruncationCheck:
    return TruncationCheck(name, lhs, rhs, lhs <= rhs + _REL_TOL * max(1.0, abs(rhs)))


def truncate_couple(
    law: IncrementLaw,
    K: float,
    alpha: float,
    A: float,
    p_values: Sequence[float] = (1, 2, 3, 4),
) -> TruncationResult:
    """Bounded replacement Y = X 1{|X|<=K} + x xi of a centered law.

    x = K^alpha E(X 1{|X|>K}) and xi ~ Bernoulli(K^-alpha) independent of X,
    so E(Y) = 0 and |Y| <= (A + 1) K.
    """
    if K < 1:
        raise ValueError(f"truncation level K must be >= 1, got {K}")
    if alpha <= 1:
        raise ValueError(f"alpha must be > 1, got {alpha}")
    mean = law.mean
    if abs(mean) > CENTERING_TOL:
        raise NotCenteredError(mean=mean, tolerance=CENTERING_TOL)
    abs_alpha = moment(law, "abs_p", alpha)
    if abs_alpha > A * (1 + _REL_TOL):
        raise MomentHypothesisViolatedError(moment=abs_alpha, bound=A, alpha=alpha)

    x, q = law.atoms, law.probs
    inside = np.abs(x) <= K
    tail = math.fsum((x[~inside] * q[~inside]).tolist())
    atom_value = K**alpha * tail
    bern = K ** (-alpha)
    kept = np.where(inside, x, 0.0)

    merged: dict[float, list[float]] = {}
    for b, p in zip(kept.tolist(), q.tolist()):
        merged.setdefault(b, []).append(p * (1 - bern))
        merged.setdefault(b + atom_value, []).append(p * bern)
    atoms = sorted(merged)
    weights = [math.fsum(merged[a]) for a in atoms]
    lattice = law.lattice and float(atom_value).is_integer()
    truncated = validate_law(atoms, weights, lattice=lattice)

    mismatch_prob = math.fsum(
        p * ((1 - bern) * (b != a) + bern * (b + atom_value != a))
        for a, b, p in zip(x.tolist(), kept.tolist(), q.tolist())
    )
    mismatch_bound = (A + 1) / K**alpha

    checks = [
        _leq("mean_zero", abs(truncated.mean), CENTERING_TOL),
        _leq("support_bound", float(np.abs(truncated.atoms).max()), (A + 1) * K),
        _leq("mismatch", mismatch_prob, mismatch_bound),
    ]
    for p in p_values:
        checks.append(
            _leq(
                f"moment_upper_p{p:g}",
                moment(truncated, "abs_p", p),
                2 ** (p - 1) * (moment(law, "abs_p", p) + K ** (p - alpha) * A**p),
            )
        )
    if alpha > 2:
        checks.append(
            _leq(
                "second_moment_lower",
                moment(law, "raw_p", 2) - A * K ** (2 - alpha) - 2 * A**2 * K ** (2 - 2 * alpha),
                moment(truncated, "raw_p", 2),
            )
        )
    return TruncationResult(
        truncated=truncated,
        atom_value=atom_value,
        bernoulli_param=bern,
        mismatch_bound=mismatch_bound,
        mismatch_prob=mismatch_prob,
        conclusions=tuple(checks),
    )
