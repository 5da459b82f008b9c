"""Families of admissible walks and the parameter grids the verifiers sweep."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from inhomwalk.core_adapter import (
    ClassParams,
    IncrementLaw,
    MembershipVerdict,
    StepSchedule,
    TiltProfileKind,
    TiltSchedule,
    check_class_membership,
    validate_law,
)

DEFAULT_N = (64, 128, 256, 512, 1024, 4096)
LAMBDA_0 = 4


@dataclass(frozen=True)
class TiltProfile:
    kind: TiltProfileKind
    amplitude: float
    period: int = 16


@dataclass(frozen=True, eq=False)
class MemberSpec:
    """One named walk of a family.

    Without tilts the laws are cycled over the steps. With ``tilts`` (cycled)
    or ``profile``, step k uses base law laws[(k - 1) % len(laws)] tilted by t_k.
    """

    name: str
    laws: tuple[IncrementLaw, ...]
    tilts: tuple[float, ...] | None = None
    profile: TiltProfile | None = None
    tilt_interval: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "laws", tuple(self.laws))
        if not self.laws:
            raise ValueError(f"member {self.name!r} needs at least one law")
        if self.tilts is not None and self.profile is not None:
            raise ValueError(f"member {self.name!r} sets both tilts and a tilt profile")
        if self.tilts is not None:
            object.__setattr__(self, "tilts", tuple(float(t) for t in self.tilts))
            if not self.tilts:
                raise ValueError(f"member {self.name!r} has an empty tilt list")

    def schedule(self, n: int) -> StepSchedule:
        if self.profile is not None:
            return TiltSchedule.from_profile(
                self.laws,
                n,
                kind=self.profile.kind,
                amplitude=self.profile.amplitude,
                period=self.profile.period,
                interval=self.tilt_interval,
            ).to_schedule()
        if self.tilts is not None:
            tilts = tuple(self.tilts[k % len(self.tilts)] for k in range(n))
            interval = self.tilt_interval if self.tilt_interval is not None else (-math.inf, math.inf)
            return TiltSchedule(base=self.laws, tilts=tilts, interval=interval).to_schedule()
        return StepSchedule.cycle(self.laws, n)


def _default_points(n: int) -> tuple[int, ...]:
    root = math.isqrt(n)
    return tuple(sorted({0, 1, root // 2, root, int(math.floor(n**0.6))}))


@dataclass(frozen=True)
class GridSpec:
    n: tuple[int, ...] = DEFAULT_N
    u: tuple[int, ...] | None = None
    v: tuple[int, ...] | None = None
    lam: tuple[int, ...] | None = None
    s: tuple[float, ...] = (0.5, 1.0, 2.0)
    t: tuple[float, ...] = (1.0, 1.5, 2.0)
    K: tuple[float, ...] = (0.5, 1.0, 1.5)
    alpha: tuple[float, ...] = (0.0, 0.5, 0.6)
    beta: float = 0.15
    epsilon: float = 0.25
    rho: float = 0.5
    checkpoints: tuple[int, ...] = (2, 3, 4)

    def __post_init__(self) -> None:
        if any(n < 1 for n in self.n):
            raise ValueError("grid n values must be >= 1")
        if not 0 < self.beta < 1 / 6:
            raise ValueError(f"beta must lie in (0, 1/6), got {self.beta}")
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if any(a < 0 or a >= 2 / 3 for a in self.alpha):
            raise ValueError("alpha values must lie in [0, 2/3)")

    def u_points(self, n: int) -> tuple[int, ...]:
        return tuple(sorted(set(self.u))) if self.u is not None else _default_points(n)

    def v_points(self, n: int) -> tuple[int, ...]:
        return tuple(sorted(set(self.v))) if self.v is not None else _default_points(n)

    def lambdas(self, n: int) -> tuple[int, ...]:
        """lambda_0, 2 lambda_0, ... up to floor(sqrt(n)) unless given explicitly."""
        if self.lam is not None:
            return tuple(sorted(set(self.lam)))
        out = []
        lam = LAMBDA_0
        while lam <= math.isqrt(n):
            out.append(lam)
            lam *= 2
        return tuple(out)


@dataclass(frozen=True, eq=False)
class FamilySpec:
    name: str
    members: tuple[MemberSpec, ...]
    class_params: ClassParams | None = None
    grids: GridSpec = field(default_factory=GridSpec)

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise ValueError(f"family {self.name!r} has no members")
        names = [m.name for m in self.members]
        if len(set(names)) != len(names):
            raise ValueError(f"family {self.name!r} has duplicate member names")

    def member(self, name: str) -> MemberSpec:
        for m in self.members:
            if m.name == name:
                return m
        raise KeyError(f"family {self.name!r} has no member {name!r}")

    def check_membership(self) -> list[tuple[str, int, MembershipVerdict]]:
        """Class verdict for every base law; empty when no class is declared."""
        if self.class_params is None:
            return []
        return [
            (m.name, i, check_class_membership(law, self.class_params))
            for m in self.members
            for i, law in enumerate(m.laws)
        ]

    def membership_failures(self) -> list[str]:
        """Notes for every member with a law outside the declared class.

        Tilted members are also checked on the step laws of their schedule at
        the largest grid n.
        """
        if self.class_params is None:
            return []
        failures = [
            f"member {name!r} law {i} outside the class" for name, i, verdict in self.check_membership() if not verdict.member
        ]
        n = max(self.grids.n, default=0)
        for m in self.members:
            if n == 0 or (m.tilts is None and m.profile is None):
                continue
            for law, _ in m.schedule(n).grouped():
                if not check_class_membership(law, self.class_params).member:
                    failures.append(f"member {m.name!r} has tilted step laws outside the class")
                    break
        return failures


def random_centered_law(rng: np.random.Generator, max_atom: int = 4, with_zero: bool | None = None) -> IncrementLaw:
    """Random lattice law with mean zero on atoms in [-max_atom, max_atom]."""
    if max_atom < 1:
        raise ValueError(f"max_atom must be >= 1, got {max_atom}")
    pool = np.arange(1, max_atom + 1)
    neg = -rng.choice(pool, size=int(rng.integers(1, min(3, max_atom) + 1)), replace=False)
    pos = rng.choice(pool, size=int(rng.integers(1, min(3, max_atom) + 1)), replace=False)
    w_neg = rng.uniform(0.1, 1.0, size=neg.size)
    w_pos = rng.uniform(0.1, 1.0, size=pos.size)
    w_pos *= float(np.dot(w_neg, -neg)) / float(np.dot(w_pos, pos))
    atoms: list[float] = [*neg.tolist(), *pos.tolist()]
    weights: list[float] = [*w_neg.tolist(), *w_pos.tolist()]
    if with_zero if with_zero is not None else bool(rng.random() < 0.5):
        atoms.append(0)
        weights.append(float(rng.uniform(0.1, 1.0)))
    return validate_law(atoms, weights)


def single_law_family(name: str, atoms: Sequence[int], weights: Sequence[float], grids: GridSpec | None = None) -> FamilySpec:
    law = validate_law(atoms, weights)
    return FamilySpec(name=name, members=(MemberSpec(name=name, laws=(law,)),), grids=grids or GridSpec())
