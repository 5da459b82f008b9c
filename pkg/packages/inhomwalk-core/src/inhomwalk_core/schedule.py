from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, reduce
from typing import Sequence

import numpy as np

from inhomwalk_core.laws import IncrementLaw, lattice_span, tilt


@dataclass(frozen=True, eq=False)
class StepSchedule:
    """Laws of steps 1..n with cached partial means m_i and variances B_i.

    ``partial_means[i]`` is m_i = E(S_{1,i}); index 0 holds m_0 = 0, and the
    same layout is used for ``partial_vars``.
    """

    laws: tuple[IncrementLaw, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "laws", tuple(self.laws))
        if not self.laws:
            raise ValueError("schedule needs at least one step")

    @classmethod
    def homogeneous(cls, law: IncrementLaw, n: int) -> "StepSchedule":
        if n < 1:
            raise ValueError(f"schedule length must be >= 1, got {n}")
        return cls((law,) * n)

    @classmethod
    def cycle(cls, laws: Sequence[IncrementLaw], n: int) -> "StepSchedule":
        if n < 1 or not laws:
            raise ValueError("cycled schedule needs laws and n >= 1")
        return cls(tuple(laws[k % len(laws)] for k in range(n)))

    @property
    def n(self) -> int:
        return len(self.laws)

    def __len__(self) -> int:
        return len(self.laws)

    @cached_property
    def is_lattice(self) -> bool:
        return all(law.lattice for law in self.laws)

    @cached_property
    def partial_means(self) -> np.ndarray:
        out = np.concatenate(([0.0], np.cumsum([law.mean for law in self.laws])))
        out.setflags(write=False)
        return out

    @cached_property
    def partial_vars(self) -> np.ndarray:
        out = np.concatenate(([0.0], np.cumsum([law.variance for law in self.laws])))
        out.setflags(write=False)
        return out

    @property
    def mean(self) -> float:
        return float(self.partial_means[-1])

    @property
    def variance(self) -> float:
        return float(self.partial_vars[-1])

    def grouped(self) -> tuple[tuple[IncrementLaw, int], ...]:
        """Distinct law objects with multiplicities, in order of first use."""
        counts: dict[int, list] = {}
        for law in self.laws:
            entry = counts.setdefault(id(law), [law, 0])
            entry[1] += 1
        return tuple((law, count) for law, count in counts.values())

    def segment(self, start: int, stop: int) -> "StepSchedule":
        """Steps start+1..stop as a schedule of their own."""
        if not 0 <= start < stop <= self.n:
            raise ValueError(f"invalid segment ({start}, {stop}] of a {self.n}-step schedule")
        return StepSchedule(self.laws[start:stop])

    def tilted(self, lam: float) -> "StepSchedule":
        if lam == 0:
            return self
        cache: dict[int, IncrementLaw] = {}
        out = []
        for law in self.laws:
            key = id(law)
            if key not in cache:
                cache[key] = tilt(law, lam)
            out.append(cache[key])
        return StepSchedule(tuple(out))

    def span(self) -> int:
        """gcd of per-step atom differences; S_n - sum(min atoms) is a multiple of it."""
        return reduce(math.gcd, (lattice_span(law.int_atoms) for law, _ in self.grouped()), 0)

    def max_third_moment(self) -> float:
        return max(
            float(np.dot(law.probs, np.abs(law.atoms - law.mean) ** 3)) for law, _ in self.grouped()
        )

    def max_variance(self) -> float:
        return max(law.variance for law, _ in self.grouped())

