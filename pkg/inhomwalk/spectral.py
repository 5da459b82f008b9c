"""Characteristic functions and the Gaussian local approximation.

Point probabilities computed here by Fourier inversion never touch the
dynamic program in :mod:`inhomwalk_core.engine`; the two are independent
oracles for the same number.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import integrate, special

from inhomwalk.core_adapter import (
    DegenerateScheduleError,
    IncrementLaw,
    PositionDistribution,
    StepSchedule,
    endpoint_distribution,
    log_mgf,
    solve_tilt_for_mean,
    tilt,
)
from inhomwalk.errors import OutOfRegimeError, QuadratureNonConvergenceError, ZeroProbabilityError

logger = logging.getLogger(__name__)

QUAD_EPSABS = 1e-13
QUAD_LIMIT = 500
QUAD_ACCEPT = 1e-11
_PANELS = 32

ProbabilitySource = Literal["dp", "fourier"]


class _CharfnTable:
    """Tilted laws of a schedule grouped by identity, for vectorised evaluation."""

    def __init__(self, schedule: StepSchedule, lam: float) -> None:
        self.groups: list[tuple[np.ndarray, np.ndarray, int]] = []
        for law, count in schedule.grouped():
            tilted = tilt(law, lam)
            self.groups.append((tilted.atoms, tilted.probs, count))

    def log_polar(self, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """log|phi| and arg(phi) of the product, summed per law group."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        log_mod = np.zeros(theta.shape)
        arg = np.zeros(theta.shape)
        with np.errstate(divide="ignore"):
            for atoms, probs, count in self.groups:
                phi = probs @ np.exp(1j * np.outer(atoms, theta))
                log_mod += count * np.log(np.abs(phi))
                arg += count * np.angle(phi)
        return log_mod, arg


def charfn_product(schedule: StepSchedule, lam: float, theta: float) -> complex:
    """prod_i M_i(lam + i theta) / M_i(lam)."""
    if theta == 0:
        return complex(1.0, 0.0)
    log_mod, arg = _CharfnTable(schedule, lam).log_polar(np.array([theta]))
    return complex(math.exp(log_mod[0]) * math.cos(arg[0]), math.exp(log_mod[0]) * math.sin(arg[0]))


def _breakpoints(schedule: StepSchedule) -> list[float]:
    points = set(np.linspace(0.0, math.pi, _PANELS + 1)[1:-1].tolist())
    variance = schedule.variance
    if variance > 0:
        theta_c = min(math.pi, 10.0 / math.sqrt(variance))
        points.update(theta_c * f for f in (0.125, 0.25, 0.5, 1.0))
    span = schedule.span() if schedule.is_lattice else 0
    for j in range(1, span // 2 + 1):
        points.add(2 * math.pi * j / span)
    return sorted(p for p in points if 0.0 < p < math.pi)


def _invert(table: _CharfnTable, schedule: StepSchedule, y: int) -> float:
    def integrand(theta: float) -> float:
        log_mod, arg = table.log_polar(np.array([theta]))
        if not math.isfinite(log_mod[0]):
            return 0.0
        return math.exp(log_mod[0]) * math.cos(arg[0] - theta * y)

    res = integrate.quad(
        integrand,
        0.0,
        math.pi,
        points=_breakpoints(schedule),
        epsabs=QUAD_EPSABS,
        epsrel=0.0,
        limit=QUAD_LIMIT,
        full_output=1,
    )
    value, abserr = res[0], res[1]
    if len(res) > 3 and abserr > QUAD_ACCEPT:
        raise QuadratureNonConvergenceError(operation="fourier_point_prob", detail=f"y={y} abserr={abserr:.3e}")
    return max(0.0, value / math.pi)


def fourier_point_prob(schedule: StepSchedule, y: int) -> float:
    """P_0(S_n = y) by inversion of the characteristic function on [-pi, pi]."""
    if not schedule.is_lattice:
        raise ValueError("fourier_point_prob needs a lattice schedule")
    return _invert(_CharfnTable(schedule, 0.0), schedule, int(y))


def log_mgf_total(schedule: StepSchedule, lam: float) -> float:
    """H_n(lam) = sum_i ln M_i(lam)."""
    return math.fsum(count * log_mgf(law, lam) for law, count in schedule.grouped())


def tilt_identity_prob(schedule: StepSchedule, y: int) -> float:
    """P_0(S_n = y) = exp(H_n(lam) - lam y) P(S_n^lam = y) with H_n'(lam) = y."""
    lam = solve_tilt_for_mean(schedule, float(y))
    tilted_prob = fourier_point_prob(schedule.tilted(lam), y)
    if tilted_prob <= 0:
        return 0.0
    return math.exp(log_mgf_total(schedule, lam) - lam * y + math.log(tilted_prob))


@dataclass(frozen=True)
class LltReport:
    n: int
    y: int
    exact_prob: float
    gauss_approx: float
    ratio: float
    alpha: float
    envelope_exponent: float
    log_ratio: float

    def to_row(self) -> dict[str, float]:
        return {
            "n": self.n,
            "y": self.y,
            "alpha": self.alpha,
            "exactProb": self.exact_prob,
            "gaussApprox": self.gauss_approx,
            "ratio": self.ratio,
            "logRatio": self.log_ratio,
        }


def envelope_exponent(alpha: float) -> float:
    return min(2.0 - 3.0 * alpha, 1.0 / 3.0)


def llt_ratio(
    schedule: StepSchedule,
    y: int,
    alpha: float,
    *,
    source: ProbabilitySource = "dp",
    distribution: PositionDistribution | None = None,
) -> LltReport:
    """Exact P_0(S_n = y) against the Gaussian (2 pi B_n)^-1/2 exp(-(y - m_n)^2 / 2 B_n).

    ``distribution`` may carry a precomputed endpoint distribution of the
    schedule so a sweep over y runs the DP once.
    """
    n = schedule.n
    m, b = schedule.mean, schedule.variance
    if b <= 0:
        raise DegenerateScheduleError(steps=n)
    radius = n**alpha
    if abs(y - m) > radius + 1e-12:
        raise OutOfRegimeError(y=y, center=m, radius=radius)
    if source == "dp":
        dist = distribution if distribution is not None else endpoint_distribution(0, schedule)
        log_exact = dist.log_probability_at(int(y))
    elif source == "fourier":
        p = fourier_point_prob(schedule, y)
        log_exact = math.log(p) if p > 0 else -math.inf
    else:
        raise ValueError(f"unknown probability source={source!r}")
    if not math.isfinite(log_exact):
        raise ZeroProbabilityError(n=n, y=int(y))
    log_gauss = -0.5 * math.log(2 * math.pi * b) - (y - m) ** 2 / (2 * b)
    log_ratio = log_exact - log_gauss
    return LltReport(
        n=n,
        y=int(y),
        exact_prob=math.exp(log_exact),
        gauss_approx=math.exp(log_gauss),
        ratio=math.exp(log_ratio),
        alpha=alpha,
        envelope_exponent=envelope_exponent(alpha),
        log_ratio=log_ratio,
    )


def regime_points(schedule: StepSchedule, alpha: float) -> range:
    """Integers y with |y - m_n| <= n^alpha."""
    m, radius = schedule.mean, schedule.n**alpha
    return range(math.ceil(m - radius - 1e-12), math.floor(m + radius + 1e-12) + 1)


def llt_profile(schedule: StepSchedule, alpha: float) -> tuple[LltReport, ...]:
    """Every positive-probability point of the regime from one DP pass."""
    dist = endpoint_distribution(0, schedule)
    out = []
    for y in regime_points(schedule, alpha):
        try:
            out.append(llt_ratio(schedule, y, alpha, distribution=dist))
        except ZeroProbabilityError:
            continue
    return tuple(out)


def berry_esseen_distance(schedule: StepSchedule, C: float = 1.0) -> tuple[float, float]:
    """Kolmogorov distance of (S_n - m_n)/sqrt(B_n) to N(0, 1), and C A n / B_n^{3/2}.

    F jumps only at lattice points, so the supremum is attained at one of the
    one-sided limits F(z) and F(z-) of a jump point z.
    """
    b = schedule.variance
    if b <= 0:
        raise DegenerateScheduleError(steps=schedule.n)
    dist = endpoint_distribution(0, schedule)
    probs = dist.probabilities()
    z = (dist.positions - schedule.mean) / math.sqrt(b)
    upper = np.minimum(np.cumsum(probs), 1.0)
    lower = upper - probs
    phi = special.ndtr(z)
    ks = float(max(np.max(np.abs(upper - phi)), np.max(np.abs(lower - phi))))
    bound = C * schedule.max_third_moment() * schedule.n / b**1.5
    return ks, bound


def charfn_gap(schedule: StepSchedule, b: float, grid: int = 2048) -> float:
    """max over step laws of sup_{b <= |theta| <= pi} |M(i theta)|, on a grid."""
    if not 0 < b <= math.pi:
        raise ValueError(f"gap lower edge must lie in (0, pi], got {b}")
    theta = np.linspace(b, math.pi, grid)
    worst = 0.0
    for law, _ in schedule.grouped():
        worst = max(worst, _law_charfn_sup(law, theta))
    return worst


def _law_charfn_sup(law: IncrementLaw, theta: np.ndarray) -> float:
    return float(np.max(np.abs(law.probs @ np.exp(1j * np.outer(law.atoms, theta)))))
