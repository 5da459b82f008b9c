"""Envelope fitting: empirical constants for theorem-shaped bounds.

Inputs are sorted before fitting, so the fitted constants do not depend on
the order grid points were evaluated in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize

RATE_MAX = 1e3
RATE_ORDER_SLACK = 1e-9
LOG_CONTAIN_TOL = 1e-6
MONOTONE_SLACK = 1e-12
_RATE_PENALTY = 1e-9
_EXP_MAX = 709.0


@dataclass(frozen=True)
class RatioEnvelope:
    lower: float
    upper: float
    spread: float
    rows: int


def fit_ratio_envelope(values: Iterable[float]) -> RatioEnvelope:
    """c_- = min, c_+ = max; spread c_+/c_- (inf when c_- <= 0)."""
    arr = np.sort(np.asarray(list(values), dtype=float))
    if arr.size == 0:
        return RatioEnvelope(lower=math.nan, upper=math.nan, spread=math.nan, rows=0)
    lower, upper = float(arr[0]), float(arr[-1])
    spread = upper / lower if lower > 0 else math.inf
    return RatioEnvelope(lower=lower, upper=upper, spread=spread, rows=int(arr.size))


@dataclass(frozen=True)
class ExponentialEnvelope:
    """C_- exp(-k_- w) <= value <= C_+ exp(-k_+ w) with 0 <= k_+ <= k_-.

    The constants are held as logs: envelopes of probabilities far below the
    smallest double are still representable.
    """

    lower_log_const: float
    lower_rate: float
    upper_log_const: float
    upper_rate: float
    rows: int

    @property
    def lower_const(self) -> float:
        return _exp(self.lower_log_const)

    @property
    def upper_const(self) -> float:
        return _exp(self.upper_log_const)

    @property
    def spread(self) -> float:
        """C_+ / C_-."""
        return _exp(self.upper_log_const - self.lower_log_const)

    @property
    def admissible(self) -> bool:
        """Finite positive constants and rates ordered 0 <= k_+ <= k_-."""
        values = (self.lower_log_const, self.lower_rate, self.upper_log_const, self.upper_rate)
        return (
            self.rows > 0
            and all(math.isfinite(x) for x in values)
            and 0.0 <= self.upper_rate <= self.lower_rate + RATE_ORDER_SLACK
        )

    def log_bounds(self, w: float) -> tuple[float, float]:
        return self.lower_log_const - self.lower_rate * w, self.upper_log_const - self.upper_rate * w

    def bounds(self, w: float) -> tuple[float, float]:
        lo, hi = self.log_bounds(w)
        return _exp(lo), _exp(hi)

    def contains_log(self, log_value: float, w: float, tol: float = LOG_CONTAIN_TOL) -> bool:
        lo, hi = self.log_bounds(w)
        return lo - tol <= log_value <= hi + tol

    def contains(self, value: float, w: float, rel_tol: float = 1e-9) -> bool:
        return value > 0 and self.contains_log(math.log(value), w, tol=math.log1p(rel_tol))


def _exp(x: float) -> float:
    if math.isnan(x):
        return math.nan
    return math.exp(x) if x < _EXP_MAX else math.inf


def fit_exponential_envelope(values: Sequence[float], weights: Sequence[float]) -> ExponentialEnvelope:
    """Narrowest exponential envelope of positive ``values`` against ``weights`` w >= 0."""
    vals = np.asarray(list(values), dtype=float)
    if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
        raise ValueError("exponential envelopes need finite positive values")
    return fit_log_exponential_envelope(np.log(vals).tolist(), weights)


def fit_log_exponential_envelope(log_values: Sequence[float], weights: Sequence[float]) -> ExponentialEnvelope:
    """Exponential envelope fitted to ln value directly.

    Solved as one linear program in (ln C_-, ln C_+, k_-, k_+): the log-width
    ln(C_+/C_-) + (k_- - k_+) w is increasing in w, so minimising it at
    w_max bounds it over the whole grid.
    """
    if len(log_values) != len(weights):
        raise ValueError(f"{len(log_values)} values but {len(weights)} weights")
    if not log_values:
        return ExponentialEnvelope(math.nan, math.nan, math.nan, math.nan, 0)
    pairs = sorted(zip((float(v) for v in log_values), (float(w) for w in weights)), key=lambda p: (p[1], p[0]))
    logs = np.array([p[0] for p in pairs])
    w = np.array([p[1] for p in pairs])
    if not np.all(np.isfinite(logs)):
        raise ValueError("exponential envelopes need finite log values")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("envelope weights must be finite and >= 0")
    w_max = float(w[-1])
    rows = logs.size

    # x = [t_lo, t_hi, k_lo, k_hi]
    c = np.array([-1.0, 1.0, w_max + _RATE_PENALTY, -w_max + _RATE_PENALTY])
    a_lower = np.column_stack([np.ones(rows), np.zeros(rows), -w, np.zeros(rows)])
    a_upper = np.column_stack([np.zeros(rows), -np.ones(rows), np.zeros(rows), w])
    # k_+ <= k_- and C_- <= C_+
    a_order = np.array([[0.0, 0.0, -1.0, 1.0], [1.0, -1.0, 0.0, 0.0]])
    res = optimize.linprog(
        c,
        A_ub=np.vstack([a_lower, a_upper, a_order]),
        b_ub=np.concatenate([logs, -logs, [0.0, 0.0]]),
        bounds=[(None, None), (None, None), (0.0, RATE_MAX), (0.0, RATE_MAX)],
        method="highs",
    )
    if not res.success:
        # rates pinned to zero give the ratio envelope, which is always feasible
        t_lo, t_hi, k_lo, k_hi = float(logs.min()), float(logs.max()), 0.0, 0.0
    else:
        t_lo, t_hi, k_lo, k_hi = (float(x) for x in res.x)
    return ExponentialEnvelope(
        lower_log_const=t_lo,
        lower_rate=k_lo,
        upper_log_const=t_hi,
        upper_rate=k_hi,
        rows=rows,
    )


@dataclass(frozen=True)
class GrowthEnvelope:
    """One constant C with value <= C n^-exponent, tracked per n."""

    constant: float
    per_n: tuple[tuple[int, float], ...]
    sup_per_n: tuple[tuple[int, float], ...]
    growth: float
    monotone: bool

    def monotone_over(self, ns: Iterable[int]) -> bool:
        """Whether the per-n sup decreases along the given n values that were swept."""
        wanted = {int(n) for n in ns}
        sup = [(n, v) for n, v in self.sup_per_n if n in wanted]
        return all(b <= a + MONOTONE_SLACK for (_, a), (_, b) in zip(sup, sup[1:]))


def fit_growth_envelope(points: Iterable[tuple[int, float]], exponent: float) -> GrowthEnvelope:
    """C_n = max value * n^exponent per n; growth = max_n C_n / C_{n_min}."""
    by_n: dict[int, float] = {}
    for n, value in points:
        by_n[int(n)] = max(by_n.get(int(n), 0.0), float(value))
    ns = sorted(by_n)
    if not ns:
        return GrowthEnvelope(math.nan, (), (), math.nan, True)
    sup = tuple((n, by_n[n]) for n in ns)
    per_n = tuple((n, by_n[n] * n**exponent) for n in ns)
    constants = [c for _, c in per_n]
    first = constants[0]
    if first > 0:
        growth = max(constants) / first
    else:
        growth = 1.0 if max(constants) == 0 else math.inf
    monotone = all(b <= a + MONOTONE_SLACK for (_, a), (_, b) in zip(sup, sup[1:]))
    return GrowthEnvelope(max(constants), per_n, sup, growth, monotone)


@dataclass(frozen=True)
class LogLinearBound:
    """ln value <= log_const + sum_j sign_j rate_j feature_j, rates in [0, RATE_MAX]."""

    log_const: float
    rates: tuple[float, ...]
    max_gap: float
    rows: int


def fit_log_linear_upper(
    values: Sequence[float],
    features: Sequence[Sequence[float]],
    signs: Sequence[int],
) -> LogLinearBound:
    """Tightest (least total slack) one-sided log-linear upper bound.

    ``features`` holds one column per rate; ``signs`` says whether the rate
    enters with + or -.
    """
    if not values:
        return LogLinearBound(math.nan, tuple(math.nan for _ in signs), math.nan, 0)
    rows = sorted(zip((float(v) for v in values), *(tuple(map(float, col)) for col in features)))
    vals = np.array([r[0] for r in rows])
    if np.any(vals <= 0):
        raise ValueError("log-linear bounds need positive values")
    feats = np.array([r[1:] for r in rows], dtype=float).reshape(len(rows), len(signs))
    logs = np.log(vals)
    signed = feats * np.asarray(signs, dtype=float)
    k = len(rows)
    # minimise sum_k (a + signed_k . r - l_k) subject to each term >= 0
    c = np.concatenate([[float(k)], signed.sum(axis=0)])
    a_ub = -np.column_stack([np.ones(k), signed])
    res = optimize.linprog(
        c,
        A_ub=a_ub,
        b_ub=-logs,
        bounds=[(None, None)] + [(0.0, RATE_MAX)] * len(signs),
        method="highs",
    )
    if not res.success:
        a, rates = float(logs.max()), np.zeros(len(signs))
    else:
        a, rates = float(res.x[0]), np.asarray(res.x[1:], dtype=float)
    gaps = a + signed @ rates - logs
    return LogLinearBound(
        log_const=a,
        rates=tuple(float(r) for r in rates),
        max_gap=float(gaps.max()),
        rows=k,
    )
