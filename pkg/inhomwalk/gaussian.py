"""Gaussian reference quantities for the lattice estimates.

Covers the Jacobi theta function (the law of the sup of a Brownian bridge),
Gaussian bridge covariances and sampling, and checkpoint probabilities for a
Gaussian walk whose increments share the means and variances of a lattice
schedule.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy import special, stats

from inhomwalk.core_adapter import Checkpoint, StepSchedule
from inhomwalk.errors import NonPositiveArgumentError, QuadratureNonConvergenceError
from inhomwalk.montecarlo import McEstimate, derive_rng

logger = logging.getLogger(__name__)

THETA_TERM_FLOOR = 1e-16
DUAL_FORM_BELOW = 1.0
QUADRATURE_MAX_CHECKPOINTS = 8
QUADRATURE_RTOL = 1e-4
_NODE_LADDER = (4, 8, 16, 32, 64)
_WINDOW_SD = 9.0
_CHUNK = 4096

ThetaMethod = Literal["auto", "alternating", "dual"]
CheckpointMethod = Literal["auto", "quadrature", "montecarlo"]


def jacobi_theta(z: float, method: ThetaMethod = "auto") -> float:
    """Theta_J(z) = sum_k (-1)^k exp(-2 z^2 k^2) = P(sup |bridge| <= z).

    The alternating form cancels badly for small z; there the dual form
    sqrt(2 pi)/z sum_k exp(-(2k-1)^2 pi^2 / (8 z^2)) is used.
    """
    if not z > 0:
        raise NonPositiveArgumentError(name="z", value=z)
    if method == "auto":
        method = "dual" if z < DUAL_FORM_BELOW else "alternating"
    terms: list[float] = []
    k = 1
    if method == "alternating":
        while True:
            term = math.exp(-2.0 * z * z * k * k)
            if term < THETA_TERM_FLOOR:
                break
            terms.append(-2.0 * term if k % 2 else 2.0 * term)
            k += 1
        return math.fsum([1.0, *terms])
    if method == "dual":
        scale = math.pi * math.pi / (8.0 * z * z)
        while True:
            term = math.exp(-((2 * k - 1) ** 2) * scale)
            # relative floor: the leading term itself can be far below 1e-16
            if term == 0.0 or (terms and term < THETA_TERM_FLOOR * terms[0]):
                break
            terms.append(term)
            k += 1
        return math.sqrt(2.0 * math.pi) / z * math.fsum(terms)
    raise ValueError(f"unknown theta method={method!r}")


def theta_small_z_check(z: float, epsilon: float) -> bool:
    """Theta_J(z) >= exp(-(1 + epsilon) pi^2 / (8 z^2))."""
    if not z > 0:
        raise NonPositiveArgumentError(name="z", value=z)
    if not epsilon > 0:
        raise NonPositiveArgumentError(name="epsilon", value=epsilon)
    return jacobi_theta(z) >= math.exp(-(1.0 + epsilon) * math.pi**2 / (8.0 * z * z))


def theta_threshold(epsilon: float, z_lo: float = 0.05, z_hi: float = 3.0, grid: int = 600) -> float:
    """Largest grid z such that the small-z inequality holds on [z_lo, z]; 0.0 if it fails at z_lo."""
    zs = np.linspace(z_lo, z_hi, grid)
    holds = np.array([theta_small_z_check(float(z), epsilon) for z in zs])
    if holds.all():
        return float(z_hi)
    first_fail = int(np.argmin(holds))
    return float(zs[first_fail - 1]) if first_fail > 0 else 0.0


@dataclass(frozen=True)
class GaussianSchedule:
    """Independent N(means_i, variances_i) increments, variances capped by sigma_plus^2."""

    variances: tuple[float, ...]
    sigma_plus: float
    means: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "variances", tuple(float(v) for v in self.variances))
        if not self.variances:
            raise ValueError("Gaussian schedule needs at least one step")
        cap = self.sigma_plus**2 * (1 + 1e-12)
        for i, v in enumerate(self.variances, start=1):
            if not 0 < v <= cap:
                raise ValueError(f"variance sigma_{i}^2={v} outside (0, {self.sigma_plus}^2]")
        if self.means is not None:
            object.__setattr__(self, "means", tuple(float(m) for m in self.means))
            if len(self.means) != len(self.variances):
                raise ValueError("means and variances must have the same length")

    @classmethod
    def from_schedule(cls, schedule: StepSchedule, sigma_plus: float | None = None) -> "GaussianSchedule":
        variances = tuple(law.variance for law in schedule.laws)
        cap = sigma_plus if sigma_plus is not None else math.sqrt(max(variances))
        return cls(variances=variances, sigma_plus=cap, means=tuple(law.mean for law in schedule.laws))

    @property
    def n(self) -> int:
        return len(self.variances)

    @property
    def partial_vars(self) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum(self.variances)))

    @property
    def partial_means(self) -> np.ndarray:
        if self.means is None:
            return np.zeros(self.n + 1)
        return np.concatenate(([0.0], np.cumsum(self.means)))


def bridge_covariance(partial_vars: Sequence[float], i: int, j: int) -> float:
    """Cov(S_i, S_j | S_n) = B_i (B_n - B_j) / B_n for i <= j."""
    b = np.asarray(partial_vars, dtype=float)
    n = b.size - 1
    if i > j:
        i, j = j, i
    if not 0 <= i <= j <= n:
        raise ValueError(f"indices ({i}, {j}) outside 0..{n}")
    if b[n] <= 0:
        raise ValueError("bridge covariance needs B_n > 0")
    return float(b[i] * (b[n] - b[j]) / b[n])


def bridge_covariance_matrix(partial_vars: Sequence[float]) -> np.ndarray:
    """Covariance of (S_1, ..., S_n) given S_n, as an n x n matrix."""
    b = np.asarray(partial_vars, dtype=float)
    if b[-1] <= 0:
        raise ValueError("bridge covariance needs B_n > 0")
    inner = b[1:]
    return np.minimum.outer(inner, inner) * (b[-1] - np.maximum.outer(inner, inner)) / b[-1]


def sample_gaussian_bridge(
    gsched: GaussianSchedule, x: float, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Centered Gaussian paths from 0 pinned at S_n = x, shape (count, n + 1)."""
    n = gsched.n
    b = gsched.partial_vars
    out = np.empty((count, n + 1))
    out[:, 0] = 0.0
    s = np.zeros(count)
    for i in range(1, n):
        var_i = gsched.variances[i - 1]
        remaining = b[n] - b[i - 1]
        mean = s + var_i / remaining * (x - s)
        sd = math.sqrt(max(var_i * (remaining - var_i) / remaining, 0.0))
        s = mean + sd * rng.standard_normal(count)
        out[:, i] = s
    out[:, n] = x
    return out


def mc_gaussian_bridge_smallball(
    gsched: GaussianSchedule,
    x: float,
    s: float,
    samples: int = 100_000,
    seed: int = 0,
) -> McEstimate:
    """P(max_i d(S_i, [0, x]) <= s sqrt(n) | S_n = x) by exact bridge sampling."""
    if samples < 10_000:
        raise ValueError(f"bridge small-ball estimate needs >= 10000 samples, got {samples}")
    rng = derive_rng(seed)
    width = s * math.sqrt(gsched.n)
    lo, hi = min(0.0, x), max(0.0, x)
    hits = 0
    done = 0
    while done < samples:
        count = min(_CHUNK, samples - done)
        paths = sample_gaussian_bridge(gsched, x, count, rng)
        dist = np.maximum(np.maximum(lo - paths, paths - hi), 0.0)
        hits += int(np.count_nonzero(dist.max(axis=1) <= width))
        done += count
    value = hits / samples
    return McEstimate(
        value=value,
        stderr=_binomial_stderr(value, samples),
        samples=samples,
        seed=seed,
        accepted_fraction=1.0,
    )


def _binomial_stderr(p: float, samples: int) -> float:
    return math.sqrt(p * (1 - p) / (samples - 1)) if samples > 1 else 0.0


@dataclass(frozen=True)
class GaussianCheckpointResult:
    value: float
    stderr: float
    method: Literal["quadrature", "montecarlo"]


def _active(checkpoints: Sequence[Checkpoint]) -> list[Checkpoint]:
    out = []
    for ck in checkpoints:
        if ck.inc_cap is None and ck.cells() == (None, None):
            continue
        out.append(ck)
    return out


def _candidate_cells(ck: Checkpoint, pos: np.ndarray, prev_cells: np.ndarray, drift: float, sd: float) -> np.ndarray:
    lo = math.floor(float(pos.min()) + drift - _WINDOW_SD * sd)
    hi = math.ceil(float(pos.max()) + drift + _WINDOW_SD * sd)
    c_lo, c_hi = ck.cells()
    if c_lo is not None:
        lo = max(lo, c_lo)
    if c_hi is not None:
        hi = min(hi, c_hi)
    if ck.inc_cap is not None:
        lo = max(lo, math.ceil(float(prev_cells.min()) + ck.inc_shift - ck.inc_cap - 1e-9))
        hi = min(hi, math.floor(float(prev_cells.max()) + ck.inc_shift + ck.inc_cap + 1e-9))
    if lo > hi:
        return np.empty(0, dtype=np.int64)
    cells = np.arange(lo, hi + 1, dtype=np.int64)
    return cells[ck.admits(cells)]


def _cap_mask(ck: Checkpoint, prev_cells: np.ndarray, cells: np.ndarray) -> np.ndarray:
    if ck.inc_cap is None:
        return np.ones((prev_cells.size, cells.size), dtype=bool)
    gap = cells[None, :] - prev_cells[:, None] - ck.inc_shift
    return np.abs(gap) <= ck.inc_cap + 1e-9


def _chained_quadrature(gsched: GaussianSchedule, active: list[Checkpoint], u: int, nodes: int) -> float:
    b, m = gsched.partial_vars, gsched.partial_means
    t, w = np.polynomial.legendre.leggauss(nodes)
    t, w = t / 2.0, w / 2.0
    pos = np.array([float(u)])
    weight = np.array([1.0])
    prev_cells = np.array([int(u)], dtype=np.int64)
    prev_time = 0
    for idx, ck in enumerate(active):
        sd = math.sqrt(b[ck.time] - b[prev_time])
        drift = float(m[ck.time] - m[prev_time])
        cells = _candidate_cells(ck, pos, prev_cells, drift, sd)
        if cells.size == 0:
            return 0.0
        mask = _cap_mask(ck, prev_cells, cells)
        offset = pos[:, None] + drift
        if idx == len(active) - 1:
            upper = special.ndtr((cells[None, :] + 0.5 - offset) / sd)
            lower = special.ndtr((cells[None, :] - 0.5 - offset) / sd)
            return float(weight @ ((upper - lower) * mask).sum(axis=1))
        new_pos = (cells[:, None] + t[None, :]).ravel()
        dens = stats.norm.pdf(new_pos[None, :] - offset, scale=sd) * np.repeat(mask, nodes, axis=1)
        new_weight = (weight @ dens) * np.tile(w, cells.size)
        keep = new_weight > 0
        if not keep.any():
            return 0.0
        pos, weight = new_pos[keep], new_weight[keep]
        prev_cells = np.repeat(cells, nodes)[keep]
        prev_time = ck.time
    raise AssertionError("unreachable")


def _checkpoint_monte_carlo(
    gsched: GaussianSchedule, active: list[Checkpoint], u: int, samples: int, seed: int
) -> GaussianCheckpointResult:
    rng = derive_rng(seed)
    b, m = gsched.partial_vars, gsched.partial_means
    hits = 0
    done = 0
    while done < samples:
        count = min(_CHUNK * 4, samples - done)
        pos = np.full(count, float(u))
        prev_cells = np.full(count, int(u), dtype=np.int64)
        ok = np.ones(count, dtype=bool)
        prev_time = 0
        for ck in active:
            sd = math.sqrt(b[ck.time] - b[prev_time])
            pos = pos + float(m[ck.time] - m[prev_time]) + sd * rng.standard_normal(count)
            cells = np.floor(pos + 0.5).astype(np.int64)
            ok &= ck.admits(cells)
            if ck.inc_cap is not None:
                ok &= np.abs(cells - prev_cells - ck.inc_shift) <= ck.inc_cap + 1e-9
            prev_cells = cells
            prev_time = ck.time
        hits += int(np.count_nonzero(ok))
        done += count
    value = hits / samples
    return GaussianCheckpointResult(value=value, stderr=_binomial_stderr(value, samples), method="montecarlo")


def gaussian_checkpoint_prob(
    gsched: GaussianSchedule,
    checkpoints: Sequence[Checkpoint],
    u: int = 0,
    *,
    method: CheckpointMethod = "auto",
    samples: int = 100_000,
    seed: int = 0,
) -> GaussianCheckpointResult:
    """P(G_{L_i} lands in a unit cell of I_i, capped cell increments) for the Gaussian walk.

    G starts at u; a checkpoint set {x} becomes the cell [x - 1/2, x + 1/2],
    a Band becomes the union of the cells of its lattice points, and caps act
    on the cell centres. Up to ``QUADRATURE_MAX_CHECKPOINTS`` active
    checkpoints are integrated with Gauss-Legendre nodes per cell, the node
    count doubling until two successive values agree to ``QUADRATURE_RTOL``.
    """
    active = _active(checkpoints)
    for ck in active:
        if not 0 < ck.time <= gsched.n:
            raise ValueError(f"checkpoint time {ck.time} outside 1..{gsched.n}")
    if not active:
        return GaussianCheckpointResult(value=1.0, stderr=0.0, method="quadrature")
    if method == "auto":
        method = "quadrature" if len(active) <= QUADRATURE_MAX_CHECKPOINTS else "montecarlo"
    if method == "montecarlo":
        return _checkpoint_monte_carlo(gsched, active, u, samples, seed)
    if method != "quadrature":
        raise ValueError(f"unknown checkpoint method={method!r}")

    previous = None
    for nodes in _NODE_LADDER:
        value = _chained_quadrature(gsched, active, u, nodes)
        if previous is not None and abs(value - previous) <= QUADRATURE_RTOL * max(abs(value), 1e-300):
            logger.debug("[Gaussian][checkpoint] nodes=%s value=%.6e", nodes, value)
            return GaussianCheckpointResult(value=value, stderr=0.0, method="quadrature")
        previous = value
    raise QuadratureNonConvergenceError(
        operation="gaussian_checkpoint_prob",
        detail=f"no agreement within rtol={QUADRATURE_RTOL} up to {_NODE_LADDER[-1]} nodes per cell",
    )
