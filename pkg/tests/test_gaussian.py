from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from scipy import special

from inhomwalk.core_adapter import Band, Checkpoint
from inhomwalk.errors import NonPositiveArgumentError
from inhomwalk.gaussian import (
    GaussianSchedule,
    bridge_covariance,
    bridge_covariance_matrix,
    gaussian_checkpoint_prob,
    jacobi_theta,
    mc_gaussian_bridge_smallball,
    sample_gaussian_bridge,
    theta_small_z_check,
    theta_threshold,
)
from inhomwalk.montecarlo import derive_rng


def _theta_reference(z: float) -> float:
    with mpmath.workdps(30):
        return float(mpmath.jtheta(4, 0, mpmath.exp(-2 * mpmath.mpf(z) ** 2)))


def test_theta_at_half():
    assert jacobi_theta(0.5) == pytest.approx(0.036055, abs=1e-6)


@pytest.mark.parametrize("z", [0.2, 0.5, 0.9, 1.0, 1.7, 3.0])
def test_theta_matches_reference_series(z):
    assert jacobi_theta(z) == pytest.approx(_theta_reference(z), abs=1e-14)


@pytest.mark.parametrize("z", [0.8, 1.0, 1.3])
def test_theta_forms_agree(z):
    assert jacobi_theta(z, method="alternating") == pytest.approx(jacobi_theta(z, method="dual"), abs=1e-13)


def test_theta_tends_to_one():
    assert jacobi_theta(4.0) == pytest.approx(1.0 - 2.0 * math.exp(-32.0), abs=1e-15)


@pytest.mark.parametrize("z", [0.0, -1.0])
def test_theta_rejects_nonpositive(z):
    with pytest.raises(NonPositiveArgumentError):
        jacobi_theta(z)


def test_theta_small_z_bound():
    assert theta_small_z_check(0.3, 0.5)
    assert theta_small_z_check(2.0, 0.1)
    with pytest.raises(NonPositiveArgumentError):
        theta_small_z_check(0.3, 0.0)
    assert theta_threshold(0.5) > 0.0


def test_schedule_rejects_variance_above_cap():
    with pytest.raises(ValueError):
        GaussianSchedule(variances=(1.0, 2.0), sigma_plus=1.0)


def test_schedule_from_lattice(lazy_schedule):
    gsched = GaussianSchedule.from_schedule(lazy_schedule(4))
    assert gsched.variances == (0.5, 0.5, 0.5, 0.5)
    assert gsched.sigma_plus == pytest.approx(math.sqrt(0.5))
    assert gsched.partial_vars[-1] == pytest.approx(2.0)


def test_bridge_covariance():
    b = [0.0, 1.0, 2.0, 3.0, 4.0]
    assert bridge_covariance(b, 1, 2) == pytest.approx(0.5)
    assert bridge_covariance(b, 2, 1) == pytest.approx(0.5)
    assert bridge_covariance(b, 2, 4) == 0.0
    matrix = bridge_covariance_matrix(b)
    assert np.allclose(matrix, matrix.T)
    assert np.allclose(np.diag(matrix), [0.75, 1.0, 0.75, 0.0])


def test_bridge_sampler_pins_endpoint_and_matches_covariance():
    gsched = GaussianSchedule(variances=(1.0,) * 8, sigma_plus=1.0)
    paths = sample_gaussian_bridge(gsched, 3.0, 20_000, derive_rng(0))
    assert paths.shape == (20_000, 9)
    assert np.all(paths[:, 0] == 0.0)
    assert np.all(paths[:, -1] == 3.0)
    assert paths[:, 4].mean() == pytest.approx(1.5, abs=0.1)
    assert paths[:, 4].var() == pytest.approx(bridge_covariance(gsched.partial_vars, 4, 4), abs=0.1)


def test_bridge_smallball_above_continuum_limit():
    gsched = GaussianSchedule(variances=(1.0,) * 64, sigma_plus=1.0)
    est = mc_gaussian_bridge_smallball(gsched, 0.0, 1.0, samples=10_000, seed=3)
    assert 0.0 <= est.value <= 1.0
    assert est.value + 3 * est.stderr >= jacobi_theta(1.0)


def test_bridge_smallball_needs_samples():
    gsched = GaussianSchedule(variances=(1.0,) * 4, sigma_plus=1.0)
    with pytest.raises(ValueError):
        mc_gaussian_bridge_smallball(gsched, 0.0, 1.0, samples=100)


def test_checkpoint_prob_without_constraints_is_one():
    gsched = GaussianSchedule(variances=(1.0,) * 4, sigma_plus=1.0)
    assert gaussian_checkpoint_prob(gsched, []).value == 1.0
    assert gaussian_checkpoint_prob(gsched, [Checkpoint(2, Band())]).value == 1.0


def test_checkpoint_prob_single_cell_range():
    gsched = GaussianSchedule(variances=(1.0,) * 4, sigma_plus=1.0)
    result = gaussian_checkpoint_prob(gsched, [Checkpoint(4, Band(-1.0, 1.0))])
    expected = special.ndtr(0.75) - special.ndtr(-0.75)
    assert result.method == "quadrature"
    assert result.value == pytest.approx(expected, abs=1e-12)


def test_checkpoint_prob_quadrature_agrees_with_monte_carlo():
    gsched = GaussianSchedule(variances=(1.0,) * 4, sigma_plus=1.0)
    checkpoints = [Checkpoint(2, Band(-1.0, 1.0)), Checkpoint(4, Band(-2.0, 2.0))]
    quad = gaussian_checkpoint_prob(gsched, checkpoints)
    mc = gaussian_checkpoint_prob(gsched, checkpoints, method="montecarlo", samples=200_000, seed=1)
    assert mc.method == "montecarlo"
    assert abs(quad.value - mc.value) <= 5 * mc.stderr + 1e-3


def test_checkpoint_time_out_of_range():
    gsched = GaussianSchedule(variances=(1.0,) * 4, sigma_plus=1.0)
    with pytest.raises(ValueError):
        gaussian_checkpoint_prob(gsched, [Checkpoint(5, Band(-1.0, 1.0))])
