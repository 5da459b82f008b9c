from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from inhomwalk_core import (
    ClassParams,
    StepSchedule,
    TiltSchedule,
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
from inhomwalk_core import laws as laws_module
from inhomwalk_core.errors import (
    DegenerateScheduleError,
    EmptySupportError,
    InvalidLawError,
    MomentHypothesisViolatedError,
    NegativeWeightError,
    NonIntegerAtomOnLatticeError,
    NotCenteredError,
    TargetOutOfRangeError,
    TiltNonConvergenceError,
)


@st.composite
def lattice_laws(draw, max_atoms: int = 5, span: int = 4):
    atoms = draw(st.lists(st.integers(-span, span), min_size=1, max_size=max_atoms, unique=True))
    weights = draw(
        st.lists(st.floats(0.05, 1.0), min_size=len(atoms), max_size=len(atoms))
    )
    return validate_law(atoms, weights)


def test_validate_law_normalizes(lazy):
    assert lazy.atoms.tolist() == [-1.0, 0.0, 1.0]
    assert lazy.probs.tolist() == [0.25, 0.5, 0.25]
    assert lazy.lattice


def test_validate_law_symmetric():
    law = validate_law([1, -1], [1, 1])
    assert law.atoms.tolist() == [-1.0, 1.0]
    assert law.probs.tolist() == [0.5, 0.5]


def test_validate_law_drops_zero_weight_atoms():
    law = validate_law([-2, 0, 3], [0.0, 1.0, 1.0])
    assert law.atoms.tolist() == [0.0, 3.0]


@pytest.mark.parametrize(
    ("atoms", "weights", "lattice", "error"),
    [
        ([0], [0], True, EmptySupportError),
        ([], [], True, EmptySupportError),
        ([0, 1], [1, -0.5], True, NegativeWeightError),
        ([0.5, 1], [1, 1], True, NonIntegerAtomOnLatticeError),
        ([0, 0], [1, 1], True, InvalidLawError),
        ([0, 1], [1, math.nan], True, InvalidLawError),
        ([0, math.inf], [1, 1], False, InvalidLawError),
        ([0, 1], [1], True, InvalidLawError),
    ],
)
def test_validate_law_rejects(atoms, weights, lattice, error):
    with pytest.raises(error):
        validate_law(atoms, weights, lattice)


def test_laws_are_immutable(lazy):
    with pytest.raises(ValueError):
        lazy.probs[0] = 1.0


def test_moments_of_lazy_walk(lazy):
    assert moment(lazy, "mean") == 0.0
    assert moment(lazy, "variance") == 0.5
    assert moment(lazy, "positive_part") == 0.25
    assert moment(lazy, "abs_p", 3) == pytest.approx(0.5)
    assert moment(lazy, "raw_p", 4) == pytest.approx(0.5)


def test_moment_rejects_small_order(lazy):
    with pytest.raises(ValueError):
        moment(lazy, "abs_p", 0.5)


@given(lattice_laws())
def test_centered_law_has_zero_mean(law):
    assert moment(center(law), "mean") == pytest.approx(0.0, abs=1e-12)


def test_log_mgf_lazy_closed_forms(lazy):
    assert log_mgf(lazy, 0.0, 0) == 0.0
    z = 2 * math.atanh(0.2)
    assert log_mgf(lazy, z, 1) == pytest.approx(0.2, rel=1e-12)
    assert log_mgf(lazy, 0.0, 2) == pytest.approx(0.5, rel=1e-14)
    assert log_mgf(lazy, 1.3, 0) == pytest.approx(math.log((math.cosh(1.3) + 1) / 2), rel=1e-13)


def test_log_mgf_does_not_overflow(lazy):
    assert log_mgf(lazy, 800.0, 0) == pytest.approx(800.0 + math.log(0.25), rel=1e-12)
    assert log_mgf(lazy, 800.0, 1) == pytest.approx(1.0)


def test_class_membership_lazy_member(lazy):
    params = ClassParams(delta0=1.0, c0=2.0, minorant={-1: 0.1, 0: 0.1, 1: 0.1})
    verdict = check_class_membership(lazy, params)
    assert verdict.member
    assert verdict.mgf_plus == pytest.approx((math.cosh(1) + 1) / 2, rel=1e-12)
    assert verdict.mgf_minus == pytest.approx(1.2715, abs=1e-4)


def test_class_membership_missing_atom(lazy):
    verdict = check_class_membership(lazy, ClassParams(delta0=1.0, c0=2.0, minorant={2: 0.1}))
    assert not verdict.member
    assert verdict.failing_atom == 2
    assert verdict.failing_t is None


def test_class_membership_mgf_cap(lazy):
    verdict = check_class_membership(lazy, ClassParams(delta0=3.0, c0=2.0))
    assert not verdict.member
    assert verdict.failing_t == -3.0


def test_class_membership_zero_radius(lazy):
    assert check_class_membership(lazy, ClassParams(delta0=0.0, c0=1.01)).member
    assert not check_class_membership(lazy, ClassParams(delta0=0.0, c0=1.01, minorant={0: 0.9})).member


@given(
    lattice_laws(),
    st.floats(0.0, 2.0),
    st.floats(1.01, 5.0),
    st.floats(0.0, 0.3),
    st.floats(0.0, 1.0),
    st.floats(1.0, 3.0),
)
def test_class_membership_is_monotone(law, delta0, c0, floor, shrink, enlarge):
    params = ClassParams(delta0=delta0, c0=c0, minorant={0: floor, 1: floor / 2})
    if not check_class_membership(law, params).member:
        return
    relaxed = ClassParams(
        delta0=delta0 * shrink,
        c0=c0 * enlarge,
        minorant={0: floor * shrink, 1: floor * shrink / 2},
    )
    assert check_class_membership(law, relaxed).member


def test_class_params_validation():
    with pytest.raises(ValueError):
        ClassParams(delta0=1.0, c0=1.0)
    with pytest.raises(ValueError):
        ClassParams(delta0=-1.0, c0=2.0)
    with pytest.raises(ValueError):
        ClassParams(delta0=1.0, c0=2.0, minorant={0: 1.5})


def test_minorant_periodicity():
    params = ClassParams(delta0=1.0, c0=2.0, minorant={-1: 0.1, 0: 0.1, 1: 0.1})
    assert params.minorant_periodicity() == (True, True)
    assert ClassParams(delta0=1.0, c0=2.0).minorant_periodicity() == (False, False)


@pytest.mark.parametrize(
    ("atoms", "expected"),
    [
        ([-1, 1], (True, False)),
        ([-1, 0, 1], (True, True)),
        ([1, 2], (False, True)),
        ([-2, 2], (False, False)),
        ([-2, 3], (True, False)),
        ([0], (False, False)),
    ],
)
def test_check_periodicity(atoms, expected):
    law = validate_law(atoms, [1] * len(atoms))
    irreducible, aperiodic = check_periodicity(law)
    assert (irreducible, aperiodic) == expected


def test_tilt_zero_is_identity(lazy):
    assert tilt(lazy, 0.0) is lazy


def test_tilt_lazy_ln2(lazy):
    tilted = tilt(lazy, math.log(2))
    assert tilted.atoms.tolist() == [-1.0, 0.0, 1.0]
    np.testing.assert_allclose(tilted.probs, [1 / 9, 4 / 9, 4 / 9], rtol=1e-14)


@given(lattice_laws(), st.floats(-2, 2), st.floats(-2, 2))
def test_tilt_composes(law, s, t):
    np.testing.assert_allclose(tilt(tilt(law, s), t).probs, tilt(law, s + t).probs, atol=1e-14)


@given(lattice_laws(), st.floats(-3, 3))
def test_tilt_mean_is_log_mgf_derivative(law, t):
    tilted = tilt(law, t)
    assert tilted.atoms.tolist() == law.atoms.tolist()
    assert moment(tilted, "mean") == pytest.approx(log_mgf(law, t, 1), abs=1e-12)
    assert np.all(tilted.probs > 0)


def test_tilt_schedule_profiles(lazy):
    sched = TiltSchedule.from_profile(lazy, 32, kind="sine", amplitude=0.3, period=8)
    assert len(sched) == 32
    assert max(abs(t) for t in sched.tilts) <= 0.3
    steps = sched.to_schedule()
    assert steps.n == 32
    assert steps.laws[0].mean == pytest.approx(math.tanh(sched.tilts[0] / 2))


def test_tilt_schedule_interval_enforced(lazy):
    with pytest.raises(ValueError):
        TiltSchedule(base=(lazy,), tilts=(0.1, 0.5), interval=(-0.2, 0.2))


def test_solve_tilt_centered_target(lazy):
    assert solve_tilt_for_mean(StepSchedule.homogeneous(lazy, 12), 0.0) == 0.0


def test_solve_tilt_lazy_closed_form(lazy):
    lam = solve_tilt_for_mean(StepSchedule.homogeneous(lazy, 10), 2.0, tol=1e-12)
    assert lam == pytest.approx(2 * math.atanh(0.2), rel=1e-9)


def test_solve_tilt_out_of_range(lazy):
    with pytest.raises(TargetOutOfRangeError):
        solve_tilt_for_mean(StepSchedule.homogeneous(lazy, 10), 11.0)
    with pytest.raises(TargetOutOfRangeError):
        solve_tilt_for_mean(StepSchedule.homogeneous(lazy, 1), 1.0)


def test_solve_tilt_degenerate():
    point = validate_law([1], [1])
    with pytest.raises(DegenerateScheduleError):
        solve_tilt_for_mean(StepSchedule.homogeneous(point, 4), 4.0)


def test_solve_tilt_raises_when_bracket_collapses(lazy, monkeypatch):
    # a mean curve that jumps over the target has no root to converge to
    def jump(groups, lam):
        return (-1.0 if lam < 0.5 else 1.0), 0.0

    monkeypatch.setattr(laws_module, "_mean_and_variance", jump)
    with pytest.raises(TiltNonConvergenceError) as info:
        solve_tilt_for_mean(StepSchedule.homogeneous(lazy, 10), 0.0)
    assert info.value.residual == pytest.approx(1.0)
    assert info.value.lam == pytest.approx(0.5)


@settings(max_examples=50)
@given(st.lists(lattice_laws(), min_size=1, max_size=6), st.floats(0.05, 0.95))
def test_solve_tilt_round_trip(laws, fraction):
    schedule = StepSchedule(tuple(laws))
    lower = sum(law.min_atom for law in laws)
    upper = sum(law.max_atom for law in laws)
    if upper - lower < 1:
        return
    target = lower + fraction * (upper - lower)
    lam = solve_tilt_for_mean(schedule, target, tol=1e-9)
    assert schedule.tilted(lam).mean == pytest.approx(target, abs=1e-8)


def test_truncation_worked_example():
    law = validate_law([10, -1, 0], [0.01, 0.1, 0.89], lattice=True)
    result = truncate_couple(law, K=5, alpha=4, A=100.1)
    assert result.atom_value == pytest.approx(62.5, rel=1e-14)
    assert result.bernoulli_param == pytest.approx(0.0016, rel=1e-14)
    assert result.mismatch_bound == pytest.approx(101.1 / 625, rel=1e-14)
    assert moment(result.truncated, "mean") == pytest.approx(0.0, abs=1e-12)
    assert not result.truncated.lattice
    assert result.all_hold


def test_truncation_symmetric_tail_cancels():
    law = validate_law([-10, 0, 10], [0.01, 0.98, 0.01])
    result = truncate_couple(law, K=5, alpha=4, A=200.0)
    assert result.atom_value == 0.0
    assert result.truncated.atoms.tolist() == [0.0]
    assert result.all_hold


def test_truncation_without_tail(lazy):
    result = truncate_couple(lazy, K=2, alpha=3, A=1.0)
    assert result.atom_value == 0.0
    assert result.truncated.probs.tolist() == pytest.approx(lazy.probs.tolist())
    assert result.mismatch_prob == 0.0
    assert result.mismatch_prob <= 2.0 ** -3


def test_truncation_hypotheses():
    shifted = validate_law([0, 2], [1, 1])
    with pytest.raises(NotCenteredError):
        truncate_couple(shifted, K=2, alpha=3, A=10)
    law = validate_law([-10, 0, 10], [0.01, 0.98, 0.01])
    with pytest.raises(MomentHypothesisViolatedError):
        truncate_couple(law, K=5, alpha=4, A=10.0)


def test_growing_jump_law():
    law = growing_jump_law(1)
    assert law.atoms.tolist() == [-2.0, 0.0, 2.0]
    assert law.probs.tolist() == pytest.approx([0.125, 0.75, 0.125])
    assert moment(law, "variance") == pytest.approx(1.0)
