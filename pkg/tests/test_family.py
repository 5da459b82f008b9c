from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from inhomwalk.core_adapter import ClassParams
from inhomwalk.harness import FamilySpec, GridSpec, MemberSpec, TiltProfile, random_centered_law
from inhomwalk.harness.family import single_law_family


def test_member_cycles_laws(lazy, pm1):
    schedule = MemberSpec(name="alt", laws=(lazy, pm1)).schedule(5)
    assert schedule.laws == (lazy, pm1, lazy, pm1, lazy)


def test_member_with_tilts_moves_means(lazy):
    schedule = MemberSpec(name="tilted", laws=(lazy,), tilts=(0.3, -0.3)).schedule(4)
    means = [law.mean for law in schedule.laws]
    assert means[0] > 0 > means[1]
    assert means[0] == pytest.approx(means[2])


def test_member_with_profile(lazy):
    member = MemberSpec(name="sine", laws=(lazy,), profile=TiltProfile(kind="constant", amplitude=0.2))
    schedule = member.schedule(8)
    assert schedule.n == 8
    assert all(law.mean > 0 for law in schedule.laws)


def test_member_rejects_tilts_and_profile(lazy):
    with pytest.raises(ValueError):
        MemberSpec(name="x", laws=(lazy,), tilts=(0.1,), profile=TiltProfile(kind="sine", amplitude=0.1))
    with pytest.raises(ValueError):
        MemberSpec(name="x", laws=())


def test_grid_default_points():
    grids = GridSpec()
    assert grids.u_points(64) == (0, 1, 4, 8, 12)
    assert grids.v_points(64) == (0, 1, 4, 8, 12)
    assert GridSpec(u=(3, 1, 3)).u_points(64) == (1, 3)


def test_grid_lambdas():
    assert GridSpec().lambdas(64) == (4, 8)
    assert GridSpec().lambdas(16) == (4,)
    assert GridSpec().lambdas(9) == ()
    assert GridSpec(lam=(8, 2)).lambdas(64) == (2, 8)


@pytest.mark.parametrize(
    "kwargs",
    [{"beta": 0.2}, {"beta": 0.0}, {"epsilon": 1.0}, {"alpha": (0.7,)}, {"n": (0,)}],
)
def test_grid_validation(kwargs):
    with pytest.raises(ValueError):
        GridSpec(**kwargs)


def test_family_member_lookup(lazy, pm1):
    family = FamilySpec(name="f", members=(MemberSpec("a", (lazy,)), MemberSpec("b", (pm1,))))
    assert family.member("b").laws == (pm1,)
    with pytest.raises(KeyError):
        family.member("c")


def test_family_rejects_duplicates(lazy):
    with pytest.raises(ValueError):
        FamilySpec(name="f", members=(MemberSpec("a", (lazy,)), MemberSpec("a", (lazy,))))
    with pytest.raises(ValueError):
        FamilySpec(name="f", members=())


def test_family_membership(lazy):
    params = ClassParams(delta0=1.0, c0=2.0, minorant={-1: 0.1, 0: 0.1, 1: 0.1})
    family = FamilySpec(name="f", members=(MemberSpec("a", (lazy,)),), class_params=params)
    ((name, index, verdict),) = family.check_membership()
    assert (name, index) == ("a", 0)
    assert verdict.member
    assert FamilySpec(name="f", members=(MemberSpec("a", (lazy,)),)).check_membership() == []
    assert family.membership_failures() == []


def test_membership_failures_name_outside_laws(lazy):
    params = ClassParams(delta0=1.0, c0=1.01, minorant={2: 0.1})
    family = FamilySpec(name="f", members=(MemberSpec("a", (lazy,)),), class_params=params)
    assert family.membership_failures() == ["member 'a' law 0 outside the class"]


def test_membership_failures_check_tilted_steps(lazy):
    params = ClassParams(delta0=1.0, c0=2.0, minorant={-1: 0.1, 0: 0.1, 1: 0.1})
    family = FamilySpec(
        name="f",
        members=(MemberSpec("plain", (lazy,)), MemberSpec("tilted", (lazy,), tilts=(2.0,))),
        class_params=params,
        grids=GridSpec(n=(8,)),
    )
    assert all(verdict.member for _, _, verdict in family.check_membership())
    assert family.membership_failures() == ["member 'tilted' has tilted step laws outside the class"]


def test_single_law_family():
    family = single_law_family("pm1", [-1, 1], [1, 1])
    assert family.members[0].laws[0].atoms.tolist() == [-1, 1]
    assert family.members[0].laws[0].probs.tolist() == [0.5, 0.5]


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=1, max_value=8))
def test_random_centered_law_has_mean_zero(seed, max_atom):
    law = random_centered_law(np.random.default_rng(seed), max_atom=max_atom)
    assert abs(law.mean) < 1e-12
    assert law.lattice
    assert np.all(np.abs(law.atoms) <= max_atom)
