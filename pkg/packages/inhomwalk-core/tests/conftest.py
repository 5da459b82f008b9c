from __future__ import annotations

import pytest

from inhomwalk_core import StepSchedule, validate_law


@pytest.fixture
def lazy():
    return validate_law([-1, 0, 1], [1, 2, 1])


@pytest.fixture
def pm1():
    return validate_law([-1, 1], [1, 1])


@pytest.fixture
def lazy_schedule(lazy):
    def build(n: int) -> StepSchedule:
        return StepSchedule.homogeneous(lazy, n)

    return build


@pytest.fixture
def pm1_schedule(pm1):
    def build(n: int) -> StepSchedule:
        return StepSchedule.homogeneous(pm1, n)

    return build
