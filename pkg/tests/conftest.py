from __future__ import annotations

import json
from pathlib import Path

import pytest

from inhomwalk.core_adapter import StepSchedule, TiltSchedule, validate_law
from inhomwalk.harness import FamilySpec, GridSpec, MemberSpec, RunContext

LAZY_LITERAL = {"atoms": [-1, 0, 1], "weights": [1, 2, 1]}


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
def sine_schedule(lazy):
    def build(n: int, amplitude: float = 0.2) -> StepSchedule:
        return TiltSchedule.from_profile(lazy, n, kind="sine", amplitude=amplitude, period=16).to_schedule()

    return build


@pytest.fixture
def family_of():
    def build(*laws, grids: GridSpec | None = None, name: str = "fam") -> FamilySpec:
        members = tuple(MemberSpec(name=f"m{i}", laws=(law,)) for i, law in enumerate(laws))
        return FamilySpec(name=name, members=members, grids=grids or GridSpec())

    return build


@pytest.fixture
def ctx():
    return RunContext(mc_samples=10_000)


@pytest.fixture
def write_json(tmp_path: Path):
    def write(name: str, payload) -> Path:
        path = tmp_path / name
        path.write_text(payload if isinstance(payload, str) else json.dumps(payload), encoding="utf-8")
        return path

    return write


@pytest.fixture
def lazy_config():
    def build(**overrides) -> dict:
        config = {
            "family": {
                "name": "lazy",
                "class": {"delta0": 1.0, "c0": 2.0, "minorant": {"-1": 0.1, "0": 0.1, "1": 0.1}},
                "members": [{"name": "lazy", "law": LAZY_LITERAL}],
                "grids": {"n": [16, 32, 64], "u": [0, 1, 2, 4]},
            },
            "task": "verify",
            "theoremId": "ballot",
        }
        config.update(overrides)
        return config

    return build
