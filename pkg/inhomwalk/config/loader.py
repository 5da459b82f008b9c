from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence, get_args

from inhomwalk.core_adapter import (
    Band,
    Checkpoint,
    ClassParams,
    IncrementLaw,
    InvalidLawError,
    PathConstraint,
    StepSchedule,
    TiltProfileKind,
    centered_constraint,
    lattice_endpoint,
    validate_law,
)
from inhomwalk.errors import ConfigInvalidError
from inhomwalk.harness.context import RunContext, default_parallelism
from inhomwalk.harness.family import FamilySpec, GridSpec, MemberSpec, TiltProfile
from inhomwalk.harness.registry import theorem_ids
from inhomwalk.types import OutputFormat, Task

_TOP_KEYS = {
    "family",
    "task",
    "theoremId",
    "query",
    "output",
    "seed",
    "parallelism",
    "spreadCap",
    "mcSamples",
    "strictFloor",
}
_FAMILY_KEYS = {"name", "class", "members", "grids"}
_GRID_KEYS = {"n", "u", "v", "lambda", "s", "t", "K", "alpha", "beta", "epsilon", "rho", "checkpoints"}
_QUERY_KEYS = {"member", "n", "u", "constraint", "centered", "samples", "importance"}
_CONSTRAINT_KEYS = {"bands", "lower", "upper", "strictFloor", "openEdges", "endpoint", "checkpoints"}
_CHECKPOINT_KEYS = {"t", "time", "set", "allowed", "band", "incCap", "incShift"}
_EDGE_KEYS = {"lo", "hi"}


class _Fields:
    """Typed accessors that report the offending field of one config file."""

    def __init__(self, path: Path) -> None:
        self.path = str(path)

    def fail(self, field: str, reason: str, line: int | None = None) -> ConfigInvalidError:
        return ConfigInvalidError(path=self.path, field=field, reason=reason, line=line)

    def obj(self, raw: Any, field: str, allowed: set[str]) -> dict[str, Any]:
        if not isinstance(raw, dict):
            raise self.fail(field, "must be a JSON object")
        unknown = sorted(set(raw) - allowed)
        if unknown:
            raise self.fail(f"{field}.{unknown[0]}" if field else unknown[0], "unknown field")
        return raw

    def integer(self, raw: Any, field: str, *, minimum: int | None = None) -> int:
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise self.fail(field, "must be an integer")
        if minimum is not None and raw < minimum:
            raise self.fail(field, f"must be >= {minimum}")
        return raw

    def number(self, raw: Any, field: str) -> float:
        if isinstance(raw, bool) or not isinstance(raw, (int, float)) or not math.isfinite(raw):
            raise self.fail(field, "must be a finite number")
        return float(raw)

    def boolean(self, raw: Any, field: str) -> bool:
        if not isinstance(raw, bool):
            raise self.fail(field, "must be true or false")
        return raw

    def string(self, raw: Any, field: str) -> str:
        if not isinstance(raw, str) or not raw.strip():
            raise self.fail(field, "must be a non-empty string")
        return raw

    def integers(self, raw: Any, field: str, *, minimum: int | None = None) -> tuple[int, ...]:
        if not isinstance(raw, list):
            raise self.fail(field, "must be a list of integers")
        return tuple(self.integer(x, f"{field}[{i}]", minimum=minimum) for i, x in enumerate(raw))

    def numbers(self, raw: Any, field: str) -> tuple[float, ...]:
        if not isinstance(raw, list):
            raise self.fail(field, "must be a list of numbers")
        return tuple(self.number(x, f"{field}[{i}]") for i, x in enumerate(raw))

    def choice(self, raw: Any, field: str, options: Sequence[str]) -> str:
        if raw not in options:
            raise self.fail(field, f"must be one of {list(options)}")
        return raw


@dataclass(frozen=True)
class OutputSpec:
    path: str | None = None
    format: OutputFormat = "json"


@dataclass(frozen=True)
class ConstraintSpec:
    """Event description; bounds are offsets from m_i when ``centered``."""

    lower: float | tuple[float | None, ...] | None = None
    upper: float | tuple[float | None, ...] | None = None
    strict_floor: bool = False
    open_edges: bool = False
    endpoint: float | None = None
    checkpoints: tuple[Checkpoint, ...] = ()

    def build(self, schedule: StepSchedule, centered: bool) -> PathConstraint:
        if centered:
            endpoint = None if self.endpoint is None else lattice_endpoint(schedule, self.endpoint)
            return centered_constraint(
                schedule,
                lower=self.lower,
                upper=self.upper,
                strict_floor=self.strict_floor,
                open_edges=self.open_edges,
                endpoint=endpoint,
                checkpoints=self.checkpoints,
            )
        n = schedule.n
        lows = _per_step(self.lower, n, -math.inf)
        highs = _per_step(self.upper, n, math.inf)
        bands = tuple(
            Band(lo, hi, lo_strict=self.open_edges, hi_strict=self.open_edges) for lo, hi in zip(lows, highs)
        )
        return PathConstraint(
            bands=bands,
            strict_floor=self.strict_floor,
            checkpoints=self.checkpoints,
            endpoint=None if self.endpoint is None else int(round(self.endpoint)),
        )


def _per_step(value: float | tuple[float | None, ...] | None, n: int, default: float) -> list[float]:
    if value is None:
        return [default] * n
    if isinstance(value, float):
        return [value] * n
    if len(value) != n:
        raise ValueError(f"per-step bound has {len(value)} entries for n={n}")
    return [default if v is None else v for v in value]


@dataclass(frozen=True)
class ProbQuery:
    member: str
    n: int
    u: int = 0
    constraint: ConstraintSpec = field(default_factory=ConstraintSpec)
    centered: bool = True


@dataclass(frozen=True)
class SampleQuery(ProbQuery):
    samples: int = 100_000
    importance: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    path: str
    family: FamilySpec | None = None
    task: Task | None = None
    theorem_id: str | None = None
    query: ProbQuery | None = None
    output: OutputSpec = field(default_factory=OutputSpec)
    seed: int = 0
    parallelism: int = 1
    spread_cap: float = 10.0
    mc_samples: int = 100_000
    strict_floor: bool = False

    def to_context(self) -> RunContext:
        return RunContext(
            spread_cap=self.spread_cap,
            seed=self.seed,
            parallelism=self.parallelism,
            mc_samples=self.mc_samples,
            strict_floor=self.strict_floor,
        )


def _read_json(path: Path, f: _Fields) -> Any:
    if not path.exists():
        raise f.fail("<file>", "config file is missing")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise f.fail("<file>", f"malformed JSON: {exc.msg} (column {exc.colno})", line=exc.lineno) from exc
    except (OSError, UnicodeDecodeError) as exc:
        raise f.fail("<file>", f"unreadable: {exc}") from exc


def parse_law(raw: Any, field: str, f: _Fields) -> IncrementLaw:
    """{"atoms": [...], "probs": [...], "lattice": bool}; "weights" is accepted for unnormalized input."""
    body = f.obj(raw, field, {"atoms", "probs", "weights", "lattice"})
    masses = [key for key in ("probs", "weights") if key in body]
    if "atoms" not in body or len(masses) != 1:
        raise f.fail(field, "needs atoms and exactly one of probs, weights")
    atoms = f.numbers(body["atoms"], f"{field}.atoms")
    weights = f.numbers(body[masses[0]], f"{field}.{masses[0]}")
    lattice = f.boolean(body.get("lattice", True), f"{field}.lattice")
    try:
        return validate_law(atoms, weights, lattice=lattice)
    except InvalidLawError as exc:
        raise f.fail(field, exc.reason) from exc


def load_law_file(path: str | Path) -> IncrementLaw:
    """A single law literal, as written by ``IncrementLaw.to_literal``."""
    p = Path(path)
    f = _Fields(p)
    return parse_law(_read_json(p, f), "law", f)


def _parse_class(raw: Any, f: _Fields) -> ClassParams:
    body = f.obj(raw, "family.class", {"delta0", "c0", "minorant"})
    minorant_raw = body.get("minorant", {})
    if not isinstance(minorant_raw, dict):
        raise f.fail("family.class.minorant", "must map integer atoms to floors")
    minorant = {}
    for key, value in minorant_raw.items():
        try:
            atom = int(key)
        except ValueError as exc:
            raise f.fail(f"family.class.minorant.{key}", "key must be an integer") from exc
        minorant[atom] = f.number(value, f"family.class.minorant.{key}")
    try:
        return ClassParams(
            delta0=f.number(body.get("delta0"), "family.class.delta0"),
            c0=f.number(body.get("c0"), "family.class.c0"),
            minorant=minorant,
        )
    except ValueError as exc:
        raise f.fail("family.class", str(exc)) from exc


def _parse_member(raw: Any, field: str, f: _Fields) -> MemberSpec:
    body = f.obj(raw, field, {"name", "law", "laws", "base", "tilts", "tiltProfile", "tiltInterval"})
    name = f.string(body.get("name"), f"{field}.name")
    shapes = [key for key in ("law", "laws", "base") if key in body]
    if len(shapes) != 1:
        raise f.fail(field, "needs exactly one of law, laws, base")
    if "law" in body:
        laws: tuple[IncrementLaw, ...] = (parse_law(body["law"], f"{field}.law", f),)
    elif "laws" in body:
        if not isinstance(body["laws"], list) or not body["laws"]:
            raise f.fail(f"{field}.laws", "must be a non-empty list")
        laws = tuple(parse_law(x, f"{field}.laws[{i}]", f) for i, x in enumerate(body["laws"]))
    elif isinstance(body["base"], list):
        laws = tuple(parse_law(x, f"{field}.base[{i}]", f) for i, x in enumerate(body["base"]))
    else:
        laws = (parse_law(body["base"], f"{field}.base", f),)
    if ("tilts" in body or "tiltProfile" in body) and "base" not in body:
        raise f.fail(field, "tilts need a base law")
    tilts = f.numbers(body["tilts"], f"{field}.tilts") if "tilts" in body else None
    profile = None
    if "tiltProfile" in body:
        spec = f.obj(body["tiltProfile"], f"{field}.tiltProfile", {"kind", "amplitude", "period"})
        kind: TiltProfileKind = f.choice(spec.get("kind"), f"{field}.tiltProfile.kind", get_args(TiltProfileKind))
        profile = TiltProfile(
            kind=kind,
            amplitude=f.number(spec.get("amplitude"), f"{field}.tiltProfile.amplitude"),
            period=f.integer(spec.get("period", 16), f"{field}.tiltProfile.period", minimum=1),
        )
    interval = None
    if "tiltInterval" in body:
        bounds = f.numbers(body["tiltInterval"], f"{field}.tiltInterval")
        if len(bounds) != 2 or bounds[0] > bounds[1]:
            raise f.fail(f"{field}.tiltInterval", "must be [a, b] with a <= b")
        interval = (bounds[0], bounds[1])
    try:
        member = MemberSpec(name=name, laws=laws, tilts=tilts, profile=profile, tilt_interval=interval)
        member.schedule(1)
    except ValueError as exc:
        raise f.fail(field, str(exc)) from exc
    return member


def _parse_grids(raw: Any, f: _Fields) -> GridSpec:
    body = f.obj(raw, "family.grids", _GRID_KEYS)
    kwargs: dict[str, Any] = {}
    for key, attr in (("n", "n"), ("checkpoints", "checkpoints")):
        if key in body:
            kwargs[attr] = f.integers(body[key], f"family.grids.{key}", minimum=1)
    for key, attr in (("u", "u"), ("v", "v"), ("lambda", "lam")):
        if key in body:
            kwargs[attr] = f.integers(body[key], f"family.grids.{key}", minimum=0)
    for key in ("s", "t", "K", "alpha"):
        if key in body:
            kwargs[key] = f.numbers(body[key], f"family.grids.{key}")
    for key in ("beta", "epsilon", "rho"):
        if key in body:
            kwargs[key] = f.number(body[key], f"family.grids.{key}")
    try:
        return GridSpec(**kwargs)
    except ValueError as exc:
        raise f.fail("family.grids", str(exc)) from exc


def parse_family(raw: Any, f: _Fields) -> FamilySpec:
    body = f.obj(raw, "family", _FAMILY_KEYS)
    name = f.string(body.get("name"), "family.name")
    members_raw = body.get("members")
    if not isinstance(members_raw, list) or not members_raw:
        raise f.fail("family.members", "must be a non-empty list")
    members = tuple(_parse_member(m, f"family.members[{i}]", f) for i, m in enumerate(members_raw))
    class_params = _parse_class(body["class"], f) if "class" in body else None
    grids = _parse_grids(body["grids"], f) if "grids" in body else GridSpec()
    try:
        return FamilySpec(name=name, members=members, class_params=class_params, grids=grids)
    except ValueError as exc:
        raise f.fail("family", str(exc)) from exc


def _parse_edges(raw: Any, field: str, f: _Fields) -> Band:
    body = f.obj(raw, field, _EDGE_KEYS)
    lo = -math.inf if body.get("lo") is None else f.number(body["lo"], f"{field}.lo")
    hi = math.inf if body.get("hi") is None else f.number(body["hi"], f"{field}.hi")
    return Band(lo, hi)


def _one_of(body: dict[str, Any], keys: Sequence[str], field: str, f: _Fields) -> str | None:
    present = [key for key in keys if key in body]
    if len(present) > 1:
        raise f.fail(field, f"{' and '.join(present)} are exclusive")
    return present[0] if present else None


def _parse_checkpoint(raw: Any, field: str, f: _Fields) -> Checkpoint:
    body = f.obj(raw, field, _CHECKPOINT_KEYS)
    time_key = _one_of(body, ("t", "time"), field, f) or "t"
    time = f.integer(body.get(time_key), f"{field}.{time_key}", minimum=1)
    set_key = _one_of(body, ("set", "allowed", "band"), field, f)
    allowed: frozenset[int] | Band | None = None
    if set_key == "set" and isinstance(body["set"], dict):
        allowed = _parse_edges(body["set"], f"{field}.set", f)
    elif set_key in ("set", "allowed"):
        allowed = frozenset(f.integers(body[set_key], f"{field}.{set_key}"))
    elif set_key == "band":
        edges = f.numbers(body["band"], f"{field}.band")
        if len(edges) != 2:
            raise f.fail(f"{field}.band", "must be [lo, hi]")
        allowed = Band(edges[0], edges[1])
    cap = f.number(body["incCap"], f"{field}.incCap") if body.get("incCap") is not None else None
    shift = f.number(body.get("incShift", 0.0), f"{field}.incShift")
    try:
        return Checkpoint(time=time, allowed=allowed, inc_cap=cap, inc_shift=shift)
    except ValueError as exc:
        raise f.fail(field, str(exc)) from exc


def _parse_bound(raw: Any, field: str, f: _Fields) -> float | tuple[float | None, ...] | None:
    if raw is None:
        return None
    if isinstance(raw, list):
        return tuple(None if x is None else f.number(x, f"{field}[{i}]") for i, x in enumerate(raw))
    return f.number(raw, field)


def _parse_bands(raw: Any, f: _Fields) -> tuple[tuple[float | None, ...], tuple[float | None, ...]]:
    """Per-step [{"lo", "hi"} | null, ...] split into lower and upper edge lists."""
    if not isinstance(raw, list):
        raise f.fail("query.constraint.bands", "must be a list of {lo, hi} objects or null")
    lows: list[float | None] = []
    highs: list[float | None] = []
    for i, item in enumerate(raw):
        field = f"query.constraint.bands[{i}]"
        if item is None:
            lows.append(None)
            highs.append(None)
            continue
        band = _parse_edges(item, field, f)
        if band.lo > band.hi:
            raise f.fail(field, "lo must not exceed hi")
        lows.append(band.lo if math.isfinite(band.lo) else None)
        highs.append(band.hi if math.isfinite(band.hi) else None)
    return tuple(lows), tuple(highs)


def _parse_constraint(raw: Any, f: _Fields) -> ConstraintSpec:
    body = f.obj(raw, "query.constraint", _CONSTRAINT_KEYS)
    if "bands" in body and ("lower" in body or "upper" in body):
        raise f.fail("query.constraint.bands", "bands and lower/upper are exclusive")
    checkpoints_raw = body.get("checkpoints", [])
    if not isinstance(checkpoints_raw, list):
        raise f.fail("query.constraint.checkpoints", "must be a list")
    checkpoints = tuple(
        _parse_checkpoint(c, f"query.constraint.checkpoints[{i}]", f) for i, c in enumerate(checkpoints_raw)
    )
    times = [c.time for c in checkpoints]
    if times != sorted(set(times)):
        raise f.fail("query.constraint.checkpoints", "times must be strictly increasing")
    if "bands" in body:
        lower, upper = _parse_bands(body["bands"], f)
    else:
        lower = _parse_bound(body.get("lower"), "query.constraint.lower", f)
        upper = _parse_bound(body.get("upper"), "query.constraint.upper", f)
    endpoint = body.get("endpoint")
    return ConstraintSpec(
        lower=lower,
        upper=upper,
        strict_floor=f.boolean(body.get("strictFloor", False), "query.constraint.strictFloor"),
        open_edges=f.boolean(body.get("openEdges", False), "query.constraint.openEdges"),
        endpoint=None if endpoint is None else f.number(endpoint, "query.constraint.endpoint"),
        checkpoints=checkpoints,
    )


def _parse_query(raw: Any, task: Task, family: FamilySpec, f: _Fields) -> ProbQuery:
    body = f.obj(raw, "query", _QUERY_KEYS)
    if task == "prob":
        for key in ("samples", "importance"):
            if key in body:
                raise f.fail(f"query.{key}", "only valid for the sample task")
    member = f.string(body.get("member", family.members[0].name), "query.member")
    if member not in {m.name for m in family.members}:
        raise f.fail("query.member", f"no member named {member!r}")
    n = f.integer(body.get("n"), "query.n", minimum=1)
    constraint = _parse_constraint(body["constraint"], f) if "constraint" in body else ConstraintSpec()
    banded = isinstance(body.get("constraint"), dict) and "bands" in body["constraint"]
    for name, bound in (("lower", constraint.lower), ("upper", constraint.upper)):
        if isinstance(bound, tuple) and len(bound) != n:
            field = "query.constraint.bands" if banded else f"query.constraint.{name}"
            raise f.fail(field, f"has {len(bound)} entries for n={n}")
    if constraint.checkpoints and constraint.checkpoints[-1].time > n:
        raise f.fail("query.constraint.checkpoints", f"checkpoint beyond n={n}")
    common = dict(
        member=member,
        n=n,
        u=f.integer(body.get("u", 0), "query.u"),
        constraint=constraint,
        centered=f.boolean(body.get("centered", True), "query.centered"),
    )
    if task == "sample":
        return SampleQuery(
            **common,
            samples=f.integer(body.get("samples", 100_000), "query.samples", minimum=1000),
            importance=f.boolean(body.get("importance", False), "query.importance"),
        )
    return ProbQuery(**common)


def load_scenario_config(path: str | Path) -> ScenarioConfig:
    """Strictly validated scenario; every error names its field."""
    p = Path(path)
    f = _Fields(p)
    raw = f.obj(_read_json(p, f), "", _TOP_KEYS)

    task: Task | None = None
    if "task" in raw:
        task = f.choice(raw["task"], "task", get_args(Task))
    family = parse_family(raw["family"], f) if "family" in raw else None
    if task is not None and family is None:
        raise f.fail("family", f"required for task {task!r}")

    theorem_id = None
    if "theoremId" in raw:
        theorem_id = f.choice(raw["theoremId"], "theoremId", [*theorem_ids(), "all"])

    query = None
    if task in ("prob", "sample"):
        if "query" not in raw:
            raise f.fail("query", f"required for task {task!r}")
        query = _parse_query(raw["query"], task, family, f)
    elif "query" in raw:
        raise f.fail("query", "only valid for the prob and sample tasks")

    output = OutputSpec()
    if "output" in raw:
        body = f.obj(raw["output"], "output", {"path", "format"})
        fmt: OutputFormat = f.choice(body.get("format", "json"), "output.format", get_args(OutputFormat))
        out_path = f.string(body["path"], "output.path") if "path" in body else None
        if out_path is not None:
            parent = Path(out_path).parent
            if parent.exists() and not parent.is_dir():
                raise f.fail("output.path", "parent is not a directory")
        output = OutputSpec(path=out_path, format=fmt)

    seed = f.integer(raw.get("seed", 0), "seed", minimum=0)
    if seed >= 2**64:
        raise f.fail("seed", "must fit in 64 bits")
    parallelism = f.integer(raw.get("parallelism", default_parallelism()), "parallelism", minimum=1)
    spread_cap = f.number(raw.get("spreadCap", 10.0), "spreadCap")
    if spread_cap < 1:
        raise f.fail("spreadCap", "must be >= 1")
    mc_samples = f.integer(raw.get("mcSamples", 100_000), "mcSamples", minimum=10_000)
    strict_floor = f.boolean(raw.get("strictFloor", False), "strictFloor")

    return ScenarioConfig(
        path=str(p),
        family=family,
        task=task,
        theorem_id=theorem_id,
        query=query,
        output=output,
        seed=seed,
        parallelism=parallelism,
        spread_cap=spread_cap,
        mc_samples=mc_samples,
        strict_floor=strict_floor,
    )


def family_from_mapping(raw: Mapping[str, Any], source: str = "<mapping>") -> FamilySpec:
    """Parse a family literal that did not come from a file."""
    return parse_family(dict(raw), _Fields(Path(source)))
