from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import sys
from typing import Sequence

from inhomwalk.config import ProbQuery, SampleQuery, ScenarioConfig, load_law_file, load_scenario_config
from inhomwalk.core_adapter import (
    InfeasibleConstraintError,
    InvalidLawError,
    TargetOutOfRangeError,
    check_class_membership,
    check_periodicity,
    event_log_prob,
    moment,
)
from inhomwalk.errors import ConfigInvalidError, DegenerateAcceptanceError, UnknownTheoremError
from inhomwalk.harness import run_all, run_verifier
from inhomwalk.montecarlo import estimate_event, importance_tilted_estimate
from inhomwalk.reporting import dumps, merge_report_files, render_reports, render_rows, write_text
from inhomwalk.types import ProbRowDict, SampleRowDict
from inhomwalk.version import __version__

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="inhomwalk", description="Exact probabilities and bound verification for inhomogeneous walks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="log at INFO")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="log errors only")
    sub = parser.add_subparsers(dest="command", required=True)

    law = sub.add_parser("law", help="inspect an increment law")
    law_sub = law.add_subparsers(dest="law_command", required=True)
    check = law_sub.add_parser("check", help="validate a law file and report its moments")
    check.add_argument("file")
    check.add_argument("--config", help="scenario config whose family class is checked")

    def with_overrides(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True)
        p.add_argument("--out")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--seed", type=int)
        p.add_argument("--parallelism", type=int)
        p.add_argument("--spread-cap", type=float)
        p.add_argument("--mc-samples", type=int)

    with_overrides(sub.add_parser("prob", help="exact event probability"))
    with_overrides(sub.add_parser("sample", help="Monte Carlo event estimate"))
    verify = sub.add_parser("verify", help="run a theorem verifier")
    verify.add_argument("theorem_id")
    with_overrides(verify)

    report = sub.add_parser("report", help="merge JSON reports")
    report.add_argument("--merge", nargs="+", required=True, metavar="FILE")
    report.add_argument("--out", required=True)
    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.INFO if args.verbose else logging.ERROR if args.quiet else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _load(args: argparse.Namespace) -> ScenarioConfig:
    config = load_scenario_config(args.config)
    output = config.output
    if args.out is not None or args.format is not None:
        output = dataclasses.replace(
            output,
            path=args.out if args.out is not None else output.path,
            format=args.format if args.format is not None else output.format,
        )
    overrides = {
        "seed": args.seed,
        "parallelism": args.parallelism,
        "spread_cap": args.spread_cap,
        "mc_samples": args.mc_samples,
    }
    config = dataclasses.replace(config, output=output, **{k: v for k, v in overrides.items() if v is not None})
    try:
        config.to_context()
    except ValueError as exc:
        raise ConfigInvalidError(path=config.path, field="<flags>", reason=str(exc)) from exc
    if config.family is None:
        raise ConfigInvalidError(path=config.path, field="family", reason=f"required for {args.command}")
    return config


def _emit(config: ScenarioConfig, text: str) -> None:
    if config.output.path is None:
        sys.stdout.write(text)
    else:
        write_text(config.output.path, text)


def _query(config: ScenarioConfig, kind: type[ProbQuery]) -> ProbQuery:
    query = config.query
    if not isinstance(query, kind):
        raise ConfigInvalidError(path=config.path, field="query", reason=f"needs a {kind.__name__} (task and query)")
    return query


def _cmd_law_check(args: argparse.Namespace) -> int:
    law = load_law_file(args.file)
    out: dict = {
        "atoms": law.atoms.tolist(),
        "probs": law.probs.tolist(),
        "lattice": law.lattice,
        "mean": law.mean,
        "variance": law.variance,
        "positive_part": moment(law, "positive_part"),
    }
    status = EXIT_OK
    if law.lattice:
        periodicity = check_periodicity(law)
        out["periodicity"] = {"irreducible": periodicity.irreducible, "aperiodic": periodicity.aperiodic}
    if args.config:
        config = load_scenario_config(args.config)
        params = config.family.class_params if config.family is not None else None
        if params is None:
            raise ConfigInvalidError(path=config.path, field="family.class", reason="law check needs a class")
        if not law.lattice:
            raise ConfigInvalidError(path=args.file, field="law.lattice", reason="class membership needs a lattice law")
        verdict = check_class_membership(law, params)
        out["membership"] = dataclasses.asdict(verdict)
        status = EXIT_OK if verdict.member else EXIT_FAIL
    sys.stdout.write(dumps(out))
    return status


def _cmd_prob(args: argparse.Namespace) -> int:
    config = _load(args)
    query = _query(config, ProbQuery)
    schedule = config.family.member(query.member).schedule(query.n)
    try:
        log_p = event_log_prob(query.u, schedule, query.constraint.build(schedule, query.centered))
    except InfeasibleConstraintError as exc:
        logger.info("[Cli][prob] infeasible constraint: %s", exc)
        log_p = -math.inf
    row: ProbRowDict = {
        "member": query.member,
        "n": query.n,
        "u": query.u,
        "probability": math.exp(log_p),
        "log_probability": log_p,
    }
    _emit(config, render_rows([row], config.output.format))
    return EXIT_OK


def _cmd_sample(args: argparse.Namespace) -> int:
    config = _load(args)
    query = _query(config, SampleQuery)
    schedule = config.family.member(query.member).schedule(query.n)
    constraint = query.constraint.build(schedule, query.centered)
    if query.importance:
        if constraint.endpoint is None:
            raise ConfigInvalidError(path=config.path, field="query.constraint.endpoint", reason="importance sampling pins the endpoint")
        method = "importance"
        est = importance_tilted_estimate(schedule, query.u, constraint, samples=query.samples, seed=config.seed)
    else:
        method = "rejection"
        est = estimate_event(schedule, query.u, constraint, samples=query.samples, seed=config.seed)
    row: SampleRowDict = {
        "member": query.member,
        "n": query.n,
        "u": query.u,
        "method": method,
        "value": est.value,
        "stderr": est.stderr,
        "samples": est.samples,
        "seed": est.seed,
        "accepted_fraction": est.accepted_fraction,
    }
    _emit(config, render_rows([row], config.output.format))
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace) -> int:
    config = _load(args)
    ctx = config.to_context()
    if args.theorem_id == "all":
        reports = run_all(config.family, ctx)
    else:
        reports = [run_verifier(args.theorem_id, config.family, ctx)]
    _emit(config, render_reports(reports, config.output.format))
    for report in reports:
        if not report.passed:
            logger.warning("[Cli][verify] %s failed: %s", report.theorem_id, "; ".join(report.notes) or "envelope")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def _cmd_report(args: argparse.Namespace) -> int:
    merged = merge_report_files(args.merge)
    write_text(args.out, dumps(merged))
    return EXIT_OK if merged["verdict"] == "pass" else EXIT_FAIL


def run(argv: Sequence[str]) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    _configure_logging(args)
    commands = {
        "law": _cmd_law_check,
        "prob": _cmd_prob,
        "sample": _cmd_sample,
        "verify": _cmd_verify,
        "report": _cmd_report,
    }
    try:
        return commands[args.command](args)
    except (ConfigInvalidError, UnknownTheoremError, InvalidLawError, OSError) as exc:
        print(f"inhomwalk: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateAcceptanceError, TargetOutOfRangeError) as exc:
        print(f"inhomwalk: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main() -> int:
    return run(sys.argv[1:])


if __name__ == "__main__":
    raise SystemExit(main())
