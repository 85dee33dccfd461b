"""``faaschal`` command line: check, project, extract, synth, simulate.

Exit status is 0 on success, 1 on diagnostics or domain errors, 2 on usage
errors.  Diagnostics go to stderr, artifacts to files (or stdout when no
output path is given), summaries to stdout.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .app import AppError, UnreachableService, emit_app, parse_app, synthesize
from .checker import check
from .deployment import (
    Constraints,
    DeploymentError,
    Topology,
    generate_trace,
    parse_cluster,
    parse_deployment,
    parse_trace,
)
from .locality import LocalitySet, emit_localities, extract
from .parser import parse
from .projection import ProjectionError, project, write_units
from .simulator import FirstFit, SeededRandom, SimulationError, simulate
from .syntax import ChorSyntaxError, Choreography

log = logging.getLogger("faaschal")


class _Failed(Exception):
    """Domain failure already reported on stderr."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"{path}:1:1: Error: cannot read file: {exc.strerror}", file=sys.stderr)
        raise _Failed from None


def _error(path: str, line: int | None, code: str, message: str) -> None:
    print(f"{path}:{line or 1}:1: {code}: {message}", file=sys.stderr)


def _load_chor(path: str, require_clean: bool = True) -> Choreography:
    text = _read(path)
    try:
        choreo = parse(text)
    except ChorSyntaxError as exc:
        print(exc.diagnostic.render(path), file=sys.stderr)
        raise _Failed from None
    if require_clean:
        diags = check(choreo)
        if diags:
            for d in diags:
                print(d.render(path), file=sys.stderr)
            raise _Failed
    return choreo


def _load_deployment(path: str) -> tuple[Topology, Constraints]:
    try:
        return parse_deployment(_read(path))
    except DeploymentError as exc:
        _error(path, exc.line, "DeploymentError", exc.message)
        raise _Failed from None


def _write(text: str, output: str | None) -> None:
    if output is None or output == "-":
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8")
        log.info("wrote %s", output)


def cmd_check(args) -> int:
    choreo = _load_chor(args.chor, require_clean=False)
    diags = check(choreo)
    for d in diags:
        print(d.render(args.chor), file=sys.stderr)
    print(f"{args.chor}: {len(diags)} diagnostic(s)")
    return 1 if diags else 0


def cmd_project(args) -> int:
    choreo = _load_chor(args.chor)
    try:
        units = project(choreo)
    except ProjectionError as exc:
        _error(args.chor, None, "ProjectionError", str(exc))
        return 1
    paths = write_units(units, args.output)
    for p in paths:
        print(p)
    return 0


def cmd_extract(args) -> int:
    loc = extract(_load_chor(args.chor))
    _write(emit_localities(loc), args.output)
    return 0


def cmd_synth(args) -> int:
    choreo = _load_chor(args.chor)
    topo, cons = _load_deployment(args.deployment)
    loc = extract(choreo)
    try:
        script = synthesize(loc, topo, cons, choreo.stateless)
    except UnreachableService as exc:
        _error(args.deployment, None, "UnreachableService", str(exc))
        return 1
    _write(emit_app(script), args.output)
    if args.output not in (None, "-"):
        print(f"{args.output}: {len(script.entries)} tag(s)")
    return 0


def cmd_simulate(args) -> int:
    try:
        script = parse_app(_read(args.policy))
    except AppError as exc:
        _error(args.policy, exc.line, "AppError", exc.message)
        return 1
    try:
        cluster = parse_cluster(_read(args.cluster))
    except DeploymentError as exc:
        _error(args.cluster, exc.line, "DeploymentError", exc.message)
        return 1

    loc = LocalitySet()
    if args.chor:
        choreo = _load_chor(args.chor)
        loc = extract(choreo)
    if args.trace:
        try:
            trace = parse_trace(_read(args.trace))
        except DeploymentError as exc:
            _error(args.trace, exc.line, "DeploymentError", exc.message)
            return 1
    else:
        n, d, delay = args.gen_trace
        trace = generate_trace(choreo, int(n), d, delay)

    topo = Topology()
    if args.deployment:
        topo, _ = _load_deployment(args.deployment)
    else:
        # no topology: costs would all be the unreachable sentinel
        loc = LocalitySet()

    strategy = SeededRandom(args.seed) if args.strategy == "random" else FirstFit()
    try:
        report = simulate(script, cluster, trace, topo, loc, strategy)
    except SimulationError as exc:
        _error(args.policy, None, "SimulationError", str(exc))
        return 1
    _write(report.to_json() if args.json else report.to_text(), args.output)
    print(
        f"events={len(trace.events)} placements={len(report.placements)} "
        f"failures={len(report.failures)} violations={report.violations}"
    )
    return 0 if report.violations == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="faaschal", description="FaaSChal choreography toolchain")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", help="parse and check a choreography")
    p.add_argument("chor")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("project", help="write one <role>.pseudo per local unit")
    p.add_argument("chor")
    p.add_argument("-o", "--output", required=True, help="target directory")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("extract", help="write the locality report")
    p.add_argument("chor")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("synth", help="synthesize an APP script")
    p.add_argument("chor")
    p.add_argument("--deployment", required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("simulate", help="simulate an APP script on a cluster")
    p.add_argument("--policy", required=True)
    p.add_argument("--cluster", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--trace")
    src.add_argument("--gen-trace", nargs=3, type=float, metavar=("N", "D", "DELAY"))
    p.add_argument("--chor", help="choreography for trace generation and locality costs")
    p.add_argument("--deployment", help="topology used for placement costs")
    p.add_argument("--strategy", choices=("firstfit", "random"), default="firstfit")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="structured report")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(message)s")
    if args.command == "simulate" and args.gen_trace is not None:
        n, d, delay = args.gen_trace
        if not args.chor:
            parser.error("--gen-trace requires --chor")
        if n < 0 or n != int(n) or d <= 0 or delay <= 0:
            parser.error("--gen-trace needs N >= 0 (integer) and positive D, DELAY")
    try:
        return args.func(args)
    except _Failed:
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
