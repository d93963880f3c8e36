"""Command-line front end.

Subcommands: ``solve`` (message-passing solve of a DIMACS or JSON
instance), ``check-unique`` (uniqueness detection from final beliefs),
``approx`` (randomized (1+eps)-approximation), ``gen`` (random instance
generation), ``selftest`` (built-in oracle-equivalence suites) and
``bench`` (round-throughput measurement).

Reports are JSON on stdout, logs on stderr.  Exit codes: 0 success,
2 infeasible instance, 3 parse error, 4 restart budget exhausted,
1 anything else (including usage errors).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from fractions import Fraction

from . import bp_engine, fpras, gen, oracles
from .errors import (
    DimacsInconsistentError,
    DimacsSyntaxError,
    FlowBpError,
    ForcedInfeasibleError,
    InfeasibleInstanceError,
    NonZeroLowerBoundError,
    RestartBudgetExceededError,
    UsageError,
)
from .flowmodel import (
    FlowNetwork,
    emit_dimacs,
    network_from_json_dict,
    network_to_json_dict,
    objective_value,
    parse_dimacs,
)

REPORT_SCHEMA = "flowbp-report-1"

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_INFEASIBLE = 2
EXIT_PARSE = 3
EXIT_RESTART_BUDGET = 4

_PARSE_ERRORS = (
    DimacsSyntaxError,
    DimacsInconsistentError,
    NonZeroLowerBoundError,
    json.JSONDecodeError,
)
_INFEASIBLE_ERRORS = (InfeasibleInstanceError, ForcedInfeasibleError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_OTHER)


def load_instance(path: str, fmt: str = "auto") -> FlowNetwork:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if fmt == "auto":
        if path.endswith(".json") or text.lstrip().startswith("{"):
            fmt = "json"
        else:
            fmt = "dimacs"
    if fmt == "json":
        return network_from_json_dict(json.loads(text))
    return parse_dimacs(text)


def _instance_summary(net: FlowNetwork) -> dict:
    return {"n": net.n, "m": net.m, "c_max": net.c_max}


def _flow_dict(flows: dict[int, int]) -> dict:
    return {str(aid): int(x) for aid, x in sorted(flows.items())}


def _emit(report: dict) -> None:
    print(json.dumps(report, sort_keys=True, indent=2))


def _seed_from(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("FLOWBP_SEED")
    if env is not None:
        return int(env)
    return 0


def _base_report(mode: str, net: FlowNetwork) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "mode": mode,
        "instance": _instance_summary(net),
    }


def cmd_solve(args) -> int:
    t0 = time.perf_counter()
    net = load_instance(args.input, args.format)
    oracles.exact_solve(net)  # feasibility gate; raises when infeasible
    rounds = None if args.iters == "auto" else int(args.iters)
    dump_sink = None
    dump_file = None
    if args.dump_messages:
        dump_file = open(args.dump_messages, "w", encoding="utf-8")
        dump_sink = lambda rec: print(json.dumps(rec, sort_keys=True), file=dump_file)
    try:
        result = bp_engine.run(
            net,
            rounds=rounds,
            patience=args.patience,
            threads=args.threads,
            dump_sink=dump_sink,
        )
    finally:
        if dump_file is not None:
            dump_file.close()
    report = _base_report("solve", net)
    report.update(
        rounds_used=result.rounds_used,
        executed_rounds=result.executed_rounds,
        flow=_flow_dict(result.assignment.flows),
        objective=objective_value(net, result.assignment.flows),
        feasible=result.assignment.feasible,
        ties=sorted(result.assignment.ties),
        piece_stats={
            "per_round_total": result.piece_totals,
            "max_round_total": max(result.piece_totals, default=0),
        },
        wall_time_s=round(time.perf_counter() - t0, 6),
    )
    _emit(report)
    return EXIT_OK


def cmd_check_unique(args) -> int:
    t0 = time.perf_counter()
    net = load_instance(args.input, args.format)
    oracles.exact_solve(net)
    res = bp_engine.detect_uniqueness(net, threads=args.threads)
    report = _base_report("check-unique", net)
    report.update(
        rounds_used=res.rounds_used,
        executed_rounds=res.executed_rounds,
        unique=res.unique,
        wall_time_s=round(time.perf_counter() - t0, 6),
    )
    if res.unique:
        report["flow"] = _flow_dict(res.assignment.flows)
        report["objective"] = objective_value(net, res.assignment.flows)
        report["feasible"] = res.assignment.feasible
    _emit(report)
    return EXIT_OK


def cmd_approx(args) -> int:
    t0 = time.perf_counter()
    net = load_instance(args.input, args.format)
    oracles.exact_solve(net)
    try:
        eps = Fraction(args.epsilon)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad epsilon {args.epsilon!r}: {exc}") from exc
    if not 0 < eps < 1:
        raise UsageError("epsilon must lie strictly between 0 and 1")
    seed = _seed_from(args)
    res = fpras.approx_scheme(net, eps, seed, threads=args.threads)
    report = _base_report("approx", net)
    report.update(
        epsilon=str(eps),
        seed=seed,
        flow=_flow_dict(res.assignment.flows),
        objective=objective_value(net, res.assignment.flows),
        feasible=res.assignment.feasible,
        decimation=[r.to_json_dict() for r in res.rounds],
        wall_time_s=round(time.perf_counter() - t0, 6),
    )
    _emit(report)
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.arcs < args.nodes - 1:
        raise UsageError(f"need at least nodes-1 = {args.nodes - 1} arcs for connectivity")
    seed = _seed_from(args)
    net = gen.random_network(
        seed,
        n=args.nodes,
        m=args.arcs,
        c_max=args.cmax,
        cap_max=args.capmax,
        cost_pieces=args.cost_pieces,
        ensure_unique=args.ensure_unique,
    )
    if args.format == "dimacs" or (args.format == "auto" and net.is_linear()):
        text = emit_dimacs(net)
    else:
        text = json.dumps(network_to_json_dict(net), sort_keys=True, indent=2) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {args.output}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_bench(args) -> int:
    net = gen.random_network(
        _seed_from(args), n=args.nodes, m=args.arcs, c_max=args.cmax, cap_max=args.capmax
    )
    t0 = time.perf_counter()
    result = bp_engine.run(net, rounds=args.iters, threads=args.threads)
    dt = time.perf_counter() - t0
    report = _base_report("bench", net)
    report.update(
        rounds_used=result.rounds_used,
        rounds_per_s=round(result.executed_rounds / dt, 1) if dt > 0 else None,
        piece_stats={
            "per_round_total": result.piece_totals,
            "max_round_total": max(result.piece_totals, default=0),
        },
        wall_time_s=round(dt, 6),
    )
    _emit(report)
    return EXIT_OK


def cmd_selftest(args) -> int:
    from . import selftest

    results = selftest.run_suites(quick=args.quick)
    failed = 0
    for name, ok, detail in results:
        status = "PASS" if ok else "FAIL"
        print(f"[{status}] {name}: {detail}")
        failed += 0 if ok else 1
    print(f"{len(results) - failed}/{len(results)} suites passed")
    return EXIT_OK if failed == 0 else EXIT_OTHER


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="flowbp", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def add_io(sp):
        sp.add_argument("--input", required=True, help="instance file (DIMACS or JSON)")
        sp.add_argument("--format", choices=("auto", "dimacs", "json"), default="auto")
        sp.add_argument("--threads", type=int, default=1, help="worker cap for message rounds")

    sp = sub.add_parser("solve", help="solve by message passing")
    add_io(sp)
    sp.add_argument("--iters", default="auto", help="round count, or 'auto' for the guarantee bound")
    sp.add_argument("--patience", type=int, default=None,
                    help="heuristic early exit after this many unchanged estimates")
    sp.add_argument("--dump-messages", metavar="PATH",
                    help="write per-round message tables as JSON lines")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("check-unique", help="detect whether the optimum is unique")
    add_io(sp)
    sp.set_defaults(func=cmd_check_unique)

    sp = sub.add_parser("approx", help="randomized (1+eps)-approximation")
    add_io(sp)
    sp.add_argument("--epsilon", required=True, help="rational in (0,1), e.g. 1/2 or 0.1")
    sp.add_argument("--seed", type=int, default=None, help="RNG seed (or env FLOWBP_SEED)")
    sp.set_defaults(func=cmd_approx)

    sp = sub.add_parser("gen", help="generate a random feasible instance")
    sp.add_argument("--nodes", type=int, required=True)
    sp.add_argument("--arcs", type=int, required=True)
    sp.add_argument("--cmax", type=int, default=4)
    sp.add_argument("--capmax", type=int, default=4)
    sp.add_argument("--cost-pieces", type=int, default=1,
                    help="pieces per convex arc cost (1 = linear)")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--ensure-unique", action="store_true",
                    help="rejection-sample until the optimum is unique")
    sp.add_argument("--format", choices=("auto", "dimacs", "json"), default="auto")
    sp.add_argument("--output", help="write here instead of stdout")
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("selftest", help="run built-in oracle-equivalence suites")
    sp.add_argument("--quick", action="store_true", help="subset that finishes in seconds")
    sp.set_defaults(func=cmd_selftest)

    sp = sub.add_parser("bench", help="measure round throughput on a generated instance")
    sp.add_argument("--nodes", type=int, default=6)
    sp.add_argument("--arcs", type=int, default=10)
    sp.add_argument("--cmax", type=int, default=5)
    sp.add_argument("--capmax", type=int, default=4)
    sp.add_argument("--iters", type=int, default=200)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--threads", type=int, default=1)
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _PARSE_ERRORS as exc:
        print(json.dumps({"error": {"kind": "parse", "detail": str(exc)}}), file=sys.stdout)
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except _INFEASIBLE_ERRORS as exc:
        print(json.dumps({"error": {"kind": "infeasible", "detail": str(exc)}}))
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except RestartBudgetExceededError as exc:
        print(json.dumps({"error": {"kind": "restart-budget", "detail": str(exc)}}))
        print(f"restart budget exceeded: {exc}", file=sys.stderr)
        return EXIT_RESTART_BUDGET
    except (UsageError, FlowBpError, OSError, ValueError) as exc:
        print(json.dumps({"error": {"kind": "other", "detail": str(exc)}}))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    raise SystemExit(main())
