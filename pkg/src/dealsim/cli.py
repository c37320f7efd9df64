"""Scenario runner: single runs, campaigns, exploration, and trace replay.

Exit codes partition cleanly:

    0   every applicable property passed
    2   scenario / trace parse or validation error
    3   a property failed (or exploration / campaign found a violation)
    4   no property was applicable to the run
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

from .adversary import ExplorationBound, exhaustive_explore, random_campaign
from .costs import GasSchedule, check_asymptotics, meter
from .properties import run_verdicts
from .replay import ReplayError, replay_trace
from .scenario import ScenarioError, build_world, list_bundled, load_scenario
from .trace import RunTrace

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_PROPERTY = 3
EXIT_INAPPLICABLE = 4


def _schedule(args) -> GasSchedule:
    return GasSchedule(storage_write=args.gas_write, signature_verification=args.gas_sig)


def build_report(trace: RunTrace, schedule: GasSchedule) -> dict:
    from .deals import DealSpec, payoff_of_run

    verdicts = run_verdicts(trace)
    costs = meter(trace, schedule)
    bounds = check_asymptotics(costs)
    deal = DealSpec.from_json(trace.scenario["deal"])
    payoffs = {}
    if trace.all_resolved:
        payoffs = {p: payoff_of_run(trace, p).to_json() for p in deal.parties}
    return {
        "scenario": trace.scenario.get("name", "unnamed"),
        "protocol": trace.scenario["protocol"],
        "seed": trace.seed,
        "resolutions": {k: list(v) for k, v in sorted(trace.resolutions.items())},
        "payoffs": payoffs,
        "verdicts": [v.to_json() for v in verdicts],
        "costs": costs.to_json(),
        "bounds": [b.to_json() for b in bounds],
        "trace_digest": trace.digest(),
        "metadata": trace.metadata,
    }


def report_exit_code(report: dict) -> int:
    verdicts = report["verdicts"]
    if any(v["status"] == "fail" for v in verdicts):
        return EXIT_PROPERTY
    if all(v["status"] == "inapplicable" for v in verdicts):
        return EXIT_INAPPLICABLE
    return EXIT_OK


def render_report(report: dict) -> str:
    lines = []
    lines.append(f"scenario: {report['scenario']} ({report['protocol']}, seed {report['seed']})")
    lines.append("resolutions:")
    for lot, (res, tick) in sorted(report["resolutions"].items()):
        when = f" @ {tick}" if tick is not None else ""
        lines.append(f"  {lot}: {res.upper()}{when}")
    if report["payoffs"]:
        lines.append("payoffs:")
        for party, payoff in sorted(report["payoffs"].items()):
            inc = _bundle_str(payoff["incoming"])
            out = _bundle_str(payoff["outgoing"])
            lines.append(f"  {party}: in {inc} / out {out}")
    lines.append("properties:")
    for verdict in report["verdicts"]:
        lines.append(
            f"  {verdict['property']}: {verdict['status'].upper()} ({verdict['details']})"
        )
    lines.append("costs:")
    costs = report["costs"]
    for phase, pc in costs["phases"].items():
        lines.append(
            f"  {phase:<9} writes={pc['writes']:<4} sigver={pc['verifications']:<4}"
            f" gas={pc['gas']:<7} ticks={costs['durations'][phase]}"
        )
    lines.append(f"  gas total: {costs['gas_total']}")
    for bound in report["bounds"]:
        flag = "ok" if bound["ok"] else "VIOLATED"
        lines.append(f"  bound {bound['name']}: {bound['measured']} vs {bound['bound']} [{flag}]")
    lines.append(f"trace digest: {report['trace_digest']}")
    return "\n".join(lines)


def _bundle_str(bundle_json: dict) -> str:
    parts = [f"{c}:{k}={v}" for c, k, v in bundle_json["fungible"]]
    parts += [f"{c}:{t}" for c, t in bundle_json["tokens"]]
    return "{" + ", ".join(parts) + "}" if parts else "{}"


def cmd_run(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    schedule = _schedule(args)

    if args.explore:
        bound = ExplorationBound(max_runs=args.max_runs, max_choice_points=args.max_depth)
        result = exhaustive_explore(scenario, bound)
        if args.report == "structured":
            print(json.dumps(result.to_json(), indent=1, sort_keys=True))
        else:
            print(f"exploration: {result.verdict}")
            print(
                f"  runs={result.runs} branch_points={result.branch_points}"
                f" complete={result.complete}"
            )
            for violation in result.violations[:3]:
                print(f"  violation tape={violation['tape']}")
                for failure in violation["failures"]:
                    print(f"    {failure['property']}: {failure['details']}")
                    for item in failure["witness"]:
                        print(f"      witness: {json.dumps(item, sort_keys=True)}")
        if args.trace and result.witness_traces:
            result.witness_traces[0].dump(args.trace)
            print(f"witness trace written to {args.trace}")
        return EXIT_PROPERTY if result.verdict == "VIOLATION" else EXIT_OK

    if args.runs > 1:
        report = random_campaign([scenario], ["compliant"], args.runs, args.seed or 0)
        if args.report == "structured":
            print(json.dumps(report.to_json(), indent=1, sort_keys=True))
        else:
            print(f"campaign: {report.runs} runs, {report.violation_count} violations")
            for name, count in sorted(report.outcomes.items()):
                print(f"  {name}: {count}")
        return EXIT_PROPERTY if report.violations else EXIT_OK

    built = build_world(scenario, seed=args.seed)
    trace = built.world.run()
    report = build_report(trace, schedule)
    if args.trace:
        trace.dump(args.trace)
    if args.report == "structured":
        print(json.dumps(report, indent=1, sort_keys=True))
    else:
        print(render_report(report))
    return report_exit_code(report)


def cmd_replay(args) -> int:
    try:
        trace = RunTrace.load(args.trace_file)
    except (OSError, ValueError) as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        result = replay_trace(trace, _schedule(args))
    except ReplayError as exc:
        print(f"replay inconsistency: {exc}", file=sys.stderr)
        return EXIT_PARSE
    report = build_report(trace, _schedule(args))
    if args.report == "structured":
        print(json.dumps(report, indent=1, sort_keys=True))
    else:
        print(f"replayed {result.entries_checked} ledger entries: consistent")
        print(render_report(report))
    return report_exit_code(report)


def cmd_list(args) -> int:
    for name in list_bundled():
        print(name)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="dealsim",
        description="Deterministic simulator for multi-chain escrowed asset deals",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario (or a campaign / exploration)")
    run_p.add_argument("--scenario", required=True, help="scenario file path or bundled name")
    run_p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    run_p.add_argument("--runs", type=int, default=1, help="campaign mode: number of seeded runs")
    run_p.add_argument("--explore", action="store_true", help="exhaustive schedule exploration")
    run_p.add_argument("--max-depth", type=int, default=600, help="exploration choice-point cap")
    run_p.add_argument("--max-runs", type=int, default=100000, help="exploration run cap")
    run_p.add_argument("--report", choices=("text", "structured"), default="text")
    run_p.add_argument("--trace", default=None, help="write the run trace to this path")
    run_p.add_argument("--gas-write", type=int, default=5000)
    run_p.add_argument("--gas-sig", type=int, default=3000)
    run_p.set_defaults(func=cmd_run)

    replay_p = sub.add_parser("replay", help="re-derive verdicts from a trace file")
    replay_p.add_argument("trace_file")
    replay_p.add_argument("--report", choices=("text", "structured"), default="text")
    replay_p.add_argument("--gas-write", type=int, default=5000)
    replay_p.add_argument("--gas-sig", type=int, default=3000)
    replay_p.set_defaults(func=cmd_replay)

    list_p = sub.add_parser("list", help="list bundled scenarios")
    list_p.set_defaults(func=cmd_list)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
