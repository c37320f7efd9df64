"""Replay a recorded trace through fresh contract state machines.

Replay applies the trace's published entries, in order, to contracts
rebuilt from the embedded scenario.  Every entry must produce the status
the trace recorded and the terminal ownership must match the snapshot;
the first inconsistency is reported by record index.  Verdicts and costs
are then re-derived from the replayed trace, so a faithful replay yields
the original report.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

from .costs import CostReport, GasSchedule, meter
from .properties import Verdict, run_verdicts
from .trace import RunTrace


class ReplayError(ValueError):
    """The trace is internally inconsistent; names the first bad record."""


@dataclass
class ReplayReport:
    trace: RunTrace
    verdicts: List[Verdict]
    costs: CostReport
    entries_checked: int


def replay_trace(trace: RunTrace, schedule: GasSchedule = GasSchedule()) -> ReplayReport:
    from .scenario import build_world

    built = build_world(trace.scenario, seed=trace.seed)
    world = built.world
    checked = 0
    for index, event in enumerate(trace.events):
        if event.kind != "publish":
            continue
        chain = world.chains.get(event.where)
        if chain is None:
            raise ReplayError(f"record {index}: unknown chain {event.where!r}")
        if event.seq != len(chain.entries):
            raise ReplayError(
                f"record {index}: sequence {event.seq} does not follow ledger order"
            )
        local_now = event.tick + chain.skew
        status, reason, info = chain.contract.apply(
            event.payload, event.publisher, chain, local_now, world.scheme
        )
        chain.entries.append(
            {"seq": event.seq, "publisher": event.publisher, "payload": event.payload,
             "tick": event.tick, "status": status}
        )
        chain.views.append(chain.contract.view())
        checked += 1
        if status != event.status:
            raise ReplayError(
                f"record {index}: recorded {event.status} but replay produced {status}"
                + (f" ({reason})" if reason else "")
            )
    terminal = {cid: world.chains[cid].wallets.snapshot() for cid in sorted(world.chains)}
    if terminal != trace.terminal_wallets:
        raise ReplayError("terminal ownership does not match the recorded snapshot")
    resolutions = {}
    for cid in sorted(world.chains):
        contract = world.chains[cid].contract
        if hasattr(contract, "resolutions"):
            for lot, res in contract.resolutions().items():
                resolutions[f"{cid}/{lot}"] = res
    recorded = {k: (v[0], v[1]) for k, v in trace.resolutions.items()}
    replayed = {k: (v[0], v[1]) for k, v in resolutions.items()}
    if {k: v[0] for k, v in recorded.items()} != {k: v[0] for k, v in replayed.items()}:
        raise ReplayError("escrow resolutions do not match the recorded trace")
    verdicts = run_verdicts(trace)
    costs = meter(trace, schedule)
    return ReplayReport(trace, verdicts, costs, checked)
