"""Simulated chains and the deterministic event loop.

A world holds several independent chains, each an append-only ledger with
one resident contract, plus party controllers that react to delivered
notifications and timers.  All scheduling randomness flows through a
single choice source, so a (scenario, seed) pair fixes the entire run;
swapping in a tape-driven choice source turns the same machinery into an
exhaustive explorer.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .assets import AssetBundle
from .trace import RunTrace, TraceEvent, payload_digest

TIMER_SENDER = "@timer"


class ModelViolation(RuntimeError):
    """A schedule broke the declared network timing model."""


@dataclass
class NetworkModel:
    mode: str = "synchronous"  # synchronous | semi-synchronous
    delta: int = 5
    gst: int = 0
    pre_gst_cap: Optional[int] = None
    skew_max: int = 0
    allow_model_violation: bool = False
    latency_menu: Optional[List[int]] = None  # default: 1..delta
    # Exploration knob: before this tick, latency is pinned to the menu's
    # worst case instead of branching.  Setup phases whose schedules all
    # converge before the commit window don't blow up the search space.
    explore_from: Optional[int] = None

    def sync_menu(self) -> List[int]:
        menu = self.latency_menu or list(range(1, self.delta + 1))
        if not self.allow_model_violation and any(l > self.delta for l in menu):
            raise ModelViolation("latency menu exceeds delta in synchronous mode")
        return menu

    def pre_gst_menu(self) -> List[int]:
        cap = self.pre_gst_cap if self.pre_gst_cap is not None else 4 * self.delta
        return list(range(1, cap + 1))


class SeededChoices:
    """Uniform choices from a seeded generator; the default scheduler."""

    def __init__(self, seed: int):
        self.rng = random.Random(seed)

    def pick(self, label: tuple, options: list, world=None):
        if len(options) == 1:
            return options[0]
        return options[self.rng.randrange(len(options))]


class TapeChoices:
    """Replays a recorded choice prefix, then takes first options.

    Every pick is logged with its option count and, at branch points, the
    world's state key, which is what the exhaustive explorer prunes on.
    """

    def __init__(self, tape: List[int]):
        self.tape = list(tape)
        self.pos = 0
        self.log: List[tuple] = []  # (label, n_options, chosen, state_key | None)

    def pick(self, label: tuple, options: list, world=None):
        n = len(options)
        replaying = self.pos < len(self.tape)
        chosen = self.tape[self.pos] if replaying else 0
        if chosen >= n:
            raise IndexError(f"tape choice {chosen} out of range for {label} ({n} options)")
        key = None
        # Keys are only needed where the explorer may branch: fresh picks
        # beyond the replayed prefix.
        if n > 1 and world is not None and not replaying:
            key = (label, world.state_key())
        self.log.append((label, n, chosen, key))
        self.pos += 1
        return options[chosen]

    def chosen_prefix(self, upto: int) -> List[int]:
        return [entry[2] for entry in self.log[:upto]]


class Wallets:
    """Per-chain asset ownership outside any escrow."""

    def __init__(self, chain_id: str):
        self.chain_id = chain_id
        self.fungible: Dict[str, Dict[str, int]] = {}  # party -> kind -> amount
        self.tokens: Dict[str, str] = {}               # token -> owner

    def deposit_fungible(self, party: str, kind: str, amount: int):
        kinds = self.fungible.setdefault(party, {})
        kinds[kind] = kinds.get(kind, 0) + amount

    def set_token_owner(self, token: str, owner: str):
        self.tokens[token] = owner

    def holds(self, party: str, bundle: AssetBundle) -> bool:
        for (c, kind), amount in bundle.fungible.items():
            if self.fungible.get(party, {}).get(kind, 0) < amount:
                return False
        for c, token in bundle.tokens:
            if self.tokens.get(token) != party:
                return False
        return True

    def withdraw(self, party: str, bundle: AssetBundle):
        for (c, kind), amount in bundle.fungible.items():
            self.fungible[party][kind] -= amount
            if self.fungible[party][kind] == 0:
                del self.fungible[party][kind]
        for c, token in bundle.tokens:
            del self.tokens[token]

    def bundle_of(self, party: str) -> AssetBundle:
        fun = {
            (self.chain_id, kind): amount
            for kind, amount in self.fungible.get(party, {}).items()
            if amount
        }
        toks = [(self.chain_id, t) for t, o in self.tokens.items() if o == party]
        return AssetBundle(fun, toks)

    def snapshot(self) -> dict:
        return {
            "fungible": {
                p: {k: v for k, v in kinds.items() if v}
                for p, kinds in sorted(self.fungible.items())
                if any(kinds.values())
            },
            "tokens": dict(sorted(self.tokens.items())),
        }

    def state_key(self) -> tuple:
        return (
            tuple(
                (p, tuple(sorted((k, v) for k, v in kinds.items() if v)))
                for p, kinds in sorted(self.fungible.items())
            ),
            tuple(sorted(self.tokens.items())),
        )


class Chain:
    """One ledger: totally ordered entries applied to a resident contract."""

    def __init__(self, chain_id: str, contract, skew: int = 0):
        self.chain_id = chain_id
        self.contract = contract
        self.skew = skew
        self.wallets = Wallets(chain_id)
        self.entries: List[dict] = []
        self.views: List[dict] = []  # contract view after each entry
        self._initial_view = contract.view()
        self._key_cache: Optional[tuple] = None

    def view_at(self, frontier: int) -> dict:
        """Contract state as of entry `frontier` (-1 for the initial state)."""
        if frontier < 0 or not self.views:
            return self._initial_view
        return self.views[min(frontier, len(self.views) - 1)]

    def state_key(self) -> tuple:
        if self._key_cache is None:
            self._key_cache = (
                self.chain_id,
                len(self.entries),
                self.contract.state_key(),
                self.wallets.state_key(),
            )
        return self._key_cache

    def invalidate_key(self):
        self._key_cache = None


@dataclass(order=True)
class _Event:
    due: int
    seq: int
    kind: str = field(compare=False)
    data: tuple = field(compare=False)


class PartyContext:
    """The only surface a party controller may act through."""

    def __init__(self, world: "World", party: str):
        self._world = world
        self.me = party

    @property
    def now(self) -> int:
        return self._world.now

    @property
    def scheme(self):
        return self._world.scheme

    @property
    def network(self) -> NetworkModel:
        return self._world.network

    def chain_ids(self) -> List[str]:
        return sorted(self._world.chains)

    def view(self, chain_id: str) -> dict:
        world = self._world
        frontier = world.frontiers[self.me].get(chain_id, -1)
        return world.chains[chain_id].view_at(frontier)

    def my_wallet(self, chain_id: str) -> AssetBundle:
        return self._world.chains[chain_id].wallets.bundle_of(self.me)

    def publish(self, chain_id: str, payload: dict) -> Tuple[str, Optional[str], dict]:
        return self._world.publish(chain_id, self.me, payload)

    def wake_at(self, tick: int, tag: str):
        self._world.schedule_wake(self.me, tick, tag)

    def choose(self, label: tuple, options: list):
        """Draw a strategy decision from the run's choice source."""
        return self._world.choices.pick(label, options, self._world)

    def request_certificate(self, deal_id: str, h: str):
        service = self._world.validator_service
        if service is None:
            raise RuntimeError("no validator service in this world")
        cbc = self._world.chains[self._world.cbc_chain_id].contract
        return service.issue_certificate(cbc.entries, deal_id, h)

    def corrupt_signatures(self, message: bytes):
        service = self._world.validator_service
        if service is None:
            return []
        return service.corrupt_signatures(message)

    def reconfig_chain(self):
        service = self._world.validator_service
        return service.reconfig_chain() if service else ()


class World:
    """One simulation run: chains, parties, clock, and the event heap."""

    def __init__(
        self,
        scenario: dict,
        network: NetworkModel,
        seed: int,
        horizon: int,
        choices=None,
        scenario_digest: Optional[str] = None,
    ):
        self.scenario = scenario
        self.network = network
        self.seed = seed
        self.horizon = horizon
        self.scenario_digest = scenario_digest
        self.choices = choices if choices is not None else SeededChoices(seed)
        self.now = 0
        self.chains: Dict[str, Chain] = {}
        self.controllers: Dict[str, object] = {}
        self.monitors: Dict[str, List[str]] = {}
        self.frontiers: Dict[str, Dict[str, int]] = {}
        self.trace_events: List[TraceEvent] = []
        self.deal_ids: set = set()
        self.compliant: set = set()
        self.validator_service = None
        self.cbc_chain_id: Optional[str] = None
        self._heap: List[_Event] = []
        self._seq = 0
        self._timer_scheduled: set = set()
        self._truncated = False
        from .crypto import SignatureScheme

        self.scheme = SignatureScheme(seed=f"run-{seed}")

    # -- construction --------------------------------------------------------

    def add_chain(self, chain_id: str, contract, skew: int = 0) -> Chain:
        chain = Chain(chain_id, contract, skew)
        self.chains[chain_id] = chain
        self.monitors[chain_id] = []
        return chain

    def add_party(self, party: str, controller, monitored: List[str]):
        self.controllers[party] = controller
        self.frontiers[party] = {c: -1 for c in sorted(self.chains)}
        for chain_id in monitored:
            if party not in self.monitors[chain_id]:
                self.monitors[chain_id].append(party)
        self.schedule_wake(party, 0, "start")

    def register_deal(self, deal_id: str):
        if deal_id in self.deal_ids:
            raise ValueError(f"duplicate deal id {deal_id!r} in this run")
        self.deal_ids.add(deal_id)

    # -- scheduling ----------------------------------------------------------

    def _push(self, due: int, kind: str, data: tuple):
        self._seq += 1
        heapq.heappush(self._heap, _Event(due, self._seq, kind, data))

    def schedule_wake(self, party: str, tick: int, tag: str):
        self._push(max(tick, self.now), "wake", (party, tag))

    def schedule_lot_timeout(self, chain_id: str, lot: str, tick: int):
        key = (chain_id, lot)
        if key not in self._timer_scheduled:
            self._timer_scheduled.add(key)
            self._push(tick, "timer", (chain_id, lot))

    def _latency(self, chain_id: str, seq: int, monitor: str, publish_tick: int) -> int:
        net = self.network
        if net.mode == "semi-synchronous" and publish_tick < net.gst:
            menu = net.pre_gst_menu()
            lat = self.choices.pick(("lat", chain_id, seq, monitor), menu, self)
            return min(publish_tick + lat, net.gst + net.delta) - publish_tick
        menu = net.sync_menu()
        if net.explore_from is not None and publish_tick < net.explore_from:
            lat = max(menu)
        else:
            lat = self.choices.pick(("lat", chain_id, seq, monitor), menu, self)
        if lat > net.delta and not net.allow_model_violation:
            raise ModelViolation(f"latency {lat} exceeds delta {net.delta}")
        return lat

    # -- the ledger operation ------------------------------------------------

    def publish(self, chain_id: str, publisher: str, payload: dict) -> Tuple[str, Optional[str], dict]:
        if chain_id not in self.chains:
            raise ValueError(f"unknown chain {chain_id!r}")
        chain = self.chains[chain_id]
        chain.invalidate_key()
        seq = len(chain.entries)
        local_now = self.now + chain.skew
        status, reason, info = chain.contract.apply(
            payload, publisher, chain, local_now, self.scheme
        )
        entry = {
            "seq": seq,
            "publisher": publisher,
            "payload": payload,
            "tick": self.now,
            "status": status,
        }
        chain.entries.append(entry)
        chain.views.append(chain.contract.view())
        self.trace_events.append(
            TraceEvent(
                tick=self.now,
                where=chain_id,
                kind="publish",
                status=status,
                payload=payload,
                seq=seq,
                publisher=publisher,
                reason=reason,
                info=dict(info),
            )
        )
        if publisher in self.frontiers:
            self.frontiers[publisher][chain_id] = seq
        for monitor in self.monitors[chain_id]:
            if monitor == publisher:
                continue
            lat = self._latency(chain_id, seq, monitor, self.now)
            self._push(self.now + max(1, lat), "notify", (monitor, chain_id, seq))
        if status == "accepted":
            self._after_accept(chain_id, payload, info)
        return status, reason, info

    def _after_accept(self, chain_id: str, payload: dict, info: dict):
        contract = self.chains[chain_id].contract
        if payload.get("op") == "escrow" and getattr(contract, "protocol", None) in (
            "timelock",
            "naive",
        ):
            due = contract.t0 + len(contract.plist) * contract.delta
            self.schedule_lot_timeout(chain_id, info["lot"], due)

    def read_state(self, chain_id: str, observer: str) -> dict:
        frontier = self.frontiers[observer].get(chain_id, -1)
        return self.chains[chain_id].view_at(frontier)

    # -- the loop --------------------------------------------------------------

    def run(self) -> RunTrace:
        initial = {cid: self.chains[cid].wallets.snapshot() for cid in sorted(self.chains)}
        while self._heap:
            event = heapq.heappop(self._heap)
            if event.due > self.horizon:
                self._truncated = True
                break
            self.now = max(self.now, event.due)
            if event.kind == "wake":
                party, tag = event.data
                self.trace_events.append(
                    TraceEvent(self.now, party, "wake", "info", {"tag": tag})
                )
                self.controllers[party].handle_wake(PartyContext(self, party), tag)
            elif event.kind == "notify":
                party, chain_id, seq = event.data
                front = self.frontiers[party]
                front[chain_id] = max(front[chain_id], seq)
                self.trace_events.append(
                    TraceEvent(
                        self.now, party, "notify", "info", {"chain": chain_id, "seq": seq}
                    )
                )
                self.controllers[party].step(PartyContext(self, party))
            elif event.kind == "timer":
                chain_id, lot = event.data
                contract = self.chains[chain_id].contract
                if lot in contract.unresolved_lots():
                    self.publish(
                        chain_id,
                        TIMER_SENDER,
                        {"op": "timeout", "deal": contract.deal_id, "lot": lot},
                    )
        return self._build_trace(initial)

    def _build_trace(self, initial) -> RunTrace:
        terminal = {cid: self.chains[cid].wallets.snapshot() for cid in sorted(self.chains)}
        resolutions = {}
        for cid in sorted(self.chains):
            contract = self.chains[cid].contract
            if hasattr(contract, "resolutions"):
                for lot, res in contract.resolutions().items():
                    resolutions[f"{cid}/{lot}"] = res
        unresolved = [k for k, (res, _) in resolutions.items() if res == "active"]
        if self.scenario_digest is None:
            self.scenario_digest = payload_digest(self.scenario)
        metadata = {
            "scenario_digest": self.scenario_digest,
            "truncated": self._truncated,
            "unresolved": unresolved,
            "compliant": sorted(self.compliant),
            "liveness_failure": bool(
                unresolved
                and self.network.mode == "synchronous"
                and self.compliant == set(self.scenario.get("deal", {}).get("parties", []))
            ),
            "final_tick": self.now,
        }
        return RunTrace(
            scenario=self.scenario,
            seed=self.seed,
            events=self.trace_events,
            initial_wallets=initial,
            terminal_wallets=terminal,
            resolutions=resolutions,
            metadata=metadata,
        )

    # -- exploration support ----------------------------------------------------

    def state_key(self) -> tuple:
        return (
            tuple((e.due, e.seq, e.kind, e.data) for e in sorted(self._heap)),
            tuple(self.chains[c].state_key() for c in sorted(self.chains)),
            tuple(
                (p, tuple(sorted(fr.items()))) for p, fr in sorted(self.frontiers.items())
            ),
            tuple(
                (p, self.controllers[p].state_key()) for p in sorted(self.controllers)
            ),
        )
