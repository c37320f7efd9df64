"""Compliant party controllers for the timelock and certified-ledger protocols.

A controller reacts to delivered notifications and its own timers, and
acts only through the PartyContext: publishing entries and scheduling
wakeups.  All parties share the clearing-phase output (the deal and its
execution plan); each trusts only what it observes on chain.

The timelock party follows the minimum incentive-compatible behavior:
it escrows its outgoing assets, runs its scripted transfers, votes at the
lots it receives assets through, monitors the chains carrying its
outgoing assets, and forwards any vote it observes there to its own lots,
extending the path signature with its own signature.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .assets import AssetBundle, Payoff, net_payoff
from .cbc import UNDECIDED, cbc_decide, definitive_start
from .crypto import PathSignature, Vote, digest_hex, direct_vote, encode_message, extend_path
from .deals import DealSpec, is_acceptable
from .planning import DealPlan, LotId
from .timelock import vote_payload


@dataclass
class PartyConfig:
    protocol: str = "timelock"  # timelock | naive | cbc
    altruistic: bool = False
    validation_verdict: str = "accept-if-acceptable"  # or "reject"
    # CBC-only knobs:
    grace: int = 10
    patience: int = 60
    validators: Tuple[str, ...] = ()
    f: int = 0
    epoch: int = 0


class CompliantParty:
    """Shared escrow / transfer / validation phases; protocols specialize commit."""

    strategy_name = "compliant"

    def __init__(self, me: str, deal: DealSpec, plan: DealPlan, cfg: PartyConfig):
        self.me = me
        self.deal = deal
        self.plan = plan
        self.cfg = cfg
        self.my_moves = plan.moves_by(me)
        self.moves_done = 0
        self.escrow_published = False
        self.validated_at: Optional[int] = None
        self.validation_rejected = False
        self._keypair = None
        self._vote: Optional[Vote] = None

    # -- identity ------------------------------------------------------------

    def keypair(self, ctx):
        if self._keypair is None:
            self._keypair = ctx.scheme.keypair(self.me)
        return self._keypair

    def my_vote(self) -> Vote:
        if self._vote is None:
            nonce = digest_hex(encode_message("NONCE", self.deal.deal_id, self.me))[:16]
            self._vote = Vote(self.deal.deal_id, self.me, nonce)
        return self._vote

    # -- hooks a strategy may override -----------------------------------------

    def escrow_bundles(self) -> Dict[str, AssetBundle]:
        out = {}
        for chain in sorted(self.deal.chains()):
            bundle = self.plan.escrow_for(self.me, chain)
            if not bundle.is_empty():
                out[chain] = bundle
        return out

    def voting_targets(self, ctx) -> List[LotId]:
        if self.cfg.altruistic:
            return self.plan.lots()
        return self.plan.voting_lots(self.me)

    def forward_targets(self, ctx) -> List[LotId]:
        return self.plan.voting_lots(self.me)

    def forward_sources(self, ctx) -> List[LotId]:
        return self.plan.source_lots(self.me)

    def acceptability_ok(self, ctx, payoff: Payoff) -> bool:
        return is_acceptable(self.me, payoff, self.deal)

    def on_validated(self, ctx):
        pass

    def on_validation_failed(self, ctx):
        pass

    # -- lifecycle -------------------------------------------------------------

    def handle_wake(self, ctx, tag: str):
        if tag == "start":
            self.on_start(ctx)
        self.step(ctx)

    def on_start(self, ctx):
        pass

    def step(self, ctx):
        self.try_escrow(ctx)
        self.try_transfers(ctx)
        self.try_validate(ctx)

    # -- escrow phase ------------------------------------------------------------

    def ready_to_escrow(self, ctx) -> bool:
        return True

    def escrow_extras(self) -> dict:
        return {}

    def try_escrow(self, ctx):
        if self.escrow_published or not self.ready_to_escrow(ctx):
            return
        for chain, bundle in self.escrow_bundles().items():
            payload = {
                "op": "escrow",
                "deal": self.deal.deal_id,
                "party": self.me,
                "bundle": bundle.to_json(),
            }
            payload.update(self.escrow_extras())
            ctx.publish(chain, payload)
        self.escrow_published = True

    # -- transfer phase ------------------------------------------------------------

    def try_transfers(self, ctx):
        while self.moves_done < len(self.my_moves):
            move = self.my_moves[self.moves_done]
            chain, escrower = move.lot
            view = ctx.view(chain)
            lot_view = view["lots"].get(escrower)
            if lot_view is None or lot_view["resolution"] != "active":
                return
            if not self._c_bundle(chain, lot_view, self.me).covers(move.bundle):
                return
            ctx.publish(
                chain,
                {
                    "op": "transfer",
                    "deal": self.deal.deal_id,
                    "party": self.me,
                    "lot": escrower,
                    "to": move.receiver,
                    "bundle": move.bundle.to_json(),
                },
            )
            self.moves_done += 1

    @staticmethod
    def _c_bundle(chain: str, lot_view: dict, party: str) -> AssetBundle:
        fun = {
            (chain, kind): amount
            for kind, amount in lot_view["c_fun"].get(party, {}).items()
            if amount
        }
        toks = [(chain, t) for t, owner in lot_view["c_tok"].items() if owner == party]
        return AssetBundle(fun, toks)

    # -- validation phase ------------------------------------------------------------

    def deal_config_ok(self, ctx, view: dict) -> bool:
        return (
            view.get("deal") == self.deal.deal_id
            and tuple(view.get("plist", ())) == self.deal.parties
            and view.get("t0") == self.deal.t0
            and view.get("delta") == self.deal.delta
        )

    def entitlement_lots(self) -> List[LotId]:
        return [
            lot
            for lot in self.plan.lots()
            if not self.plan.entitlement(self.me, lot).is_empty()
        ]

    def try_validate(self, ctx):
        """Validate once my own transfers are done and my incoming assets sit
        properly escrowed; the prospective payoff must be acceptable.

        Only chains the party actually receives through are consulted: a
        deal participant need never observe legs of the deal it has no
        stake in.
        """
        if self.validated_at is not None or self.validation_rejected:
            return
        if not self.escrow_published or self.moves_done < len(self.my_moves):
            return
        incoming_chains = sorted({lot[0] for lot in self.entitlement_lots()})
        for lot in self.entitlement_lots():
            chain, escrower = lot
            view = ctx.view(chain)
            if not self.deal_config_ok(ctx, view):
                return
            lot_view = view["lots"].get(escrower)
            if lot_view is None or lot_view["resolution"] != "active":
                return
            if not self._c_bundle(chain, lot_view, self.me).covers(
                self.plan.entitlement(self.me, lot)
            ):
                return
        gross_in = AssetBundle.empty()
        for chain in incoming_chains:
            for escrower, lot_view in sorted(ctx.view(chain).get("lots", {}).items()):
                if lot_view["resolution"] == "active":
                    gross_in = gross_in.plus(self._c_bundle(chain, lot_view, self.me))
        gross_out = AssetBundle.empty()
        for chain, bundle in self.escrow_bundles().items():
            gross_out = gross_out.plus(bundle)
        payoff = net_payoff(gross_in, gross_out)
        if self.cfg.validation_verdict == "reject" or not self.acceptability_ok(ctx, payoff):
            self.validation_rejected = True
            self.on_validation_failed(ctx)
            return
        self.validated_at = ctx.now
        self.on_validated(ctx)

    # -- exploration support ------------------------------------------------------------

    def state_key(self) -> tuple:
        # Ticks that no longer steer behavior (like when validation finished)
        # stay out of the key so schedules that converge can be pruned.
        return (
            self.strategy_name,
            self.moves_done,
            self.escrow_published,
            self.validated_at is not None,
            self.validation_rejected,
        )


class TimelockParty(CompliantParty):
    """Votes at the lots it receives through; forwards observed votes there."""

    def __init__(self, me, deal, plan, cfg):
        super().__init__(me, deal, plan, cfg)
        self.voted_lots: set = set()
        self.forwarded: set = set()

    def on_validated(self, ctx):
        ctx.wake_at(max(ctx.now, self.deal.t0), "vote")

    def step(self, ctx):
        super().step(ctx)
        self.publish_votes(ctx)
        self.forward_votes(ctx)

    def should_vote(self, ctx) -> bool:
        return self.validated_at is not None and ctx.now >= self.deal.t0

    def publish_votes(self, ctx):
        if not self.should_vote(ctx):
            return
        for lot in self.voting_targets(ctx):
            if lot in self.voted_lots:
                continue
            chain, escrower = lot
            lot_view = ctx.view(chain)["lots"].get(escrower)
            if lot_view is None or lot_view["resolution"] != "active":
                continue
            if self.me in lot_view["voted"]:
                self.voted_lots.add(lot)
                continue
            path = direct_vote(ctx.scheme, self.keypair(ctx), self.my_vote())
            ctx.publish(chain, vote_payload(escrower, path, self.deal.deal_id))
            self.voted_lots.add(lot)

    def observed_votes(self, ctx) -> Dict[str, dict]:
        """Shortest-path version of each voter's accepted vote at watched lots."""
        seen: Dict[str, tuple] = {}
        for chain, escrower in self.forward_sources(ctx):
            lot_view = ctx.view(chain).get("lots", {}).get(escrower)
            if lot_view is None:
                continue
            for voter, path_json in sorted(lot_view["voted"].items()):
                plen = len(path_json["links"])
                if voter not in seen or plen < seen[voter][0]:
                    seen[voter] = (plen, path_json)
        return {voter: pj for voter, (_, pj) in seen.items()}

    def forward_votes(self, ctx):
        if self.validated_at is None:
            return
        targets = self.forward_targets(ctx)
        if not targets:
            return
        for voter, path_json in sorted(self.observed_votes(ctx).items()):
            if voter == self.me:
                continue
            path = PathSignature.from_json(path_json)
            if self.me in path.signers():
                continue
            for lot in targets:
                if (voter, lot) in self.forwarded:
                    continue
                chain, escrower = lot
                lot_view = ctx.view(chain)["lots"].get(escrower)
                if lot_view is None or lot_view["resolution"] != "active":
                    continue
                if voter in lot_view["voted"]:
                    self.forwarded.add((voter, lot))
                    continue
                extended = extend_path(ctx.scheme, self.keypair(ctx), path)
                ctx.publish(chain, vote_payload(escrower, extended, self.deal.deal_id))
                self.forwarded.add((voter, lot))

    def state_key(self) -> tuple:
        return super().state_key() + (
            tuple(sorted(self.voted_lots)),
            tuple(sorted(self.forwarded)),
        )


class CbcParty(CompliantParty):
    """Votes once on the shared ledger, then settles escrows with certificates."""

    def __init__(self, me, deal, plan, cfg):
        super().__init__(me, deal, plan, cfg)
        self.h: Optional[str] = None
        self.commit_sent = False
        self.abort_sent = False
        self.settled: set = set()

    def on_start(self, ctx):
        ctx.wake_at(self.cfg.patience, "patience")
        if self.deal.parties[0] == self.me:
            status, reason, info = ctx.publish(
                self.cbc_chain(ctx),
                {"op": "start_deal", "deal": self.deal.deal_id, "plist": list(self.deal.parties)},
            )
            if status == "accepted":
                self.h = info["h"]

    def cbc_chain(self, ctx) -> str:
        return "cbc"

    def ready_to_escrow(self, ctx) -> bool:
        if self.h is None:
            entries = ctx.view(self.cbc_chain(ctx)).get("entries", [])
            start = definitive_start(entries, self.deal.deal_id)
            if start is not None:
                self.h = start["h"]
        return self.h is not None

    def escrow_extras(self) -> dict:
        return {
            "h": self.h,
            "validators": list(self.cfg.validators),
            "epoch": self.cfg.epoch,
            "f": self.cfg.f,
        }

    def deal_config_ok(self, ctx, view: dict) -> bool:
        if not super().deal_config_ok(ctx, view):
            return False
        cbc = view.get("cbc")
        if cbc is None:
            return False
        return (
            cbc["h"] == self.h
            and tuple(cbc["validators"]) == tuple(self.cfg.validators)
            and cbc["f"] == self.cfg.f
        )

    def on_validated(self, ctx):
        self.publish_cbc_vote(ctx, "commit")
        ctx.wake_at(ctx.now + self.cfg.grace, "grace")

    def on_validation_failed(self, ctx):
        self.publish_cbc_vote(ctx, "abort")

    def publish_cbc_vote(self, ctx, kind: str):
        if self.h is None:
            return
        if kind == "commit" and (self.commit_sent or self.abort_sent):
            return
        if kind == "abort" and self.abort_sent:
            return
        ctx.publish(
            self.cbc_chain(ctx),
            {
                "op": kind,
                "deal": self.deal.deal_id,
                "h": self.h,
                "voter": self.me,
            },
        )
        if kind == "commit":
            self.commit_sent = True
        else:
            self.abort_sent = True

    def handle_wake(self, ctx, tag: str):
        if tag == "grace":
            self.on_grace(ctx)
        elif tag == "patience":
            self.on_patience(ctx)
        super().handle_wake(ctx, tag)

    def on_grace(self, ctx):
        if not self.commit_sent or self.abort_sent:
            return
        entries = ctx.view(self.cbc_chain(ctx)).get("entries", [])
        if cbc_decide(entries, self.deal.deal_id, self.h).status == UNDECIDED:
            self.publish_cbc_vote(ctx, "abort")

    def on_patience(self, ctx):
        if not self.commit_sent and not self.abort_sent:
            self.publish_cbc_vote(ctx, "abort")

    def step(self, ctx):
        super().step(ctx)
        self.try_settle(ctx)

    def settle_targets(self, status: str) -> List[LotId]:
        if status == "committed":
            return [
                lot
                for lot in self.plan.lots()
                if not self.plan.entitlement(self.me, lot).is_empty()
            ]
        return self.plan.escrowed_lots(self.me)

    def try_settle(self, ctx):
        if self.h is None:
            return
        entries = ctx.view(self.cbc_chain(ctx)).get("entries", [])
        try:
            decision = cbc_decide(entries, self.deal.deal_id, self.h)
        except Exception:
            return
        if decision.status == UNDECIDED:
            return
        cert = ctx.request_certificate(self.deal.deal_id, self.h)
        hops = ()
        if cert.epoch > self.cfg.epoch:
            hops = ctx.reconfig_chain()
        for lot in self.settle_targets(cert.status):
            if lot in self.settled:
                continue
            chain, escrower = lot
            lot_view = ctx.view(chain)["lots"].get(escrower)
            if lot_view is None or lot_view["resolution"] != "active":
                self.settled.add(lot)
                continue
            payload = {
                "op": "settle",
                "deal": self.deal.deal_id,
                "party": self.me,
                "lot": escrower,
                "cert": cert.to_json(),
            }
            if hops:
                payload["reconfig"] = [h.to_json() for h in hops]
            ctx.publish(chain, payload)
            self.settled.add(lot)

    def state_key(self) -> tuple:
        return super().state_key() + (
            self.h,
            self.commit_sent,
            self.abort_sent,
            tuple(sorted(self.settled)),
        )
