"""Scenario schema validation, bundled corpus integrity, and planning."""

import pytest

from dealsim.assets import AssetBundle
from dealsim.deals import DealSpec
from dealsim.planning import PlanError, build_plan
from dealsim.scenario import (
    ScenarioError,
    bundled_scenarios,
    build_world,
    list_bundled,
    load_scenario,
    ticket_deal,
    validate_scenario,
)


class TestValidation:
    def test_defaults_filled(self):
        sc = validate_scenario(ticket_deal("timelock"))
        assert sc["network"]["mode"] == "synchronous"
        assert sc["horizon"] > sc["deal"]["t0"]

    def test_unknown_protocol_rejected(self):
        sc = ticket_deal("timelock")
        sc["protocol"] = "quantum"
        with pytest.raises(ScenarioError):
            validate_scenario(sc)

    def test_unknown_strategy_rejected(self):
        sc = ticket_deal("timelock")
        sc["strategies"] = {"alice": {"name": "not_a_strategy"}}
        with pytest.raises(ScenarioError):
            validate_scenario(sc)

    def test_strategy_for_unknown_party_rejected(self):
        sc = ticket_deal("timelock")
        sc["strategies"] = {"mallory": {"name": "compliant"}}
        with pytest.raises(ScenarioError):
            validate_scenario(sc)

    def test_horizon_must_clear_timeout_structure(self):
        sc = ticket_deal("timelock")
        sc["horizon"] = sc["deal"]["t0"] + 1
        with pytest.raises(ScenarioError):
            validate_scenario(sc)

    def test_corrupt_bounded_by_f(self):
        sc = ticket_deal("cbc")
        sc["cbc"]["corrupt"] = 2  # f is 1
        with pytest.raises(ScenarioError):
            validate_scenario(sc)

    def test_deal_and_network_delta_must_agree(self):
        sc = ticket_deal("timelock")
        sc["network"]["delta"] = 7
        with pytest.raises(ScenarioError):
            validate_scenario(sc)

    def test_duplicate_deal_id_rejected_per_run(self):
        built = build_world(ticket_deal("timelock"))
        with pytest.raises(ValueError):
            built.world.register_deal("ticket-deal")


class TestBundledCorpus:
    def test_files_match_builders(self):
        for name, scenario in bundled_scenarios().items():
            on_disk = load_scenario(name)
            assert on_disk == validate_scenario(scenario), name

    def test_corpus_contains_the_required_scenarios(self):
        names = set(list_bundled())
        assert {
            "ticket_deal_timelock",
            "ticket_deal_cbc",
            "virus_alice_timelock",
            "overpay_carol_cbc",
            "silent_party_timelock",
            "silent_party_cbc",
            "naive_timeout_regression",
            "corrupt_validator_cbc",
            "pre_gst_delay_storm_cbc",
        } <= names


class TestPlanning:
    def test_broker_escrows_nothing(self):
        sc = validate_scenario(ticket_deal("timelock"))
        deal = DealSpec.from_json(sc["deal"])
        holdings = {
            p: AssetBundle.from_json(w) for p, w in sc["wallets"].items()
        }
        plan = build_plan(deal, holdings)
        assert plan.escrow_for("alice", "coin").is_empty()
        assert plan.escrow_for("bob", "ticket") == AssetBundle(
            tokens=[("ticket", "tkt1"), ("ticket", "tkt2")]
        )
        assert plan.escrow_for("carol", "coin") == AssetBundle.coins("coin", "coin", 101)

    def test_voting_lots_are_receiving_lots(self):
        sc = validate_scenario(ticket_deal("timelock"))
        deal = DealSpec.from_json(sc["deal"])
        holdings = {p: AssetBundle.from_json(w) for p, w in sc["wallets"].items()}
        plan = build_plan(deal, holdings)
        assert plan.voting_lots("bob") == [("coin", "carol")]
        assert plan.voting_lots("carol") == [("ticket", "bob")]
        assert plan.voting_lots("alice") == [("coin", "carol"), ("ticket", "bob")]

    def test_source_lots_are_outgoing_asset_lots(self):
        sc = validate_scenario(ticket_deal("timelock"))
        deal = DealSpec.from_json(sc["deal"])
        holdings = {p: AssetBundle.from_json(w) for p, w in sc["wallets"].items()}
        plan = build_plan(deal, holdings)
        assert plan.source_lots("bob") == [("ticket", "bob")]
        assert plan.source_lots("carol") == [("coin", "carol")]
        assert set(plan.source_lots("alice")) == {("coin", "carol"), ("ticket", "bob")}

    def test_infeasible_script_rejected(self):
        deal = DealSpec(
            "d",
            ("a", "b"),
            (  # a promises assets nobody ever gives it
                __import__("dealsim.deals", fromlist=["TransferSpec"]).TransferSpec(
                    "a", "b", AssetBundle.coins("x", "c", 5), 0
                ),
            ),
            t0=20,
            delta=5,
        )
        with pytest.raises(PlanError):
            build_plan(deal, {"a": AssetBundle.empty()})

    def test_final_commit_state_matches_script(self):
        sc = validate_scenario(ticket_deal("timelock"))
        deal = DealSpec.from_json(sc["deal"])
        holdings = {p: AssetBundle.from_json(w) for p, w in sc["wallets"].items()}
        plan = build_plan(deal, holdings)
        coin_final = plan.final_c[("coin", "carol")]
        assert coin_final["alice"] == AssetBundle.coins("coin", "coin", 1)
        assert coin_final["bob"] == AssetBundle.coins("coin", "coin", 100)
        ticket_final = plan.final_c[("ticket", "bob")]
        assert ticket_final["carol"] == AssetBundle(
            tokens=[("ticket", "tkt1"), ("ticket", "tkt2")]
        )
