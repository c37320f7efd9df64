"""Safety, liveness, and agreement checkers, with constructed negative controls."""

import copy

import pytest

from dealsim.properties import (
    check_agreement,
    check_safety,
    check_strong_liveness,
    check_weak_liveness,
    evaluate_run,
    run_verdicts,
)
from conftest import run_scenario_dict


class TestSafety:
    def test_all_compliant_commit_passes(self, ticket_timelock_run):
        built, trace = ticket_timelock_run
        verdict = check_safety(trace)
        assert verdict.passed

    def test_split_outcome_still_safe_for_compliant(self, virus_run):
        built, trace = virus_run
        verdict = check_safety(trace, compliant=["bob", "carol"])
        assert verdict.passed

    def test_corrupted_trace_fails_with_witness(self, ticket_timelock_run):
        built, trace = ticket_timelock_run
        bad = copy.deepcopy(trace)
        # rob compliant carol of the tickets she paid for
        bad.terminal_wallets["ticket"]["tokens"]["tkt1"] = "mallory"
        bad.terminal_wallets["ticket"]["tokens"]["tkt2"] = "mallory"
        verdict = check_safety(bad)
        assert verdict.passed is False
        assert verdict.witness and verdict.witness[0]["party"] == "carol"

    def test_no_finalize_means_everyone_nothing(self, corpus):
        built, trace = run_scenario_dict(corpus["silent_party_timelock"])
        verdict = check_safety(trace)
        assert verdict.passed

    def test_unresolved_compliant_escrow_is_an_error(self, corpus):
        built, trace = run_scenario_dict(corpus["silent_party_cbc"])
        bad = copy.deepcopy(trace)
        bad.metadata["compliant"] = ["alice", "bob", "carol"]  # pretend carol complied
        with pytest.raises(ValueError):
            check_safety(bad)


class TestWeakLiveness:
    def test_timeout_refund_within_bound(self, corpus):
        built, trace = run_scenario_dict(corpus["silent_party_timelock"])
        verdict = check_weak_liveness(trace)
        assert verdict.passed

    def test_cbc_grace_abort_within_bound(self, corpus):
        built, trace = run_scenario_dict(corpus["silent_party_cbc"])
        verdict = check_weak_liveness(trace)
        assert verdict.passed

    def test_truncated_unresolved_escrow_fails(self, ticket_timelock_run):
        built, trace = ticket_timelock_run
        bad = copy.deepcopy(trace)
        bad.resolutions["ticket/bob"] = ("active", None)
        verdict = check_weak_liveness(bad)
        assert verdict.passed is False
        assert verdict.witness[0]["lot"] == "ticket/bob"

    def test_late_resolution_fails_bound(self, ticket_timelock_run):
        built, trace = ticket_timelock_run
        bad = copy.deepcopy(trace)
        bad.resolutions["ticket/bob"] = ("committed", 10_000)
        assert check_weak_liveness(bad).passed is False


class TestStrongLiveness:
    def test_all_compliant_synchronous_run_passes(self, ticket_timelock_run):
        built, trace = ticket_timelock_run
        assert check_strong_liveness(trace).passed

    def test_declared_adversary_is_inapplicable(self, virus_run):
        built, trace = virus_run
        verdict = check_strong_liveness(trace)
        assert verdict.passed is None

    def test_pre_stabilization_abort_reported_distinctly(self, corpus):
        built, trace = run_scenario_dict(corpus["pre_gst_delay_storm_cbc"])
        verdict = check_strong_liveness(trace)
        assert verdict.passed is None
        assert "stabilization" in verdict.details

    def test_partial_payoff_fails(self, ticket_timelock_run):
        built, trace = ticket_timelock_run
        bad = copy.deepcopy(trace)
        del bad.terminal_wallets["coin"]["fungible"]["alice"]
        verdict = check_strong_liveness(bad)
        assert verdict.passed is False


class TestAgreement:
    def test_cbc_run_single_status(self, ticket_cbc_run):
        built, trace = ticket_cbc_run
        assert check_agreement(trace).passed

    def test_inapplicable_for_timelock(self, ticket_timelock_run):
        built, trace = ticket_timelock_run
        assert check_agreement(trace).passed is None

    def test_split_resolutions_fail(self, ticket_cbc_run):
        built, trace = ticket_cbc_run
        bad = copy.deepcopy(trace)
        bad.resolutions["ticket/bob"] = ("aborted", 20)
        assert check_agreement(bad).passed is False

    def test_forged_certificates_are_not_verifiable(self, corpus):
        built, trace = run_scenario_dict(corpus["corrupt_validator_cbc"])
        assert check_agreement(trace).passed
        fakes = [
            e for e in trace.publishes()
            if e.payload.get("op") == "settle" and e.status == "rejected"
        ]
        assert fakes  # the corrupt-validator strategy did try


class TestCheckerDiscipline:
    def test_checkers_are_pure(self, ticket_timelock_run):
        built, trace = ticket_timelock_run
        first = [v.to_json() for v in run_verdicts(trace)]
        second = [v.to_json() for v in run_verdicts(trace)]
        assert first == second

    def test_failing_verdicts_always_carry_witnesses(self, ticket_timelock_run):
        built, trace = ticket_timelock_run
        bad = copy.deepcopy(trace)
        bad.terminal_wallets["ticket"]["tokens"]["tkt1"] = "mallory"
        bad.terminal_wallets["ticket"]["tokens"]["tkt2"] = "mallory"
        bad.resolutions["coin/carol"] = ("committed", 9_999)
        for verdict in run_verdicts(bad):
            if verdict.passed is False:
                assert verdict.witness

    def test_evaluate_run_outcome_labels(self, corpus, ticket_timelock_run):
        built, trace = ticket_timelock_run
        assert evaluate_run(trace)["outcome"] == "committed"
        _, aborted = run_scenario_dict(corpus["silent_party_timelock"])
        assert evaluate_run(aborted)["outcome"] == "aborted"
        _, split = run_scenario_dict(corpus["virus_alice_timelock"])
        assert evaluate_run(split)["outcome"] == "mixed"
