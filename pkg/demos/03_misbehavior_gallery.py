#!/usr/bin/env python3
# What deviation buys you: nothing good.  Three famous misbehaviors, each
# leaving every rule-following party with an acceptable outcome while the
# deviator foots whatever bill there is.

from dealsim.deals import payoff_of_run, wallet_delta_payoff
from dealsim.properties import check_safety, check_weak_liveness
from dealsim.scenario import build_world, load_scenario


def show(name, compliant):
    print("=" * 64)
    scenario = load_scenario(name)
    built = build_world(scenario)
    trace = built.world.run()
    print(f"{name}  (deviating: "
          f"{sorted(set(built.deal.parties) - set(compliant))})")
    for lot, (resolution, tick) in sorted(trace.resolutions.items()):
        print(f"  {lot}: {resolution}" + (f" at {tick}" if tick is not None else ""))
    for party in built.deal.parties:
        tag = "compliant" if party in compliant else "DEVIATING"
        print(f"  {party:>6} ({tag}): {wallet_delta_payoff(trace, party)}")
    print("  safety for compliant parties:",
          "pass" if check_safety(trace, compliant=compliant).passed else "FAIL")
    print("  weak liveness:",
          "pass" if check_weak_liveness(trace).passed else "FAIL")


# A broker goes silent toward one side mid-deal.  Bob's escrow times out
# and refunds; Carol is paid in full; the broker pays Carol out of its own
# inventory without ever collecting from Bob.
show("virus_alice_timelock", compliant=["bob", "carol"])

# A buyer sends 1001 coins where 101 were agreed, then votes to commit
# with everyone else.  The run is neither all nor nothing, yet every
# compliant party ends up at least as well off as promised: the broker
# banks a 901-coin commission.
show("overpay_carol_cbc", compliant=["alice", "bob"])

# A party simply stops before voting.  Timeouts (timelock) or grace-period
# abort votes (shared ledger) unwind the escrows.
show("silent_party_timelock", compliant=["alice", "bob"])
show("silent_party_cbc", compliant=["alice", "bob"])
print("=" * 64)
print("The silent party's own escrow on the shared-ledger run stays locked:")
print("nobody else is obliged to spend gas refunding a deviator.")
