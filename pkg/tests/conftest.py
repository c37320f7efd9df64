import pytest

from dealsim.scenario import build_world, bundled_scenarios


@pytest.fixture(scope="session")
def corpus():
    return bundled_scenarios()


def run_scenario_dict(scenario, seed=None):
    built = build_world(scenario, seed=seed)
    trace = built.world.run()
    return built, trace


@pytest.fixture(scope="session")
def ticket_timelock_run(corpus):
    return run_scenario_dict(corpus["ticket_deal_timelock"])


@pytest.fixture(scope="session")
def ticket_cbc_run(corpus):
    return run_scenario_dict(corpus["ticket_deal_cbc"])


@pytest.fixture(scope="session")
def virus_run(corpus):
    return run_scenario_dict(corpus["virus_alice_timelock"])
