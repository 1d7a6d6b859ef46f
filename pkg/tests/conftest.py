import datetime as dt

import pytest

from liftflow import matching, simulate as sim

#: one line per acceptance criterion, echoed after the run (see test_acceptance)
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def desk_scenario():
    """5 floors, 2 elevators, 4 residents/floor, 15 days, sigma=0.05, d=128."""
    spec = sim.BuildingSpec(
        "est-desk", elevator_count=2, floor_count=5, residents_per_floor=4,
        embedding_dim=128, noise_sigma=0.05, day_count=15, trips_per_day=2.0)
    population = sim.generate_building(spec, 7)
    events, truth = sim.simulate(spec, population, [], 7)
    return spec, population, events, truth


@pytest.fixture(scope="session")
def desk_reconstruction(desk_scenario):
    _, _, events, _ = desk_scenario
    ledger, stops = matching.reconstruct(events, 0.5, collect_stops=True)
    return ledger, stops


def all_days(spec: sim.BuildingSpec) -> frozenset:
    return frozenset(spec.start_date + dt.timedelta(days=i) for i in range(spec.day_count))
