"""Shared fixtures: completed runs of the bundled scenarios in both modes.

Full runs finish in milliseconds with the scripted backend, but many tests
inspect the same traces, so they are produced once per session.
"""

from __future__ import annotations

import json

import pytest

from cgot_sim import ScriptedBackend, build_system, load_scenario, run_to_completion

BLOCKED_B2_DOC = {
    "name": "blocked-b2",
    "sites": ["PackageSite", "B1", "B2", "B3"],
    "roster": [
        {"id": "V1", "kind": "EgoVehicle", "location": "PackageSite"},
        {"id": "V2", "kind": "EgoVehicle", "location": "PackageSite"},
        {"id": "RA", "kind": "RobotA", "location": "PackageSite"},
        {"id": "RB", "kind": "RobotB", "location": "PackageSite"},
    ],
    "tasks": [
        {"kind": "Clean", "target": "B1"},
        {"kind": "Clean", "target": "B3"},
        {"kind": "Deliver", "target": "B1", "packageId": "p1"},
        {"kind": "Deliver", "target": "B2", "packageId": "p2"},
    ],
    "events": [
        {"kind": "BuildingBlocked", "payload": {"building": "B2"}, "atTurn": 3},
        {"kind": "BuildingUnblocked", "payload": {"building": "B2"}, "atTurn": 8},
    ],
    "maxTurns": 50,
    "seed": 0,
}


class CompletedRun:
    """A finished run plus everything observed along the way."""

    def __init__(self, system, report, records):
        self.system = system
        self.report = report
        self.records = records


def full_run(scenario: str, mode: str, seed: int = 7) -> CompletedRun:
    config = load_scenario(scenario)
    system = build_system(config, mode, seed)
    records = []
    report = run_to_completion(
        system, ScriptedBackend(), config.max_turns, on_turn=records.append
    )
    return CompletedRun(system, report, records)


@pytest.fixture(scope="session")
def blocked_scenario_path(tmp_path_factory) -> str:
    path = tmp_path_factory.mktemp("scenarios") / "blocked_b2.json"
    path.write_text(json.dumps(BLOCKED_B2_DOC))
    return str(path)


@pytest.fixture(scope="session")
def default_cgot() -> CompletedRun:
    return full_run("default", "cgot")


@pytest.fixture(scope="session")
def default_got() -> CompletedRun:
    return full_run("default", "got")


@pytest.fixture(scope="session")
def blocked_cgot(blocked_scenario_path) -> CompletedRun:
    return full_run(blocked_scenario_path, "cgot")


@pytest.fixture(scope="session")
def blocked_got(blocked_scenario_path) -> CompletedRun:
    return full_run(blocked_scenario_path, "got")


# ---------------------------------------------------------------------------
# Acceptance reporting: tests register one line per criterion and the summary
# repeats them at the end of the pytest run, even with output capture on.

_CRITERION_RESULTS: dict[int, str] = {}


def record_criterion(number: int, label: str, ok: bool) -> None:
    _CRITERION_RESULTS[number] = f"criterion {number:2d} {'PASS' if ok else 'FAIL'} — {label}"
    print(_CRITERION_RESULTS[number], flush=True)
    assert ok, f"criterion {number} failed: {label}"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERION_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_CRITERION_RESULTS):
        terminalreporter.write_line(_CRITERION_RESULTS[number])
