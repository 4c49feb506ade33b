"""Scenario documents: what the park looks like and who works in it.

Scenarios are JSON files (see README for the schema).  The embedded
``default`` scenario — two vehicles, two robots, two cleanings, and two
two-stage deliveries over a complete 4-site map — is the regression
baseline all the desk-scale checks run against.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .agents import PACKAGE_SITE, AgentKind, AgentState, make_agent
from .engine import SystemState
from .errors import NotFound, ValidationError
from .metrics import TokenLedger
from .thought_graph import NodeIdAllocator, new_graph
from .world import (
    CLEAN,
    DELIVER,
    EVENT_KINDS,
    Building,
    EnvironmentState,
    ExternalEvent,
    SiteMap,
    TaskSpec,
)

_RESERVED_ID = re.compile(r"^C\d+$")

DEFAULT_SCENARIO: dict = {
    "name": "default",
    "sites": [PACKAGE_SITE, "B1", "B2", "B3"],
    "roster": [
        {"id": "V1", "kind": "EgoVehicle", "location": PACKAGE_SITE},
        {"id": "V2", "kind": "EgoVehicle", "location": PACKAGE_SITE},
        {"id": "RA", "kind": "RobotA", "location": PACKAGE_SITE},
        {"id": "RB", "kind": "RobotB", "location": PACKAGE_SITE},
    ],
    "tasks": [
        {"kind": "Clean", "target": "B1"},
        {"kind": "Clean", "target": "B3"},
        {"kind": "Deliver", "target": "B1", "packageId": "p1"},
        {"kind": "Deliver", "target": "B2", "packageId": "p2"},
    ],
    "events": [],
    "maxTurns": 50,
    "seed": 0,
}


@dataclass
class ScenarioConfig:
    name: str
    sites: list[str]
    edges: list[tuple[str, str]]
    roster: list[dict]
    tasks: list[TaskSpec]
    events: list[ExternalEvent]
    max_turns: int
    seed: int
    document: dict = field(default_factory=dict)

    @property
    def buildings(self) -> list[str]:
        return [s for s in self.sites if s != PACKAGE_SITE]


def scenario_hash(config: ScenarioConfig) -> str:
    canonical = json.dumps(config.document, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _parse_document(doc: dict) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ValidationError("$", "scenario document must be an object")

    sites = doc.get("sites")
    if not isinstance(sites, list) or not sites or not all(isinstance(s, str) for s in sites):
        raise ValidationError("sites", "must be a non-empty list of site ids")
    if len(set(sites)) != len(sites):
        raise ValidationError("sites", "duplicate site ids")
    if PACKAGE_SITE not in sites:
        raise ValidationError("sites", f"must include {PACKAGE_SITE}")

    raw_edges = doc.get("edges")
    if raw_edges is None:
        edges = sorted(
            SiteMap.edge(a, b) for a in sites for b in sites if a < b
        )
    else:
        edges = []
        for i, pair in enumerate(raw_edges):
            if (
                not isinstance(pair, list)
                or len(pair) != 2
                or not all(isinstance(s, str) for s in pair)
            ):
                raise ValidationError(f"edges[{i}]", "must be a [site, site] pair")
            a, b = pair
            if a not in sites:
                raise ValidationError(f"edges[{i}][0]", f"unknown site {a!r}")
            if b not in sites:
                raise ValidationError(f"edges[{i}][1]", f"unknown site {b!r}")
            if a == b:
                raise ValidationError(f"edges[{i}]", "self-edges are not allowed")
            edges.append(SiteMap.edge(a, b))
        edges = sorted(set(edges))

    buildings = [s for s in sites if s != PACKAGE_SITE]

    roster_raw = doc.get("roster")
    if not isinstance(roster_raw, list) or not roster_raw:
        raise ValidationError("roster", "must be a non-empty list of agents")
    seen_ids: set[str] = set()
    roster: list[dict] = []
    for i, entry in enumerate(roster_raw):
        if not isinstance(entry, dict):
            raise ValidationError(f"roster[{i}]", "must be an object")
        aid = entry.get("id")
        if not isinstance(aid, str) or not aid:
            raise ValidationError(f"roster[{i}].id", "must be a non-empty string")
        if aid in seen_ids:
            raise ValidationError(f"roster[{i}].id", f"duplicate agent id {aid!r}")
        if _RESERVED_ID.match(aid):
            raise ValidationError(
                f"roster[{i}].id", f"{aid!r} is reserved for composites"
            )
        seen_ids.add(aid)
        kind = entry.get("kind")
        valid_kinds = [k.value for k in AgentKind if k is not AgentKind.COMPOSITE]
        if kind not in valid_kinds:
            raise ValidationError(
                f"roster[{i}].kind", f"must be one of {', '.join(valid_kinds)}"
            )
        location = entry.get("location", PACKAGE_SITE)
        if location not in sites:
            raise ValidationError(f"roster[{i}].location", f"unknown site {location!r}")
        roster.append({"id": aid, "kind": kind, "location": location})

    tasks_raw = doc.get("tasks", [])
    if not isinstance(tasks_raw, list):
        raise ValidationError("tasks", "must be a list")
    tasks: list[TaskSpec] = []
    package_ids: set[str] = set()
    for i, entry in enumerate(tasks_raw):
        if not isinstance(entry, dict):
            raise ValidationError(f"tasks[{i}]", "must be an object")
        kind = entry.get("kind")
        if kind not in (CLEAN, DELIVER):
            raise ValidationError(f"tasks[{i}].kind", f"must be {CLEAN} or {DELIVER}")
        target = entry.get("target")
        if target not in buildings:
            raise ValidationError(f"tasks[{i}].target", f"unknown building {target!r}")
        package_id = entry.get("packageId")
        if kind == DELIVER:
            if not isinstance(package_id, str) or not package_id:
                raise ValidationError(
                    f"tasks[{i}].packageId", "Deliver tasks need a package id"
                )
            if package_id in package_ids:
                raise ValidationError(
                    f"tasks[{i}].packageId", f"duplicate package id {package_id!r}"
                )
            package_ids.add(package_id)
        elif package_id is not None:
            raise ValidationError(
                f"tasks[{i}].packageId", "only Deliver tasks take a package id"
            )
        tasks.append(TaskSpec(kind, target, package_id))

    events_raw = doc.get("events", [])
    if not isinstance(events_raw, list):
        raise ValidationError("events", "must be a list")
    events: list[ExternalEvent] = []
    for i, entry in enumerate(events_raw):
        if not isinstance(entry, dict):
            raise ValidationError(f"events[{i}]", "must be an object")
        kind = entry.get("kind")
        if kind not in EVENT_KINDS:
            raise ValidationError(
                f"events[{i}].kind", f"must be one of {', '.join(sorted(EVENT_KINDS))}"
            )
        at_turn = entry.get("atTurn", 0)
        if not isinstance(at_turn, int) or at_turn < 0:
            raise ValidationError(f"events[{i}].atTurn", "must be a non-negative integer")
        payload = entry.get("payload", {})
        if not isinstance(payload, dict):
            raise ValidationError(f"events[{i}].payload", "must be an object")
        building_ref = payload.get("building")
        if kind in ("BuildingBlocked", "BuildingUnblocked"):
            if building_ref not in buildings:
                raise ValidationError(
                    f"events[{i}].payload.building", f"unknown building {building_ref!r}"
                )
        if kind == "NewTask" and payload.get("target") not in buildings:
            raise ValidationError(
                f"events[{i}].payload.target",
                f"unknown building {payload.get('target')!r}",
            )
        if kind in ("AgentDisabled", "AgentEnabled"):
            agent_ref = payload.get("agent", "")
            if agent_ref not in seen_ids and not _RESERVED_ID.match(str(agent_ref)):
                raise ValidationError(
                    f"events[{i}].payload.agent", f"unknown agent {agent_ref!r}"
                )
        events.append(ExternalEvent.from_dict(entry))

    max_turns = doc.get("maxTurns", 50)
    if not isinstance(max_turns, int) or max_turns < 1:
        raise ValidationError("maxTurns", "must be an integer >= 1")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int):
        raise ValidationError("seed", "must be an integer")

    name = doc.get("name", "unnamed")
    document = {
        "name": name,
        "sites": list(sites),
        "edges": [list(e) for e in edges],
        "roster": roster,
        "tasks": [t.to_dict() for t in tasks],
        "events": [e.to_dict() for e in events],
        "maxTurns": max_turns,
        "seed": seed,
    }
    return ScenarioConfig(
        name=name,
        sites=list(sites),
        edges=edges,
        roster=roster,
        tasks=tasks,
        events=events,
        max_turns=max_turns,
        seed=seed,
        document=document,
    )


def load_scenario(path_or_name: str) -> ScenarioConfig:
    """Load and cross-validate a scenario; "default" loads the embedded one."""
    if path_or_name == "default":
        return _parse_document(json.loads(json.dumps(DEFAULT_SCENARIO)))
    path = Path(path_or_name)
    if not path.is_file():
        raise NotFound(f"scenario file not found: {path_or_name}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError("$", f"invalid JSON: {exc}") from exc
    return _parse_document(doc)


def build_system(config: ScenarioConfig, mode: str, seed: int) -> SystemState:
    """Instantiate a runnable system for one mode from a validated config."""
    site_map = SiteMap(sites=set(config.sites), edges=set(config.edges))
    buildings = {b: Building(b) for b in config.buildings}
    packages: dict[str, str] = {}
    for task in config.tasks:
        if task.kind == CLEAN:
            buildings[task.target].needs_cleaning = True
        elif task.package_id:
            packages[task.package_id] = PACKAGE_SITE
    env = EnvironmentState(
        map=site_map,
        buildings=buildings,
        packages=packages,
        pending_tasks=list(config.tasks),
        turn=0,
        event_queue=sorted(config.events, key=lambda e: (e.at_turn, e.kind)),
    )

    alloc = NodeIdAllocator()
    agents: dict[str, AgentState] = {}
    graphs = {}
    for entry in config.roster:
        agent = make_agent(entry["id"], AgentKind(entry["kind"]), entry["location"])
        agents[agent.id] = agent
        graphs[agent.id] = new_graph(
            owner=agent.id,
            conditions=[
                f"I am {agent.id}, a {agent.kind.value} starting at {agent.location}.",
                f"My capabilities: {', '.join(sorted(agent.capabilities)) or 'none'}.",
            ],
            alloc=alloc,
            turn=0,
        )

    system = SystemState(
        agents=agents,
        graphs=graphs,
        env=env,
        mode=mode,
        seed=seed,
        alloc=alloc,
        ledger=TokenLedger(),
        scenario_hash=scenario_hash(config),
        original_ids=tuple(sorted(agents)),
    )
    return system
