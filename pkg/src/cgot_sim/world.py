"""Park environment: sites, buildings, packages, tasks, and external events.

The environment advances through :func:`step_environment`, which is a pure
function: it copies its inputs, applies due events first (so an emergency
takes effect in the same turn's execution), then applies agent actions in
actor-id order with a defensive validity re-check.  Invalid actions are
rejected as data, never as exceptions.

Package locations are tagged strings so the whole state stays trivially
JSON-serializable:

    "PackageSite"      at the depot
    "entrance:B1"      dropped at a building entrance (delivery stage 1)
    "inside:B1"        carried inside (delivery stage 2)
    "carried:V1"       in some agent's cargo
"""

from __future__ import annotations

import json
import re
from collections import deque
from dataclasses import dataclass, field, replace

from .actions import Action, ActionKind
from .agents import PACKAGE_SITE, AgentState, Transit, can_perform

CLEAN = "Clean"
DELIVER = "Deliver"

EVENT_KINDS = frozenset(
    {
        "BuildingBlocked",
        "BuildingUnblocked",
        "NewTask",
        "AgentDisabled",
        "AgentEnabled",
        "HumanInstruction",
    }
)

_INSTRUCTION_RE = re.compile(r"^\s*(clean|deliver)\s+(\S+)\s*$", re.IGNORECASE)


def entrance(building_id: str) -> str:
    return f"entrance:{building_id}"


def inside(building_id: str) -> str:
    return f"inside:{building_id}"


def carried(agent_id: str) -> str:
    return f"carried:{agent_id}"


def carrier_of(location: str) -> str | None:
    """Agent id holding the package, or None if it is on the ground."""
    if location.startswith("carried:"):
        return location.split(":", 1)[1]
    return None


@dataclass
class SiteMap:
    """Undirected site graph.  Edge cost is uniform; agents scale it by
    their own move cost per edge."""

    sites: set[str]
    edges: set[tuple[str, str]]
    blocked: set[str] = field(default_factory=set)

    @staticmethod
    def edge(a: str, b: str) -> tuple[str, str]:
        return (a, b) if a <= b else (b, a)

    @classmethod
    def complete(cls, sites: list[str]) -> "SiteMap":
        pairs = {
            cls.edge(a, b) for a in sites for b in sites if a < b
        }
        return cls(sites=set(sites), edges=pairs)

    def neighbors(self, site: str) -> list[str]:
        out = []
        for a, b in self.edges:
            if a == site:
                out.append(b)
            elif b == site:
                out.append(a)
        return sorted(out)

    def is_blocked(self, site: str) -> bool:
        return site in self.blocked

    def distances_from(self, origin: str) -> dict[str, int]:
        """BFS hop counts from origin, never routing through blocked sites.

        The origin itself is allowed to be blocked (an agent standing in a
        blocked site may still leave), but blocked sites are neither
        traversed nor reported as reachable destinations.
        """
        dist = {origin: 0}
        queue = deque([origin])
        while queue:
            cur = queue.popleft()
            for nxt in self.neighbors(cur):
                if nxt in dist or nxt in self.blocked:
                    continue
                dist[nxt] = dist[cur] + 1
                queue.append(nxt)
        return dist

    def next_hop(self, origin: str, dest: str) -> str | None:
        """First step of a shortest unblocked path, ties to the lowest
        neighbor id; None when dest is unreachable."""
        if dest == origin or dest in self.blocked:
            return None
        back = self.distances_from(dest)
        best: str | None = None
        for n in self.neighbors(origin):
            if n in self.blocked or n not in back:
                continue
            if best is None or (back[n], n) < (back[best], best):
                best = n
        return best

    def copy(self) -> "SiteMap":
        return SiteMap(set(self.sites), set(self.edges), set(self.blocked))

    def to_dict(self) -> dict:
        return {
            "sites": sorted(self.sites),
            "edges": [list(e) for e in sorted(self.edges)],
            "blocked": sorted(self.blocked),
        }


@dataclass
class Building:
    id: str
    needs_cleaning: bool = False
    cleaned: bool = False
    delivery_stage1_done: bool = False
    delivery_stage2_done: bool = False

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "needsCleaning": self.needs_cleaning,
            "cleaned": self.cleaned,
            "deliveryStage1Done": self.delivery_stage1_done,
            "deliveryStage2Done": self.delivery_stage2_done,
        }


@dataclass(frozen=True)
class TaskSpec:
    kind: str  # Clean | Deliver
    target: str
    package_id: str | None = None

    def to_dict(self) -> dict:
        return {"kind": self.kind, "target": self.target, "packageId": self.package_id}


@dataclass(frozen=True)
class ExternalEvent:
    kind: str
    payload: tuple[tuple[str, str], ...]  # sorted key/value pairs, hashable
    at_turn: int = 0

    @classmethod
    def make(
        cls,
        kind: str,
        payload: dict[str, str] | None = None,
        at_turn: int = 0,
        **extra: str,
    ) -> "ExternalEvent":
        # Payload may be given as a dict or as keywords; the dict form is
        # required when a payload key shadows a parameter name ("kind").
        merged = {str(k): str(v) for k, v in dict(payload or {}).items()}
        merged.update({k: str(v) for k, v in extra.items()})
        return cls(kind=kind, payload=tuple(sorted(merged.items())), at_turn=at_turn)

    @property
    def data(self) -> dict[str, str]:
        return dict(self.payload)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "payload": self.data, "atTurn": self.at_turn}

    @classmethod
    def from_dict(cls, raw: dict) -> "ExternalEvent":
        return cls.make(
            str(raw["kind"]),
            dict(raw.get("payload", {})),
            at_turn=int(raw.get("atTurn", 0)),
        )


@dataclass
class EnvironmentState:
    map: SiteMap
    buildings: dict[str, Building]
    packages: dict[str, str]  # package id -> tagged location
    pending_tasks: list[TaskSpec]
    turn: int = 0
    event_queue: list[ExternalEvent] = field(default_factory=list)

    def copy(self) -> "EnvironmentState":
        return EnvironmentState(
            map=self.map.copy(),
            buildings={k: replace(v) for k, v in self.buildings.items()},
            packages=dict(self.packages),
            pending_tasks=list(self.pending_tasks),
            turn=self.turn,
            event_queue=list(self.event_queue),
        )

    def to_dict(self) -> dict:
        return {
            "map": self.map.to_dict(),
            "buildings": {k: b.to_dict() for k, b in sorted(self.buildings.items())},
            "packages": dict(sorted(self.packages.items())),
            "pendingTasks": [t.to_dict() for t in self.pending_tasks],
            "turn": self.turn,
            "eventQueue": [e.to_dict() for e in self.event_queue],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class EventOutcome:
    event: ExternalEvent
    applied: bool
    reason: str | None = None

    def to_dict(self) -> dict:
        out = {"event": self.event.to_dict(), "applied": self.applied}
        if self.reason:
            out["reason"] = self.reason
        return out


@dataclass(frozen=True)
class ActionOutcome:
    action: Action
    executed: bool
    reason: str | None = None

    def to_dict(self) -> dict:
        out = {
            "actor": self.action.actor,
            "action": self.action.text(),
            "executed": self.executed,
        }
        if self.reason:
            out["reason"] = self.reason
        return out


@dataclass
class StepResult:
    env: EnvironmentState
    agents: dict[str, AgentState]
    event_outcomes: list[EventOutcome]
    action_outcomes: list[ActionOutcome]
    arrivals: list[tuple[str, str]]  # (agent id, site) transits completed


def fresh_package_id(env: EnvironmentState) -> str:
    """Next unused p<n> id, deterministic for a given state."""
    top = 0
    for pid in env.packages:
        m = re.fullmatch(r"p(\d+)", pid)
        if m:
            top = max(top, int(m.group(1)))
    return f"p{top + 1}"


def translate_instruction(text: str) -> tuple[str, str] | None:
    """Map free-text 'clean <b>' / 'deliver <b>' to a task kind + target."""
    m = _INSTRUCTION_RE.match(text)
    if not m:
        return None
    verb = m.group(1).lower()
    return (CLEAN if verb == "clean" else DELIVER, m.group(2))


def _apply_event(
    env: EnvironmentState, agents: dict[str, AgentState], event: ExternalEvent
) -> EventOutcome:
    """Apply one event in place; rejections come back as data."""
    data = event.data
    kind = event.kind
    if kind not in EVENT_KINDS:
        return EventOutcome(event, False, f"unknown event kind {kind!r}")

    if kind in ("BuildingBlocked", "BuildingUnblocked"):
        target = data.get("building", "")
        if target not in env.buildings:
            return EventOutcome(event, False, f"unknown building {target!r}")
        if kind == "BuildingBlocked":
            env.map.blocked.add(target)
        else:
            env.map.blocked.discard(target)
        return EventOutcome(event, True)

    if kind in ("AgentDisabled", "AgentEnabled"):
        target = data.get("agent", "")
        agent = agents.get(target)
        if agent is None:
            return EventOutcome(event, False, f"unknown agent {target!r}")
        agent.disabled = kind == "AgentDisabled"
        return EventOutcome(event, True)

    if kind == "HumanInstruction":
        translated = translate_instruction(data.get("text", ""))
        if translated is None:
            return EventOutcome(event, False, f"unintelligible instruction {data.get('text')!r}")
        task_kind, target = translated
        proxy = ExternalEvent.make(
            "NewTask", {"kind": task_kind, "target": target}, at_turn=event.at_turn
        )
        inner = _apply_event(env, agents, proxy)
        return EventOutcome(event, inner.applied, inner.reason)

    # NewTask
    task_kind = data.get("kind", "")
    target = data.get("target", "")
    if task_kind not in (CLEAN, DELIVER):
        return EventOutcome(event, False, f"unknown task kind {task_kind!r}")
    if target not in env.buildings:
        return EventOutcome(event, False, f"unknown building {target!r}")
    package_id = None
    if task_kind == DELIVER:
        package_id = fresh_package_id(env)
        env.packages[package_id] = PACKAGE_SITE
    else:
        env.buildings[target].needs_cleaning = True
    env.pending_tasks.append(TaskSpec(task_kind, target, package_id))
    return EventOutcome(event, True)


def apply_event(
    env: EnvironmentState, agents: dict[str, AgentState], event: ExternalEvent
) -> tuple[EnvironmentState, dict[str, AgentState], EventOutcome]:
    """Pure wrapper around the in-place event application."""
    env2 = env.copy()
    agents2 = {k: a.copy() for k, a in agents.items()}
    outcome = _apply_event(env2, agents2, event)
    return env2, agents2, outcome


def check_action(
    env: EnvironmentState, agents: dict[str, AgentState], action: Action
) -> str | None:
    """Reason the action cannot run right now, or None when it can.

    Shared between the Conclude validation pass and the execution phase's
    defensive re-check (the environment may have shifted under an accepted
    action when a same-turn event lands first).
    """
    agent = agents.get(action.actor)
    if agent is None:
        return f"unknown actor {action.actor!r}"
    if agent.disabled:
        return "agent disabled"
    if action.kind in (ActionKind.COMBINE, ActionKind.SPLIT):
        return None  # structural actions are vetted by the composition layer
    if not can_perform(agent, action):
        return "capability or cargo mismatch"

    if action.kind == ActionKind.WAIT:
        return None

    if action.kind == ActionKind.MOVE:
        dest = action.target
        if dest not in env.map.sites:
            return f"unknown site {dest!r}"
        if dest == agent.location:
            return "already at destination"
        if env.map.is_blocked(dest):
            return f"site {dest} is blocked"
        if env.map.next_hop(agent.location, dest) is None:
            return f"no route to {dest}"
        return None

    if action.kind == ActionKind.PICKUP_PACKAGE:
        pid = action.package
        loc = env.packages.get(pid)
        if loc is None:
            return f"unknown package {pid!r}"
        if loc != agent.location and loc != entrance(agent.location):
            return f"package {pid} not here"
        return None

    if action.kind == ActionKind.DROP_PACKAGE:
        return None  # cargo membership already checked by can_perform

    if action.kind == ActionKind.CARRY_INSIDE:
        pid, target = action.params[0], action.params[1]
        if target not in env.buildings:
            return f"unknown building {target!r}"
        if env.map.is_blocked(target):
            return f"site {target} is blocked"
        if env.packages.get(pid) != entrance(target):
            return f"package {pid} not at {target} entrance"
        if not env.buildings[target].delivery_stage1_done:
            return "stage 1 not complete"
        if env.buildings[target].delivery_stage2_done:
            return "already delivered inside"
        return None

    if action.kind == ActionKind.CLEAN:
        target = action.target
        if target not in env.buildings:
            return f"unknown building {target!r}"
        if env.map.is_blocked(target):
            return f"site {target} is blocked"
        b = env.buildings[target]
        if not b.needs_cleaning:
            return "does not need cleaning"
        if b.cleaned:
            return "already cleaned"
        return None

    return f"unhandled action kind {action.kind}"


def _execute(
    env: EnvironmentState,
    agents: dict[str, AgentState],
    action: Action,
    arrivals: list[tuple[str, str]],
) -> None:
    """Apply one pre-validated action in place."""
    agent = agents[action.actor]

    if action.kind == ActionKind.MOVE:
        dest = action.target
        transit = agent.transit
        if transit is None or transit.dest != dest:
            transit = Transit(dest=dest, remaining=agent.spec.move_cost_per_edge)
        transit = Transit(dest=transit.dest, remaining=transit.remaining - 1)
        if transit.remaining <= 0:
            agent.location = dest
            agent.transit = None
            arrivals.append((agent.id, dest))
        else:
            agent.transit = transit

    elif action.kind == ActionKind.PICKUP_PACKAGE:
        pid = action.package
        agent.cargo.add(pid)
        env.packages[pid] = carried(agent.id)

    elif action.kind == ActionKind.DROP_PACKAGE:
        pid = action.package
        agent.cargo.discard(pid)
        if agent.location in env.buildings:
            env.packages[pid] = entrance(agent.location)
            env.buildings[agent.location].delivery_stage1_done = True
        else:
            env.packages[pid] = agent.location

    elif action.kind == ActionKind.CARRY_INSIDE:
        pid, target = action.params[0], action.params[1]
        env.packages[pid] = inside(target)
        env.buildings[target].delivery_stage2_done = True

    elif action.kind == ActionKind.CLEAN:
        env.buildings[action.target].cleaned = True

    # Wait: nothing to do.


def step_environment(
    env: EnvironmentState,
    agents: dict[str, AgentState],
    actions: list[Action],
    injected_events: list[ExternalEvent] | None = None,
) -> StepResult:
    """One execution phase: due events first, then actions in actor-id order.

    Pure with respect to its inputs; the returned state is fresh copies.
    Scheduled events whose turn has come are drained from the queue.
    """
    env = env.copy()
    agents = {k: a.copy() for k, a in agents.items()}

    due = [e for e in env.event_queue if e.at_turn <= env.turn]
    env.event_queue = [e for e in env.event_queue if e.at_turn > env.turn]
    if injected_events:
        due = due + list(injected_events)

    event_outcomes = [_apply_event(env, agents, e) for e in due]

    arrivals: list[tuple[str, str]] = []
    action_outcomes: list[ActionOutcome] = []
    for action in sorted(actions, key=lambda a: a.actor):
        if action.kind in (ActionKind.COMBINE, ActionKind.SPLIT):
            action_outcomes.append(
                ActionOutcome(action, False, "structural action handled pre-execution")
            )
            continue
        reason = check_action(env, agents, action)
        if reason is not None:
            action_outcomes.append(ActionOutcome(action, False, reason))
            continue
        _execute(env, agents, action, arrivals)
        action_outcomes.append(ActionOutcome(action, True))

    env.turn += 1
    return StepResult(env, agents, event_outcomes, action_outcomes, arrivals)


def all_tasks_complete(env: EnvironmentState) -> bool:
    """Every Clean target cleaned and every Deliver target through both stages."""
    for task in env.pending_tasks:
        b = env.buildings.get(task.target)
        if b is None:
            return False
        if task.kind == CLEAN and not b.cleaned:
            return False
        if task.kind == DELIVER and not (
            b.delivery_stage1_done and b.delivery_stage2_done
        ):
            return False
    return True
