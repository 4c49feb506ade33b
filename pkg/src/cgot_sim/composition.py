"""Combining agents into composites and splitting them back apart.

Physically, a combination replaces its members with one new agent holding
the union of their capabilities.  What happens to the inference graphs
depends on the run mode:

* composable mode ("cgot") — member graphs merge into one graph owned by
  the composite (disjoint union joined under a CompositionMarker); on
  split, each member resumes from its formation-time snapshot plus a
  SplitMarker summarizing what the composite decided meanwhile.
* baseline mode ("got") — graphs are left alone; members keep reasoning
  individually even while riding along.

These functions operate on the engine's system object (duck-typed: agents,
graphs, env, compositions, mode, alloc) and keep every ordering
deterministic so replays are byte-stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .actions import Action, ActionKind
from .agents import AgentKind, AgentSpec, AgentState, Capability
from .errors import (
    AlreadyCombined,
    InvalidInput,
    NotColocated,
    UnknownComposite,
)
from .thought_graph import NodeKind, ThoughtGraph, ThoughtNode
from .world import carried

CGOT = "cgot"
GOT = "got"


@dataclass
class CompositionRecord:
    composite_id: str
    members: tuple[str, ...]
    controller: str
    formed_at_turn: int
    dissolved_at_turn: int | None = None
    member_graph_snapshots: dict[str, ThoughtGraph] = field(default_factory=dict)

    @property
    def undissolved(self) -> bool:
        return self.dissolved_at_turn is None

    def to_dict(self) -> dict:
        return {
            "compositeId": self.composite_id,
            "members": list(self.members),
            "controller": self.controller,
            "formedAtTurn": self.formed_at_turn,
            "dissolvedAtTurn": self.dissolved_at_turn,
        }


def active_record(system, composite_id: str) -> CompositionRecord | None:
    for record in system.compositions:
        if record.composite_id == composite_id and record.undissolved:
            return record
    return None


def check_combine(system, member_ids: list[str]) -> str | None:
    """Why this combination cannot happen, or None when it can."""
    if len(member_ids) < 2:
        return "need at least two members"
    if len(set(member_ids)) != len(member_ids):
        return "duplicate member ids"
    states = []
    for mid in member_ids:
        agent = system.agents.get(mid)
        if agent is None:
            return f"unknown agent {mid!r}"
        states.append(agent)
    for agent in states:
        if agent.member_of is not None:
            return f"{agent.id} is already combined"
        if agent.kind is AgentKind.COMPOSITE:
            return f"{agent.id} is a composite; nesting is not supported"
        if not agent.active:
            return f"{agent.id} is not active"
        if agent.disabled:
            return f"{agent.id} is disabled"
    locations = {a.location for a in states}
    if len(locations) > 1:
        return "not-colocated: members are at different sites"
    has_robot = any(a.kind in (AgentKind.ROBOT_A, AgentKind.ROBOT_B) for a in states)
    has_carrier = any(Capability.CARRY_ROBOT in a.capabilities for a in states)
    if has_robot and not has_carrier:
        return "no member can carry a robot"
    return None


def _latest_anchor(graph: ThoughtGraph) -> int | None:
    """Merge/split attachment point: newest Output, else newest Initial."""
    outputs = graph.nodes_of_kind(NodeKind.OUTPUT)
    if outputs:
        return outputs[-1].id
    initials = graph.nodes_of_kind(NodeKind.INITIAL)
    if initials:
        return initials[-1].id
    return None


def combine(system, member_ids: list[str], turn: int) -> AgentState:
    """Replace the members with a composite agent; merge graphs in cgot mode."""
    reason = check_combine(system, member_ids)
    if reason is not None:
        if "not-colocated" in reason:
            raise NotColocated(reason)
        if "already combined" in reason:
            raise AlreadyCombined(reason)
        raise InvalidInput(reason)

    members = tuple(sorted(member_ids))
    states = [system.agents[m] for m in members]
    composite_id = f"C{len(system.compositions) + 1}"

    capabilities = frozenset().union(*(a.capabilities for a in states))
    move_cost = min(a.spec.move_cost_per_edge for a in states)
    carriers = [m for m in members if Capability.CARRY_ROBOT in system.agents[m].capabilities]
    controller = carriers[0] if carriers else members[0]

    cargo: set[str] = set()
    for agent in states:
        cargo |= agent.cargo
    composite = AgentState(
        spec=AgentSpec(
            id=composite_id,
            kind=AgentKind.COMPOSITE,
            capabilities=capabilities,
            move_cost_per_edge=move_cost,
        ),
        location=states[0].location,
        cargo=cargo,
    )

    snapshots: dict[str, ThoughtGraph] = {}
    if system.mode == CGOT:
        merged = ThoughtGraph(owner=composite_id)
        anchors: list[int] = []
        for mid in members:
            graph = system.graphs[mid]
            snapshots[mid] = graph.copy()
            anchor = _latest_anchor(graph)
            if anchor is not None:
                anchors.append(anchor)
            for node in sorted(graph.nodes.values(), key=lambda n: n.id):
                merged.nodes[node.id] = node
            merged.edges.extend(graph.edges)
        marker = ThoughtNode(
            id=system.alloc.next_id(),
            kind=NodeKind.COMPOSITION_MARKER,
            content=f"{composite_id} formed from {', '.join(members)}",
            producer=composite_id,
            turn=turn,
        )
        merged.add_node(marker, parents=anchors)
        for mid in members:
            del system.graphs[mid]
        system.graphs[composite_id] = merged

    for pid in sorted(cargo):
        system.env.packages[pid] = carried(composite_id)
    for agent in states:
        agent.active = False
        agent.member_of = composite_id
        agent.cargo = set()
        agent.transit = None

    system.agents[composite_id] = composite
    system.compositions.append(
        CompositionRecord(
            composite_id=composite_id,
            members=members,
            controller=controller,
            formed_at_turn=turn,
            member_graph_snapshots=snapshots,
        )
    )
    return composite


def check_split(system, composite_id: str) -> str | None:
    if active_record(system, composite_id) is None:
        return f"no undissolved composite {composite_id!r}"
    return None


def split(system, composite_id: str, turn: int) -> list[AgentState]:
    """Dissolve a composite; members resume at its current location."""
    record = active_record(system, composite_id)
    if record is None:
        raise UnknownComposite(f"no undissolved composite {composite_id!r}")
    composite = system.agents[composite_id]

    if system.mode == CGOT:
        merged = system.graphs[composite_id]
        decided = [
            node.content
            for node in merged.nodes_of_kind(NodeKind.OUTPUT)
            if node.producer == composite_id
        ]
        summary = (
            f"Split of {composite_id} at turn {turn}; decisions while combined: "
            + ("; ".join(decided) if decided else "none")
        )
        for mid in record.members:
            graph = record.member_graph_snapshots[mid].copy()
            anchor = _latest_anchor(graph)
            marker = ThoughtNode(
                id=system.alloc.next_id(),
                kind=NodeKind.SPLIT_MARKER,
                content=summary,
                producer=mid,
                turn=turn,
            )
            graph.add_node(marker, parents=[anchor] if anchor is not None else [])
            system.graphs[mid] = graph
        del system.graphs[composite_id]

    restored = []
    members = [system.agents[m] for m in record.members]
    for agent in members:
        agent.active = True
        agent.member_of = None
        agent.location = composite.location
        agent.transit = None
        restored.append(agent)

    for pid in sorted(composite.cargo):
        haulers = [
            a for a in members if Capability.CARRY_PACKAGE in a.capabilities
        ]
        receiver = haulers[0] if haulers else members[0]
        receiver.cargo.add(pid)
        system.env.packages[pid] = carried(receiver.id)

    del system.agents[composite_id]
    record.dissolved_at_turn = turn
    return restored


def apply_transformations(
    system, actions: list[Action], turn: int
) -> tuple[list[Action], list[tuple[Action, str]]]:
    """Run the turn's structural actions: Combines first (ordered by lowest
    member id), then Splits (by composite id). Failures become rejections,
    never exceptions — the turn proceeds."""
    applied: list[Action] = []
    rejected: list[tuple[Action, str]] = []

    combines = sorted(
        (a for a in actions if a.kind is ActionKind.COMBINE),
        key=lambda a: min(a.members),
    )
    splits = sorted(
        (a for a in actions if a.kind is ActionKind.SPLIT),
        key=lambda a: a.params[0],
    )

    for action in combines:
        reason = check_combine(system, list(action.members))
        if reason is None:
            combine(system, list(action.members), turn)
            applied.append(action)
        else:
            rejected.append((action, reason))
    for action in splits:
        reason = check_split(system, action.params[0])
        if reason is None:
            split(system, action.params[0], turn)
            applied.append(action)
        else:
            rejected.append((action, reason))
    return applied, rejected
