"""The turn loop: Inference, Conclude, Execution.

Each turn:

(a) every decision unit infers once, in id order, seeing the committed
    end-of-last-turn environment plus the raw decisions of units that
    already went this turn;
(b) the Conclude pass parses the proposed action texts, validates them,
    and resolves exclusive-resource conflicts in favor of the lowest
    actor id;
(c) Combine/Split actions restructure the roster (and, in composable
    mode, the thought graphs);
(d) the environment steps: due events land first, then the surviving
    physical actions run in actor-id order.

Which agents count as decision units is the only thing the two run modes
disagree about.  In composable mode ("cgot") it is the active roster —
composites included, each costing a single inference call.  In baseline
mode ("got") every non-disabled original agent keeps inferring by itself
even while riding inside a composite; the composite's designated
controller answers for the composite body and the passengers just Wait.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .actions import Action, ActionKind, parse_action, wait
from .agents import AgentState, can_perform
from .backend import (
    AgentView,
    InferenceRequest,
    PeerDecision,
    ScriptedBackend,
    SubjectView,
    build_prompt,
    subject_view_of,
)
from .composition import (
    GOT,
    CompositionRecord,
    active_record,
    apply_transformations,
    check_combine,
    check_split,
)
from .errors import BackendUnavailable, ParseFailure
from .metrics import RunReport, TokenLedger, per_turn_totals
from .thought_graph import NodeIdAllocator, NodeKind, ThoughtGraph, append_round
from .world import (
    EnvironmentState,
    EventOutcome,
    ExternalEvent,
    all_tasks_complete,
    check_action,
    step_environment,
)


@dataclass
class DecisionSet:
    turn: int
    accepted: list[Action]
    rejected: list[tuple[Action, str]]

    def to_dict(self) -> dict:
        return {
            "turn": self.turn,
            "accepted": [{"actor": a.actor, "action": a.text()} for a in self.accepted],
            "rejected": [
                {"actor": a.actor, "action": a.text(), "reason": reason}
                for a, reason in self.rejected
            ],
        }


@dataclass(frozen=True)
class ProposedAction:
    decider_id: str
    actor_id: str
    text: str


@dataclass
class SystemState:
    agents: dict[str, AgentState]
    graphs: dict[str, ThoughtGraph]
    env: EnvironmentState
    mode: str
    seed: int
    alloc: NodeIdAllocator
    ledger: TokenLedger = field(default_factory=TokenLedger)
    compositions: list[CompositionRecord] = field(default_factory=list)
    scenario_hash: str = ""
    original_ids: tuple[str, ...] = ()
    recent_events: tuple[str, ...] = ()
    events_handled: int = 0
    active_per_turn: list[int] = field(default_factory=list)
    substitutions: list[dict] = field(default_factory=list)


@dataclass
class TurnRecord:
    """One structured log record per completed turn."""

    turn: int
    mode: str
    units: list[str]
    calls: list[dict]
    decisions: DecisionSet
    transformations: list[str]
    event_outcomes: list[EventOutcome]
    action_outcomes: list[dict]
    arrivals: list[tuple[str, str]]
    env_diff: dict
    graphs_ok: bool
    tokens_turn: int

    def to_dict(self) -> dict:
        return {
            "turn": self.turn,
            "mode": self.mode,
            "units": list(self.units),
            "calls": list(self.calls),
            "decisions": self.decisions.to_dict(),
            "transformations": list(self.transformations),
            "events": [e.to_dict() for e in self.event_outcomes],
            "actions": list(self.action_outcomes),
            "arrivals": [[a, s] for a, s in self.arrivals],
            "envDiff": self.env_diff,
            "graphsOk": self.graphs_ok,
            "tokensTurn": self.tokens_turn,
        }


def inference_units(system: SystemState) -> list[AgentState]:
    """Who gets an inference call this turn, in id order.

    Disabled agents are skipped in both modes: a disabled agent cannot act,
    so no tokens are spent on it.
    """
    if system.mode == GOT:
        return [
            system.agents[aid]
            for aid in sorted(system.original_ids)
            if not system.agents[aid].disabled
        ]
    return [
        agent
        for _, agent in sorted(system.agents.items())
        if agent.active and not agent.disabled
    ]


def physical_units(system: SystemState) -> list[AgentState]:
    """Bodies on the map: active, enabled agents (composites included)."""
    return [
        agent
        for _, agent in sorted(system.agents.items())
        if agent.active and not agent.disabled
    ]


def members_of(system: SystemState, composite_id: str) -> list[AgentState]:
    record = active_record(system, composite_id)
    if record is None:
        return []
    return [system.agents[m] for m in record.members]


def _resolve_subject(
    system: SystemState, unit: AgentState
) -> tuple[AgentState, bool]:
    """The physical body this unit answers for, and whether it controls it."""
    if unit.member_of is not None:
        record = active_record(system, unit.member_of)
        if record is not None:
            return system.agents[record.composite_id], record.controller == unit.id
    return unit, True


def _resource_keys(action: Action) -> list[tuple[str, str]]:
    if action.kind in (
        ActionKind.PICKUP_PACKAGE,
        ActionKind.DROP_PACKAGE,
        ActionKind.CARRY_INSIDE,
    ):
        return [("package", action.package)]
    if action.kind is ActionKind.COMBINE:
        return [("member", m) for m in action.members]
    return []


def conclude(
    proposals: list[ProposedAction], system: SystemState, turn: int
) -> DecisionSet:
    """Parse, validate, and conflict-resolve the turn's proposals."""
    rejected: list[tuple[Action, str]] = []
    parsed: list[Action] = []
    for prop in proposals:
        try:
            parsed.append(parse_action(prop.text, actor=prop.actor_id))
        except ParseFailure as exc:
            rejected.append(
                (wait(prop.actor_id), f"unparseable action text: {exc.reason}: {prop.text!r}")
            )

    valid: list[Action] = []
    for action in parsed:
        if action.kind in (ActionKind.COMBINE, ActionKind.SPLIT):
            agent = system.agents.get(action.actor)
            if agent is None or not can_perform(agent, action):
                rejected.append((action, "actor cannot perform this action"))
                continue
            if action.kind is ActionKind.COMBINE:
                reason = check_combine(system, list(action.members))
            else:
                reason = check_split(system, action.params[0])
        else:
            reason = check_action(system.env, system.agents, action)
        if reason is None:
            valid.append(action)
        else:
            rejected.append((action, reason))

    claimed: set[tuple[str, str]] = set()
    accepted: list[Action] = []
    for action in sorted(valid, key=lambda a: a.actor):
        keys = _resource_keys(action)
        taken = next((k for k in keys if k in claimed), None)
        if taken is not None:
            rejected.append(
                (action, f"resource-conflict: {taken[0]} {taken[1]} already claimed")
            )
            continue
        claimed.update(keys)
        accepted.append(action)
    return DecisionSet(turn=turn, accepted=accepted, rejected=rejected)


def _graph_stats(graph: ThoughtGraph) -> tuple[int, int, tuple[str, ...]]:
    outputs = graph.nodes_of_kind(NodeKind.OUTPUT)
    recent = tuple(n.content for n in outputs[-3:])
    return len(graph.nodes), len(graph.edges), recent


def _render_event_outcome(outcome: EventOutcome) -> str:
    event = outcome.event
    args = ", ".join(f"{k}={v}" for k, v in sorted(event.data.items()))
    status = "applied" if outcome.applied else f"rejected ({outcome.reason})"
    return f"{event.kind}({args}) {status}"


def _env_diff(before: EnvironmentState, after: EnvironmentState) -> dict:
    diff: dict = {}
    blocked_added = sorted(after.map.blocked - before.map.blocked)
    blocked_removed = sorted(before.map.blocked - after.map.blocked)
    if blocked_added:
        diff["blockedAdded"] = blocked_added
    if blocked_removed:
        diff["blockedRemoved"] = blocked_removed
    flags: dict[str, list[str]] = {}
    for bid, b_after in after.buildings.items():
        b_before = before.buildings.get(bid)
        if b_before is None:
            continue
        changed = [
            name
            for name in (
                "needs_cleaning",
                "cleaned",
                "delivery_stage1_done",
                "delivery_stage2_done",
            )
            if getattr(b_after, name) and not getattr(b_before, name)
        ]
        if changed:
            flags[bid] = changed
    if flags:
        diff["buildingFlags"] = flags
    moved = {
        pid: [before.packages.get(pid), loc]
        for pid, loc in sorted(after.packages.items())
        if before.packages.get(pid) != loc
    }
    if moved:
        diff["packages"] = moved
    if len(after.pending_tasks) > len(before.pending_tasks):
        diff["tasksAdded"] = [
            t.to_dict() for t in after.pending_tasks[len(before.pending_tasks):]
        ]
    return diff


def validate_graphs(system: SystemState) -> dict[str, bool]:
    return {gid: g.validate().ok for gid, g in sorted(system.graphs.items())}


def run_turn(
    system: SystemState,
    backend,
    injected_events: list[ExternalEvent] | None = None,
) -> TurnRecord:
    """Advance the system by one full turn; returns the turn's log record."""
    turn = system.env.turn
    units = inference_units(system)
    system.active_per_turn.append(len(units))
    fallback = backend if isinstance(backend, ScriptedBackend) else ScriptedBackend()

    env_snapshot = system.env.copy()
    subject_views: dict[str, SubjectView] = {
        agent.id: subject_view_of(agent, members_of(system, agent.id))
        for agent in physical_units(system)
    }

    peers: list[PeerDecision] = []
    proposals: list[ProposedAction] = []
    calls: list[dict] = []
    tokens_turn = 0

    for unit in units:
        subject, is_controller = _resolve_subject(system, unit)
        graph = system.graphs[unit.id]
        nodes, edges, recent = _graph_stats(graph)
        view = AgentView(
            decider_id=unit.id,
            subject=subject_views[subject.id],
            is_controller=is_controller,
            mode=system.mode,
            turn=turn,
            seed=system.seed,
            env=env_snapshot,
            peers=tuple(peers),
            others=tuple(
                v for sid, v in sorted(subject_views.items()) if sid != subject.id
            ),
            graph_nodes=nodes,
            graph_edges=edges,
            recent_outputs=recent,
            recent_events=system.recent_events,
        )
        request = InferenceRequest(
            agent_id=unit.id, prompt=build_prompt(view), turn=turn, view=view
        )
        substituted = False
        try:
            response = backend.infer(request)
        except BackendUnavailable as exc:
            response = fallback.infer(request)
            substituted = True
            system.substitutions.append(
                {"turn": turn, "agent": unit.id, "error": str(exc)}
            )
        actions = list(response.actions) or ["Wait"]
        append_round(
            graph,
            system.alloc,
            producer=unit.id,
            turn=turn,
            thoughts=list(response.thoughts),
            actions=actions,
        )
        system.ledger.add(turn, unit.id, response.usage)
        tokens_turn += response.usage.total
        actor_id = subject.id if is_controller else unit.id
        for text in actions:
            peers.append(PeerDecision(unit.id, subject.id, text))
            proposals.append(ProposedAction(unit.id, actor_id, text))
        calls.append(
            {
                "decider": unit.id,
                "subject": subject.id,
                "promptTokens": response.usage.prompt_tokens,
                "completionTokens": response.usage.completion_tokens,
                "substituted": substituted,
            }
        )

    decisions = conclude(proposals, system, turn)

    applied, structurally_rejected = apply_transformations(
        system, decisions.accepted, turn
    )
    for action, reason in structurally_rejected:
        decisions.accepted.remove(action)
        decisions.rejected.append((action, reason))

    physical_actions = [
        a
        for a in decisions.accepted
        if a.kind not in (ActionKind.COMBINE, ActionKind.SPLIT)
    ]
    result = step_environment(
        system.env,
        system.agents,
        physical_actions,
        injected_events=list(injected_events or []),
    )
    env_diff = _env_diff(system.env, result.env)
    system.env = result.env
    system.agents = result.agents
    system.recent_events = tuple(
        _render_event_outcome(o) for o in result.event_outcomes
    )
    system.events_handled += sum(1 for o in result.event_outcomes if o.applied)

    return TurnRecord(
        turn=turn,
        mode=system.mode,
        units=[u.id for u in units],
        calls=calls,
        decisions=decisions,
        transformations=[a.text() for a in applied],
        event_outcomes=result.event_outcomes,
        action_outcomes=[o.to_dict() for o in result.action_outcomes],
        arrivals=result.arrivals,
        env_diff=env_diff,
        graphs_ok=all(validate_graphs(system).values()),
        tokens_turn=tokens_turn,
    )


def make_report(system: SystemState) -> RunReport:
    """Summarize the system as it stands (used mid-run by the control plane
    and at the end of a batch run)."""
    totals = per_turn_totals(system.ledger)
    return RunReport(
        mode=system.mode,
        completed=all_tasks_complete(system.env),
        makespan_turns=system.env.turn,
        per_turn_tokens=totals,
        cumulative_tokens=sum(totals),
        compositions_formed=len(system.compositions),
        events_handled=system.events_handled,
        active_per_turn=list(system.active_per_turn),
        scenario_hash=system.scenario_hash,
        seed=system.seed,
    )


def run_to_completion(
    system: SystemState,
    backend,
    max_turns: int,
    on_turn=None,
) -> RunReport:
    """Loop run_turn until every task is done or the turn budget runs out."""
    while system.env.turn < max_turns and not all_tasks_complete(system.env):
        record = run_turn(system, backend)
        if on_turn is not None:
            on_turn(record)
    return make_report(system)
