"""Inference providers and the deterministic scripted oracle.

Two backends implement the same ``infer(request) -> InferenceResponse``
contract:

* :class:`ScriptedBackend` — a pure, rule-based policy.  Given the same
  request it always returns the same thoughts, actions, and token usage,
  which is what makes full-run regression baselines possible.
* :class:`HttpBackend` — a client for OpenAI-compatible chat-completions
  endpoints.  The model is asked to answer in ``THOUGHT:`` / ``ACTION:``
  lines; responses are parsed with :func:`parse_completion`.

Token accounting uses an analytic proxy (``ceil(chars / 4)``) so that both
backends report usage even when a provider omits it.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .actions import Action, ActionKind, parse_action
from .agents import PACKAGE_SITE, AgentKind, AgentState, Capability
from .errors import BackendUnavailable, InvalidInput, ParseFailure
from .world import DELIVER, EnvironmentState, entrance

PROMPT_SECTIONS = (
    "[ROLE]",
    "[CAPABILITIES]",
    "[ENVIRONMENT]",
    "[GRAPH SUMMARY]",
    "[PEER DECISIONS]",
    "[EVENTS]",
)

_THOUGHT_PREFIX = "THOUGHT:"
_ACTION_PREFIX = "ACTION:"

HTTP_SYSTEM_INSTRUCTIONS = (
    "You control one unit in a turn-based park-maintenance simulation. "
    "Read the state below and answer with one or more lines starting with "
    "'THOUGHT:' followed by exactly one line starting with 'ACTION:'. "
    "Valid actions: Move(site), PickupPackage(id), DropPackage(id), "
    "CarryInside(id, building), Clean(building), Combine(a, b), "
    "Split(composite), Wait."
)


def count_tokens_proxy(text: str) -> int:
    """ceil(len/4): a tokenizer-free stand-in good enough for comparisons."""
    return (len(text) + 3) // 4


@dataclass(frozen=True)
class TokenUsage:
    prompt_tokens: int
    completion_tokens: int

    @property
    def total(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    def to_dict(self) -> dict:
        return {
            "promptTokens": self.prompt_tokens,
            "completionTokens": self.completion_tokens,
        }


# ---------------------------------------------------------------------------
# Views: the structured twin of the prompt text.
#
# The prompt is rendered *from* the view, and the scripted oracle decides
# *from* the view, so "identical request -> identical response" holds by
# construction.


@dataclass(frozen=True)
class MemberView:
    id: str
    kind: str
    capabilities: frozenset[str]


@dataclass(frozen=True)
class SubjectView:
    """The physical unit whose body will carry out the decision."""

    id: str
    kind: str
    capabilities: frozenset[str]
    location: str
    cargo: tuple[str, ...]
    members: tuple[MemberView, ...] = ()
    move_cost: int = 1


@dataclass(frozen=True)
class PeerDecision:
    decider_id: str
    subject_id: str
    action_text: str


@dataclass(frozen=True)
class AgentView:
    decider_id: str
    subject: SubjectView
    is_controller: bool
    mode: str
    turn: int
    seed: int
    env: EnvironmentState
    peers: tuple[PeerDecision, ...]
    others: tuple[SubjectView, ...]
    graph_nodes: int = 0
    graph_edges: int = 0
    recent_outputs: tuple[str, ...] = ()
    recent_events: tuple[str, ...] = ()


def subject_view_of(agent: AgentState, members: list[AgentState]) -> SubjectView:
    return SubjectView(
        id=agent.id,
        kind=agent.kind.value,
        capabilities=frozenset(agent.capabilities),
        location=agent.location,
        cargo=tuple(sorted(agent.cargo)),
        members=tuple(
            MemberView(m.id, m.kind.value, frozenset(m.capabilities))
            for m in sorted(members, key=lambda a: a.id)
        ),
        move_cost=agent.spec.move_cost_per_edge,
    )


@dataclass(frozen=True)
class InferenceRequest:
    agent_id: str
    prompt: str
    turn: int
    view: AgentView


@dataclass(frozen=True)
class InferenceResponse:
    thoughts: tuple[str, ...]
    actions: tuple[str, ...]
    usage: TokenUsage


# ---------------------------------------------------------------------------
# Prompt construction


def _describe_subject(view: AgentView) -> str:
    s = view.subject
    if s.id == view.decider_id:
        who = f"You are {s.id}, a {s.kind} at {s.location}."
    else:
        who = (
            f"You are {view.decider_id}, riding in composite {s.id} "
            f"at {s.location}."
        )
    bits = [who]
    if s.members:
        names = ", ".join(f"{m.id} ({m.kind})" for m in s.members)
        bits.append(f"{s.id} is a composite of {names}.")
    if s.cargo:
        bits.append(f"Cargo: {', '.join(s.cargo)}.")
    if view.is_controller and s.id != view.decider_id:
        bits.append(f"You decide for {s.id} this turn.")
    elif not view.is_controller:
        bits.append("A peer controls this composite; you may only Wait.")
    return " ".join(bits)


def _describe_environment(view: AgentView) -> list[str]:
    env = view.env
    lines = [f"turn: {view.turn}"]
    sites = ", ".join(sorted(env.map.sites))
    if env.map.blocked:
        sites += f" (blocked: {', '.join(sorted(env.map.blocked))})"
    lines.append(f"sites: {sites}")
    for b in sorted(env.buildings):
        bb = env.buildings[b]
        flags = []
        if bb.needs_cleaning:
            flags.append("cleaned" if bb.cleaned else "needs cleaning")
        flags.append(f"stage1={'yes' if bb.delivery_stage1_done else 'no'}")
        flags.append(f"stage2={'yes' if bb.delivery_stage2_done else 'no'}")
        lines.append(f"{b}: {', '.join(flags)}")
    pkgs = "; ".join(f"{p} @ {loc}" for p, loc in sorted(env.packages.items()))
    lines.append(f"packages: {pkgs or 'none'}")
    tasks = "; ".join(
        f"{t.kind} {t.target}" + (f" via {t.package_id}" if t.package_id else "")
        for t in env.pending_tasks
    )
    lines.append(f"tasks: {tasks or 'none'}")
    others = "; ".join(
        f"{o.id} ({o.kind}) @ {o.location}"
        + (f" cargo {', '.join(o.cargo)}" if o.cargo else "")
        for o in sorted(view.others, key=lambda v: v.id)
    )
    lines.append(f"other units: {others or 'none'}")
    return lines


def build_prompt(view: AgentView) -> str:
    """Render the six-section prompt. Sections and their order are fixed
    regardless of mode; only contents vary."""
    s = view.subject
    caps = ", ".join(sorted(s.capabilities)) or "none"
    graph = (
        f"nodes={view.graph_nodes} edges={view.graph_edges}; "
        f"recent decisions: {'; '.join(view.recent_outputs) or 'none'}"
    )
    peers = [
        f"{p.decider_id} -> {p.action_text}"
        if p.decider_id == p.subject_id
        else f"{p.decider_id} (for {p.subject_id}) -> {p.action_text}"
        for p in view.peers
    ]
    parts = [
        "[ROLE]",
        _describe_subject(view),
        "[CAPABILITIES]",
        f"{caps} (move cost {s.move_cost} per edge)",
        "[ENVIRONMENT]",
        *_describe_environment(view),
        "[GRAPH SUMMARY]",
        graph,
        "[PEER DECISIONS]",
        *(peers or ["none yet"]),
        "[EVENTS]",
        *(view.recent_events or ("none",)),
    ]
    return "\n".join(parts)


def prompt_sections_ok(prompt: str) -> bool:
    """All six section headers present, in order."""
    pos = -1
    for header in PROMPT_SECTIONS:
        nxt = prompt.find(header, pos + 1)
        if nxt <= pos:
            return False
        pos = nxt
    return True


def render_completion(thoughts: tuple[str, ...], actions: tuple[str, ...]) -> str:
    lines = [f"{_THOUGHT_PREFIX} {t}" for t in thoughts]
    lines += [f"{_ACTION_PREFIX} {a}" for a in actions]
    return "\n".join(lines)


def parse_completion(text: str) -> tuple[list[str], list[str]]:
    """Extract THOUGHT:/ACTION: lines; anything else is ignored."""
    thoughts, actions = [], []
    for line in text.splitlines():
        line = line.strip()
        if line.startswith(_THOUGHT_PREFIX):
            thoughts.append(line[len(_THOUGHT_PREFIX):].strip())
        elif line.startswith(_ACTION_PREFIX):
            actions.append(line[len(_ACTION_PREFIX):].strip())
    return thoughts, actions


# ---------------------------------------------------------------------------
# Scripted policy


def deliver_targets(env: EnvironmentState) -> dict[str, str]:
    """package id -> destination building, from the pending Deliver tasks."""
    return {
        t.package_id: t.target
        for t in env.pending_tasks
        if t.kind == DELIVER and t.package_id
    }


def pending_sites(
    env: EnvironmentState, capabilities: frozenset[str], cargo: tuple[str, ...]
) -> list[str]:
    """Sites where this capability set still has work, blocked ones excluded.

    Delivery-capable units head for any building whose inside-delivery is
    still open, even before the package arrives — that is what lets a
    composite position itself (and split off its robot) ahead of time.
    """
    targets = deliver_targets(env)
    sites: set[str] = set()
    for b, bb in env.buildings.items():
        if env.map.is_blocked(b):
            continue
        if Capability.CLEAN_BUILDING in capabilities:
            if bb.needs_cleaning and not bb.cleaned:
                sites.add(b)
        if Capability.DELIVER_INSIDE in capabilities:
            if any(t == b for t in targets.values()) and not bb.delivery_stage2_done:
                sites.add(b)
    for pid in cargo:
        dest = targets.get(pid)
        if dest and not env.map.is_blocked(dest):
            if not env.buildings[dest].delivery_stage1_done:
                sites.add(dest)
    if Capability.CARRY_PACKAGE in capabilities and not cargo:
        for pid, loc in env.packages.items():
            dest = targets.get(pid)
            if (
                loc == PACKAGE_SITE
                and dest
                and not env.map.is_blocked(dest)
                and not env.buildings[dest].delivery_stage1_done
            ):
                sites.add(PACKAGE_SITE)
                break
    return sorted(sites)


def nearest_pending(
    env: EnvironmentState,
    location: str,
    capabilities: frozenset[str],
    cargo: tuple[str, ...],
) -> str | None:
    """Closest reachable pending site; distance ties go to the lowest id."""
    dist = env.map.distances_from(location)
    best: str | None = None
    for site in pending_sites(env, capabilities, cargo):
        if site not in dist:
            continue
        if best is None or (dist[site], site) < (dist[best], best):
            best = site
    return best


@dataclass
class _Claims:
    """Exclusive resources already spoken for by peers earlier this turn."""

    packages: set[str] = field(default_factory=set)
    members: set[str] = field(default_factory=set)
    cleans: set[str] = field(default_factory=set)


def _peer_claims(peers: tuple[PeerDecision, ...]) -> _Claims:
    claims = _Claims()
    for peer in peers:
        try:
            action = parse_action(peer.action_text, actor=peer.subject_id)
        except ParseFailure:
            continue
        if action.kind in (ActionKind.PICKUP_PACKAGE, ActionKind.CARRY_INSIDE):
            claims.packages.add(action.package)
        elif action.kind is ActionKind.COMBINE:
            claims.members.update(action.members)
        elif action.kind is ActionKind.CLEAN:
            claims.cleans.add(action.target)
    return claims


def _step_at_location(view: AgentView, claims: _Claims) -> tuple[str, str] | None:
    """Rule 1: a task step executable right here (Clean, CarryInside, Drop,
    Pickup — in that priority). Returns (action text, rationale)."""
    s = view.subject
    env = view.env
    loc = s.location
    b = env.buildings.get(loc)
    blocked = env.map.is_blocked(loc)
    targets = deliver_targets(env)

    if b and not blocked and Capability.CLEAN_BUILDING in s.capabilities:
        if b.needs_cleaning and not b.cleaned and loc not in claims.cleans:
            return f"Clean({loc})", f"{loc} needs cleaning and I am here."

    if b and not blocked and Capability.DELIVER_INSIDE in s.capabilities:
        if b.delivery_stage1_done and not b.delivery_stage2_done:
            pids = sorted(
                p
                for p, pl in env.packages.items()
                if pl == entrance(loc) and p not in claims.packages
            )
            if pids:
                return (
                    f"CarryInside({pids[0]}, {loc})",
                    f"{pids[0]} waits at the {loc} entrance.",
                )

    if b and not blocked and not b.delivery_stage1_done:
        pids = sorted(p for p in s.cargo if targets.get(p) == loc)
        if pids:
            return f"DropPackage({pids[0]})", f"{pids[0]} is addressed to {loc}."

    if Capability.CARRY_PACKAGE in s.capabilities and not s.cargo:
        pids = sorted(
            p
            for p, pl in env.packages.items()
            if pl == loc
            and p not in claims.packages
            and targets.get(p) is not None
            and not env.map.is_blocked(targets[p])
            and not env.buildings[targets[p]].delivery_stage1_done
        )
        if pids:
            return (
                f"PickupPackage({pids[0]})",
                f"{pids[0]} here still needs its first-stage run to {targets[pids[0]]}.",
            )
    return None


ROBOT_KIND_NAMES = (AgentKind.ROBOT_A.value, AgentKind.ROBOT_B.value)


def scripted_policy(view: AgentView) -> tuple[list[str], list[str]]:
    """Deterministic greedy policy; returns (thoughts, action texts).

    Rule order: (1) do a task step at the current location; (2) pair up a
    free vehicle with a colocated robot whose work is elsewhere; (3) split
    a composite standing on a robot member's own task site; (4) move toward
    the nearest pending site; (5) wait.
    """
    s = view.subject
    env = view.env

    if not view.is_controller:
        return (
            [f"Riding in {s.id}; its controller decides this turn."],
            ["Wait"],
        )

    claims = _peer_claims(view.peers)
    pending = pending_sites(env, s.capabilities, s.cargo)
    situation = (
        f"At {s.location}; cargo: {', '.join(s.cargo) or 'none'}; "
        f"pending sites: {', '.join(pending) or 'none'}."
    )

    step = _step_at_location(view, claims)
    if step:
        text, why = step
        return [situation, why], [text]

    if not s.members:
        if s.kind == AgentKind.EGO_VEHICLE.value:
            for other in sorted(view.others, key=lambda o: o.id):
                if other.kind not in ROBOT_KIND_NAMES or other.members:
                    continue
                if other.location != s.location or other.id in claims.members:
                    continue
                goal = nearest_pending(env, other.location, other.capabilities, ())
                if goal is not None and goal != other.location:
                    return (
                        [situation, f"{other.id} here needs a ride toward {goal}."],
                        [f"Combine({s.id}, {other.id})"],
                    )
        if s.kind in ROBOT_KIND_NAMES:
            goal = nearest_pending(env, s.location, s.capabilities, s.cargo)
            if goal is not None and goal != s.location:
                for other in view.others:
                    if (
                        other.kind == AgentKind.EGO_VEHICLE.value
                        and not other.members
                        and other.location == s.location
                    ):
                        return (
                            [situation, f"{other.id} can carry me toward {goal}."],
                            ["Wait"],
                        )
    else:
        for member in s.members:
            if member.kind not in ROBOT_KIND_NAMES:
                continue
            if s.location in pending_sites(env, member.capabilities, ()):
                return (
                    [situation, f"{member.id} has work right here; dissolving."],
                    [f"Split({s.id})"],
                )

    goal = nearest_pending(env, s.location, s.capabilities, s.cargo)
    if goal is not None and goal != s.location:
        hop = env.map.next_hop(s.location, goal)
        if hop is not None:
            return (
                [situation, f"Nearest pending site is {goal}; stepping to {hop}."],
                [f"Move({hop})"],
            )

    return [situation, "Nothing actionable; holding position."], ["Wait"]


# ---------------------------------------------------------------------------
# Backends


class ScriptedBackend:
    """Pure rule-based oracle: same request in, same response out."""

    name = "scripted"

    def infer(self, request: InferenceRequest) -> InferenceResponse:
        thoughts, actions = scripted_policy(request.view)
        completion = render_completion(tuple(thoughts), tuple(actions))
        usage = TokenUsage(
            prompt_tokens=count_tokens_proxy(request.prompt),
            completion_tokens=count_tokens_proxy(completion),
        )
        return InferenceResponse(tuple(thoughts), tuple(actions), usage)


class HttpBackend:
    """OpenAI-compatible chat-completions client.

    Endpoint and credentials come from CGOT_LLM_BASE_URL, CGOT_LLM_MODEL,
    and CGOT_LLM_API_KEY unless given explicitly. Failures are retried;
    when retries run out, BackendUnavailable is raised and the engine
    substitutes the scripted oracle for that agent-turn.
    """

    name = "http"

    def __init__(
        self,
        base_url: str | None = None,
        model: str | None = None,
        api_key: str | None = None,
        timeout: float = 30.0,
        retries: int = 2,
        session=None,
    ):
        self.base_url = (base_url or os.environ.get("CGOT_LLM_BASE_URL", "")).rstrip("/")
        if not self.base_url:
            raise InvalidInput("CGOT_LLM_BASE_URL is not set")
        self.model = model or os.environ.get("CGOT_LLM_MODEL", "default")
        self.api_key = api_key or os.environ.get("CGOT_LLM_API_KEY", "")
        self.timeout = timeout
        self.retries = retries
        if session is None:
            import requests

            session = requests.Session()
        self.session = session

    def infer(self, request: InferenceRequest) -> InferenceResponse:
        last_error: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                return self._attempt(request)
            except Exception as exc:  # noqa: BLE001 - every failure mode retries
                last_error = exc
        raise BackendUnavailable(f"inference endpoint failed: {last_error}")

    def _attempt(self, request: InferenceRequest) -> InferenceResponse:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {
            "model": self.model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": HTTP_SYSTEM_INSTRUCTIONS},
                {"role": "user", "content": request.prompt},
            ],
        }
        resp = self.session.post(
            f"{self.base_url}/chat/completions",
            data=json.dumps(body),
            headers=headers,
            timeout=self.timeout,
        )
        resp.raise_for_status()
        data = resp.json()
        content = data["choices"][0]["message"]["content"]
        thoughts, actions = parse_completion(content)
        if not actions:
            raise ParseFailure(content, "no ACTION line in completion")
        usage = data.get("usage") or {}
        return InferenceResponse(
            thoughts=tuple(thoughts),
            actions=tuple(actions),
            usage=TokenUsage(
                prompt_tokens=int(
                    usage.get("prompt_tokens", count_tokens_proxy(request.prompt))
                ),
                completion_tokens=int(
                    usage.get(
                        "completion_tokens", count_tokens_proxy(content)
                    )
                ),
            ),
        )


def make_backend(name: str) -> ScriptedBackend | HttpBackend:
    if name == "scripted":
        return ScriptedBackend()
    if name == "http":
        return HttpBackend()
    raise InvalidInput(f"unknown backend {name!r}")
