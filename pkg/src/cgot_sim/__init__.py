"""Turn-based multi-agent park simulation with mergeable thought graphs.

Agents (delivery vehicles and service robots) reason in per-agent thought
graphs.  When agents physically combine into one unit, their graphs merge
and the unit thinks once per turn; when they split, each agent leaves with
the shared history.  The package ships two reasoning modes so the token
cost of that merging can be measured directly, a scripted deterministic
backend plus an optional HTTP chat-completions backend, a CLI, and a small
control-plane HTTP API for driving runs interactively.
"""

from .actions import Action, ActionKind, parse_action, wait
from .agents import (
    AgentKind,
    AgentSpec,
    AgentState,
    Capability,
    make_agent,
    make_default_roster,
)
from .backend import (
    AgentView,
    HttpBackend,
    InferenceRequest,
    InferenceResponse,
    ScriptedBackend,
    TokenUsage,
    build_prompt,
    count_tokens_proxy,
    make_backend,
    parse_completion,
    render_completion,
    scripted_policy,
)
from .composition import (
    CGOT,
    GOT,
    CompositionRecord,
    apply_transformations,
    combine,
    split,
)
from .engine import (
    DecisionSet,
    SystemState,
    TurnRecord,
    conclude,
    make_report,
    run_to_completion,
    run_turn,
)
from .errors import (
    AlreadyCombined,
    BackendUnavailable,
    CgotError,
    IncomparableRuns,
    InvalidInput,
    NotColocated,
    NotFound,
    ParseFailure,
    UnknownComposite,
    UnknownNode,
    ValidationError,
)
from .metrics import Comparison, RunReport, TokenLedger, compare
from .scenario import ScenarioConfig, build_system, load_scenario, scenario_hash
from .thought_graph import (
    NodeIdAllocator,
    NodeKind,
    ThoughtEdge,
    ThoughtGraph,
    ThoughtNode,
    append_round,
    new_graph,
)
from .world import (
    EnvironmentState,
    ExternalEvent,
    SiteMap,
    StepResult,
    TaskSpec,
    all_tasks_complete,
    apply_event,
    step_environment,
    translate_instruction,
)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "ActionKind",
    "AgentKind",
    "AgentSpec",
    "AgentState",
    "AgentView",
    "AlreadyCombined",
    "BackendUnavailable",
    "CGOT",
    "CgotError",
    "Comparison",
    "CompositionRecord",
    "Capability",
    "DecisionSet",
    "EnvironmentState",
    "ExternalEvent",
    "GOT",
    "HttpBackend",
    "IncomparableRuns",
    "InferenceRequest",
    "InferenceResponse",
    "InvalidInput",
    "NodeIdAllocator",
    "NodeKind",
    "NotColocated",
    "NotFound",
    "ParseFailure",
    "RunReport",
    "ScenarioConfig",
    "ScriptedBackend",
    "SiteMap",
    "StepResult",
    "SystemState",
    "TaskSpec",
    "ThoughtEdge",
    "ThoughtGraph",
    "ThoughtNode",
    "TokenLedger",
    "TokenUsage",
    "TurnRecord",
    "UnknownComposite",
    "UnknownNode",
    "ValidationError",
    "all_tasks_complete",
    "append_round",
    "apply_event",
    "apply_transformations",
    "build_prompt",
    "build_system",
    "combine",
    "compare",
    "conclude",
    "count_tokens_proxy",
    "load_scenario",
    "make_agent",
    "make_backend",
    "make_default_roster",
    "make_report",
    "new_graph",
    "parse_action",
    "parse_completion",
    "render_completion",
    "run_to_completion",
    "run_turn",
    "scenario_hash",
    "scripted_policy",
    "split",
    "step_environment",
    "translate_instruction",
    "wait",
]
