"""Agent identity, capabilities, and physical state.

Vehicles are fast carriers with long range; robots are slow on their own but
do the indoor work. A composite replaces its members physically and holds
the union of their capabilities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .actions import Action, ActionKind
from .errors import InvalidInput

PACKAGE_SITE = "PackageSite"


class Capability:
    CARRY_ROBOT = "CarryRobot"
    CARRY_PACKAGE = "CarryPackage"
    CLEAN_BUILDING = "CleanBuilding"
    DELIVER_INSIDE = "DeliverInside"
    LONG_RANGE = "LongRange"

    ALL = frozenset(
        {CARRY_ROBOT, CARRY_PACKAGE, CLEAN_BUILDING, DELIVER_INSIDE, LONG_RANGE}
    )


class AgentKind(str, Enum):
    EGO_VEHICLE = "EgoVehicle"
    ROBOT_A = "RobotA"
    ROBOT_B = "RobotB"
    COMPOSITE = "Composite"


ROBOT_KINDS = frozenset({AgentKind.ROBOT_A, AgentKind.ROBOT_B})

# Default capability set and per-edge move cost for each original kind.
# Vehicles cross an edge in 1 turn; robots take 3, so hitching a ride pays
# off without being the only way to travel.
KIND_DEFAULTS: dict[AgentKind, tuple[frozenset[str], int]] = {
    AgentKind.EGO_VEHICLE: (
        frozenset(
            {Capability.CARRY_ROBOT, Capability.CARRY_PACKAGE, Capability.LONG_RANGE}
        ),
        1,
    ),
    AgentKind.ROBOT_A: (frozenset({Capability.DELIVER_INSIDE}), 3),
    AgentKind.ROBOT_B: (frozenset({Capability.CLEAN_BUILDING}), 3),
}


@dataclass(frozen=True)
class AgentSpec:
    id: str
    kind: AgentKind
    capabilities: frozenset[str]
    move_cost_per_edge: int

    def __post_init__(self):
        unknown = self.capabilities - Capability.ALL
        if unknown:
            raise InvalidInput(f"unknown capabilities: {sorted(unknown)}")
        if self.move_cost_per_edge < 1:
            raise InvalidInput("move_cost_per_edge must be positive")


@dataclass(frozen=True)
class Transit:
    """Partial progress along an edge: arrive at dest when remaining hits 0."""

    dest: str
    remaining: int


@dataclass
class AgentState:
    spec: AgentSpec
    location: str
    cargo: set[str] = field(default_factory=set)
    active: bool = True
    member_of: str | None = None
    disabled: bool = False
    transit: Transit | None = None

    @property
    def id(self) -> str:
        return self.spec.id

    @property
    def kind(self) -> AgentKind:
        return self.spec.kind

    @property
    def capabilities(self) -> frozenset[str]:
        return self.spec.capabilities

    def copy(self) -> "AgentState":
        return AgentState(
            spec=self.spec,
            location=self.location,
            cargo=set(self.cargo),
            active=self.active,
            member_of=self.member_of,
            disabled=self.disabled,
            transit=self.transit,
        )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "capabilities": sorted(self.capabilities),
            "moveCostPerEdge": self.spec.move_cost_per_edge,
            "location": self.location,
            "cargo": sorted(self.cargo),
            "active": self.active,
            "memberOf": self.member_of,
            "disabled": self.disabled,
            "transit": (
                {"dest": self.transit.dest, "remaining": self.transit.remaining}
                if self.transit
                else None
            ),
        }


def make_agent(agent_id: str, kind: AgentKind, location: str) -> AgentState:
    caps, cost = KIND_DEFAULTS[kind]
    return AgentState(
        spec=AgentSpec(
            id=agent_id, kind=kind, capabilities=caps, move_cost_per_edge=cost
        ),
        location=location,
    )


def make_default_roster() -> list[AgentState]:
    """Two vehicles and two robots, all starting at the package site."""
    return [
        make_agent("V1", AgentKind.EGO_VEHICLE, PACKAGE_SITE),
        make_agent("V2", AgentKind.EGO_VEHICLE, PACKAGE_SITE),
        make_agent("RA", AgentKind.ROBOT_A, PACKAGE_SITE),
        make_agent("RB", AgentKind.ROBOT_B, PACKAGE_SITE),
    ]


def can_perform(agent: AgentState, action: Action) -> bool:
    """Capability and local physical checks for one action.

    Environment-level constraints (task flags, package positions, blocked
    sites) are validated separately by the conclude layer.
    """
    kind = action.kind
    if kind is ActionKind.WAIT:
        return True
    if kind is ActionKind.MOVE:
        return True
    if kind is ActionKind.CLEAN:
        return (
            Capability.CLEAN_BUILDING in agent.capabilities
            and agent.location == action.target
        )
    if kind is ActionKind.CARRY_INSIDE:
        return (
            Capability.DELIVER_INSIDE in agent.capabilities
            and agent.location == action.target
        )
    if kind is ActionKind.PICKUP_PACKAGE:
        return Capability.CARRY_PACKAGE in agent.capabilities
    if kind is ActionKind.DROP_PACKAGE:
        return action.package in agent.cargo
    if kind is ActionKind.COMBINE:
        return agent.active and agent.id in action.members
    if kind is ActionKind.SPLIT:
        return agent.id == action.params[0] or agent.member_of == action.params[0]
    return False
