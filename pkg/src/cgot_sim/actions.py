"""Action vocabulary and the text grammar that output nodes are parsed with.

Grammar: ``KIND(param, param, ...)`` with a case-insensitive kind. Zero-arg
kinds may omit the parentheses (``Wait``). Parameters are trimmed verbatim;
entity ids stay case-sensitive.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .errors import ParseFailure


class ActionKind(str, Enum):
    MOVE = "Move"
    PICKUP_PACKAGE = "PickupPackage"
    DROP_PACKAGE = "DropPackage"
    CARRY_INSIDE = "CarryInside"
    CLEAN = "Clean"
    COMBINE = "Combine"
    SPLIT = "Split"
    WAIT = "Wait"


# kind -> (min_params, max_params); None means unbounded.
_ARITY: dict[ActionKind, tuple[int, int | None]] = {
    ActionKind.MOVE: (1, 1),
    ActionKind.PICKUP_PACKAGE: (1, 1),
    ActionKind.DROP_PACKAGE: (1, 1),
    ActionKind.CARRY_INSIDE: (2, 2),
    ActionKind.CLEAN: (1, 1),
    ActionKind.COMBINE: (2, None),
    ActionKind.SPLIT: (1, 1),
    ActionKind.WAIT: (0, 0),
}

_KIND_BY_LOWER = {k.value.lower(): k for k in ActionKind}

_ACTION_RE = re.compile(r"^\s*([A-Za-z]+)\s*(?:\(\s*(.*?)\s*\))?\s*$")


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    actor: str
    params: tuple[str, ...] = ()

    @property
    def target(self) -> str:
        """Site or building parameter for Move/Clean/CarryInside."""
        if self.kind is ActionKind.CARRY_INSIDE:
            return self.params[1]
        return self.params[0]

    @property
    def package(self) -> str:
        return self.params[0]

    @property
    def members(self) -> tuple[str, ...]:
        return self.params

    def text(self) -> str:
        if not self.params:
            return self.kind.value
        return f"{self.kind.value}({','.join(self.params)})"


def wait(actor: str) -> Action:
    return Action(kind=ActionKind.WAIT, actor=actor)


def parse_action(text: str, actor: str = "") -> Action:
    """Parse one action string; raises ParseFailure carrying the bad text."""
    match = _ACTION_RE.match(text or "")
    if not match:
        raise ParseFailure(text)
    kind = _KIND_BY_LOWER.get(match.group(1).lower())
    if kind is None:
        raise ParseFailure(text, "unknown action kind")
    raw_params = match.group(2)
    if raw_params is None or raw_params == "":
        params: tuple[str, ...] = ()
    else:
        params = tuple(p.strip() for p in raw_params.split(","))
        if any(not p for p in params):
            raise ParseFailure(text, "empty parameter")
    lo, hi = _ARITY[kind]
    if len(params) < lo or (hi is not None and len(params) > hi):
        raise ParseFailure(text, "wrong number of parameters")
    return Action(kind=kind, actor=actor, params=params)
