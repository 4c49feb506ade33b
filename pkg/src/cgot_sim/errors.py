"""Exception types shared across the simulator."""

from __future__ import annotations


class CgotError(Exception):
    """Base class for all simulator errors."""


class InvalidInput(CgotError):
    """An operation was called with arguments that violate its contract."""


class UnknownNode(CgotError):
    """A graph operation referenced a node id that does not exist."""


class NotColocated(CgotError):
    """Agents must share a location for the requested combination."""


class AlreadyCombined(CgotError):
    """An agent is already a member of an undissolved composite."""


class UnknownComposite(CgotError):
    """No undissolved composition record matches the given id."""


class ParseFailure(CgotError):
    """An action string could not be parsed. Carries the offending text."""

    def __init__(self, text: str, reason: str = "unrecognized action"):
        super().__init__(f"{reason}: {text!r}")
        self.text = text
        self.reason = reason


class BackendUnavailable(CgotError):
    """The inference backend failed after retries."""


class NotFound(CgotError):
    """A referenced file or named resource does not exist."""


class ValidationError(CgotError):
    """A configuration document failed cross-validation.

    ``field_path`` points at the offending entry, e.g. ``tasks[2].target``.
    """

    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}")
        self.field_path = field_path


class IncomparableRuns(CgotError):
    """Two run reports cannot be compared (different scenario or seed)."""
