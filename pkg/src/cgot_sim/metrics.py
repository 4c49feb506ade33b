"""Token and makespan accounting.

The ledger gets one row per inference call. Reports summarize a whole run
and render to CSV (columns: turn, mode, tokens_turn, tokens_cum,
active_agents), and two reports over the same scenario and seed can be
compared per turn — the artifact's version of the token-consumption
contrast between the baseline and composable modes.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from .backend import TokenUsage
from .errors import IncomparableRuns


@dataclass(frozen=True)
class LedgerRow:
    turn: int
    agent_id: str
    prompt_tokens: int
    completion_tokens: int

    @property
    def total(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    def to_dict(self) -> dict:
        return {
            "turn": self.turn,
            "agentId": self.agent_id,
            "promptTokens": self.prompt_tokens,
            "completionTokens": self.completion_tokens,
        }


@dataclass
class TokenLedger:
    rows: list[LedgerRow] = field(default_factory=list)

    def add(self, turn: int, agent_id: str, usage: TokenUsage) -> None:
        self.rows.append(
            LedgerRow(turn, agent_id, usage.prompt_tokens, usage.completion_tokens)
        )

    def rows_for_turn(self, turn: int) -> list[LedgerRow]:
        return [r for r in self.rows if r.turn == turn]


def per_turn_totals(ledger: TokenLedger) -> list[int]:
    """Element t = prompt+completion tokens summed over all calls at turn t."""
    if not ledger.rows:
        return []
    horizon = max(r.turn for r in ledger.rows) + 1
    totals = [0] * horizon
    for row in ledger.rows:
        totals[row.turn] += row.total
    return totals


@dataclass
class RunReport:
    mode: str
    completed: bool
    makespan_turns: int
    per_turn_tokens: list[int]
    cumulative_tokens: int
    compositions_formed: int
    events_handled: int
    active_per_turn: list[int]
    scenario_hash: str
    seed: int

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "completed": self.completed,
            "makespanTurns": self.makespan_turns,
            "perTurnTokens": list(self.per_turn_tokens),
            "cumulativeTokens": self.cumulative_tokens,
            "compositionsFormed": self.compositions_formed,
            "eventsHandled": self.events_handled,
            "activePerTurn": list(self.active_per_turn),
            "scenarioHash": self.scenario_hash,
            "seed": self.seed,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["turn", "mode", "tokens_turn", "tokens_cum", "active_agents"])
        running = 0
        for turn, tokens in enumerate(self.per_turn_tokens):
            running += tokens
            active = (
                self.active_per_turn[turn]
                if turn < len(self.active_per_turn)
                else 0
            )
            writer.writerow([turn, self.mode, tokens, running, active])
        return buf.getvalue()


@dataclass
class Comparison:
    mode_a: str
    mode_b: str
    tokens_a: list[int]
    tokens_b: list[int]
    makespan_a: int
    makespan_b: int

    @property
    def turns(self) -> int:
        return max(len(self.tokens_a), len(self.tokens_b))

    def row(self, turn: int) -> tuple[int, int, int]:
        a = self.tokens_a[turn] if turn < len(self.tokens_a) else 0
        b = self.tokens_b[turn] if turn < len(self.tokens_b) else 0
        return a, b, a - b

    @property
    def deltas(self) -> list[int]:
        return [self.row(t)[2] for t in range(self.turns)]

    @property
    def cumulative_delta(self) -> int:
        return sum(self.deltas)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["turn", "tokens_a", "tokens_b", "delta", "delta_cum"])
        running = 0
        for turn in range(self.turns):
            a, b, delta = self.row(turn)
            running += delta
            writer.writerow([turn, a, b, delta, running])
        return buf.getvalue()

    def summary(self) -> str:
        total_a = sum(self.tokens_a)
        total_b = sum(self.tokens_b)
        saved = total_a - total_b
        pct = (100.0 * saved / total_a) if total_a else 0.0
        return "\n".join(
            [
                f"modes: a={self.mode_a} b={self.mode_b}",
                f"makespan: {self.mode_a}={self.makespan_a} turns, "
                f"{self.mode_b}={self.makespan_b} turns",
                f"tokens: {self.mode_a}={total_a} {self.mode_b}={total_b}",
                f"saved by {self.mode_b}: {saved} tokens ({pct:.1f}%)",
            ]
        )


def compare(report_a: RunReport, report_b: RunReport) -> Comparison:
    """Per-turn token contrast of two runs of the same scenario and seed."""
    if report_a.scenario_hash != report_b.scenario_hash:
        raise IncomparableRuns("reports come from different scenarios")
    if report_a.seed != report_b.seed:
        raise IncomparableRuns("reports come from different seeds")
    return Comparison(
        mode_a=report_a.mode,
        mode_b=report_b.mode,
        tokens_a=list(report_a.per_turn_tokens),
        tokens_b=list(report_b.per_turn_tokens),
        makespan_a=report_a.makespan_turns,
        makespan_b=report_b.makespan_turns,
    )
