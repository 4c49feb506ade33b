"""Live run control: state snapshots, commands, and a turn-by-turn stream.

One engine thread owns the system; HTTP handlers never touch it directly.
Commands either flip the run phase (Run/Pause), enqueue an event for the
next turn boundary (InjectEvent), or ask the engine thread to advance one
turn and wait for it (Step — synchronous so a caller can immediately GET
/state and see the result).  Every completed turn publishes one immutable
snapshot to /state, /stream subscribers, and the dashboard.

Endpoints:
    GET  /state    latest turn-boundary snapshot
    POST /command  {"kind": "Step" | "Run" | "Pause" | "InjectEvent", ...}
    GET  /stream   server-sent events, one snapshot per completed turn
"""

from __future__ import annotations

import asyncio
import json
import queue
import threading
import time
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from .backend import make_backend
from .engine import SystemState, make_report, run_turn
from .scenario import ScenarioConfig, build_system
from .world import ExternalEvent, all_tasks_complete, apply_event

AWAITING_STEP = "AwaitingStep"
RUNNING = "Running"
COMPLETED = "Completed"

COMMAND_KINDS = ("Step", "Run", "Pause", "InjectEvent")

_TICK_SECONDS = 0.02


class _StepRequest:
    def __init__(self):
        self.done = threading.Event()
        self.result: dict | None = None


class RunController:
    """Owns the engine loop and mediates all outside access to it."""

    def __init__(
        self,
        system: SystemState,
        backend,
        max_turns: int,
        interval_ms: float = 500.0,
        out_path: str | None = None,
    ):
        self.system = system
        self.backend = backend
        self.max_turns = max_turns
        self.interval = interval_ms / 1000.0
        self.out_path = out_path

        self._lock = threading.RLock()
        self._phase = AWAITING_STEP
        self._last_record = None
        self._pending_events: list[ExternalEvent] = []
        self._steps: queue.Queue[_StepRequest] = queue.Queue()
        self._subscribers: list[queue.Queue] = []
        self._snapshot: dict = {}
        self._stop = threading.Event()
        self._next_due = 0.0
        self._thread = threading.Thread(
            target=self._loop, name="engine-loop", daemon=True
        )

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        with self._lock:
            if self._finished():
                self._phase = COMPLETED
                self._write_report()
            self._publish()
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        self._thread.join(timeout=5)

    # -- handler-thread API --------------------------------------------------

    def get_state(self) -> dict:
        return self._snapshot

    def post_command(self, cmd: dict) -> dict:
        kind = cmd.get("kind")
        if kind not in COMMAND_KINDS:
            return {"ok": False, "error": f"unknown command kind {kind!r}"}
        if kind == "Step":
            return self._command_step()
        if kind == "Run":
            return self._command_run()
        if kind == "Pause":
            return self._command_pause()
        return self._command_inject(cmd.get("event"))

    def subscribe(self) -> queue.Queue:
        with self._lock:
            q: queue.Queue = queue.Queue()
            self._subscribers.append(q)
            if self._snapshot:
                q.put(self._snapshot)
            return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    # -- commands ------------------------------------------------------------

    def _command_step(self) -> dict:
        with self._lock:
            if self._phase == COMPLETED:
                return {"ok": False, "error": "run complete"}
        request = _StepRequest()
        self._steps.put(request)
        if not request.done.wait(timeout=60):
            return {"ok": False, "error": "step timed out"}
        return request.result or {"ok": True}

    def _command_run(self) -> dict:
        with self._lock:
            if self._phase == COMPLETED:
                return {"ok": False, "error": "run complete"}
            already = self._phase == RUNNING
            self._phase = RUNNING
            self._next_due = time.monotonic()
            self._publish()
            return {"ok": True, "message": "already running" if already else "running"}

    def _command_pause(self) -> dict:
        with self._lock:
            if self._phase == COMPLETED:
                return {"ok": False, "error": "run complete"}
            already = self._phase == AWAITING_STEP
            self._phase = AWAITING_STEP
            self._publish()
            return {"ok": True, "message": "already paused" if already else "paused"}

    def _command_inject(self, raw_event) -> dict:
        if not isinstance(raw_event, dict):
            return {"ok": False, "error": "InjectEvent needs an event object"}
        try:
            event = ExternalEvent.from_dict(raw_event)
        except (KeyError, TypeError, ValueError) as exc:
            return {"ok": False, "error": f"malformed event: {exc}"}
        with self._lock:
            if self._phase == COMPLETED:
                return {"ok": False, "error": "run complete"}
            # Probe against the live state without mutating it; the real
            # application happens at the next turn's event phase.
            _, _, outcome = apply_event(self.system.env, self.system.agents, event)
            if not outcome.applied:
                return {"ok": False, "error": outcome.reason}
            applies_at = self.system.env.turn
            self._pending_events.append(
                ExternalEvent.make(event.kind, event.data, at_turn=applies_at)
            )
            return {
                "ok": True,
                "message": f"applies at turn {applies_at}",
                "appliesAtTurn": applies_at,
            }

    # -- engine thread ---------------------------------------------------------

    def _loop(self) -> None:
        while not self._stop.wait(_TICK_SECONDS):
            self._drain_steps()
            with self._lock:
                if (
                    self._phase == RUNNING
                    and time.monotonic() >= self._next_due
                ):
                    self._advance()
                    self._next_due = time.monotonic() + self.interval

    def _drain_steps(self) -> None:
        while True:
            try:
                request = self._steps.get_nowait()
            except queue.Empty:
                return
            with self._lock:
                if self._phase == COMPLETED:
                    request.result = {"ok": False, "error": "run complete"}
                else:
                    self._advance()
                    request.result = {
                        "ok": True,
                        "turn": self.system.env.turn,
                        "phase": self._phase,
                    }
            request.done.set()

    def _advance(self) -> None:
        """Run exactly one turn (with any injected events) and publish."""
        events, self._pending_events = self._pending_events, []
        self._last_record = run_turn(self.system, self.backend, injected_events=events)
        if self._finished():
            self._phase = COMPLETED
            self._write_report()
        self._publish()

    def _finished(self) -> bool:
        return (
            all_tasks_complete(self.system.env)
            or self.system.env.turn >= self.max_turns
        )

    def _write_report(self) -> None:
        if self.out_path:
            Path(self.out_path).write_text(make_report(self.system).to_csv())

    def _publish(self) -> None:
        snap = snapshot_of(self.system, self._phase)
        snap["queuedEvents"] = [e.to_dict() for e in self._pending_events] + [
            e.to_dict() for e in self.system.env.event_queue
        ]
        snap["lastRecord"] = (
            self._last_record.to_dict() if self._last_record else None
        )
        self._snapshot = snap
        for q in self._subscribers:
            q.put(snap)


def snapshot_of(system: SystemState, phase: str) -> dict:
    """Immutable turn-boundary view of the whole system."""
    report = make_report(system)
    env = system.env
    return {
        "turn": env.turn,
        "phase": phase,
        "mode": system.mode,
        "agents": [
            agent.to_dict() for _, agent in sorted(system.agents.items())
        ],
        "buildings": [b.to_dict() for _, b in sorted(env.buildings.items())],
        "blocked": sorted(env.map.blocked),
        "packages": dict(sorted(env.packages.items())),
        "pendingTasks": [t.to_dict() for t in env.pending_tasks],
        "compositions": [r.to_dict() for r in system.compositions],
        "graphs": {
            gid: graph.to_dict() for gid, graph in sorted(system.graphs.items())
        },
        "perTurnTokens": report.per_turn_tokens,
        "cumulativeTokens": report.cumulative_tokens,
        "activePerTurn": report.active_per_turn,
        "completed": report.completed,
        "report": report.to_dict(),
    }


def create_app(controller: RunController, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="park-run control plane")

    @app.get("/state")
    def state() -> JSONResponse:
        return JSONResponse(controller.get_state())

    @app.post("/command")
    async def command(cmd: dict) -> JSONResponse:
        return JSONResponse(controller.post_command(cmd))

    @app.get("/stream")
    async def stream(request: Request) -> StreamingResponse:
        subscription = controller.subscribe()

        async def gen():
            try:
                while not await request.is_disconnected():
                    try:
                        snap = subscription.get_nowait()
                    except queue.Empty:
                        await asyncio.sleep(0.05)
                        continue
                    yield f"data: {json.dumps(snap, sort_keys=True)}\n\n"
            finally:
                controller.unsubscribe(subscription)

        return StreamingResponse(
            gen(),
            media_type="text/event-stream",
            headers={"Cache-Control": "no-cache"},
        )

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="dashboard")
    return app


def serve(
    config: ScenarioConfig,
    mode: str,
    backend_name: str,
    seed: int,
    host: str,
    port: int,
    out_path: str | None = None,
    interval_ms: float = 500.0,
    static_dir: str | None = None,
) -> None:
    import uvicorn

    system = build_system(config, mode, seed)
    backend = make_backend(backend_name)
    controller = RunController(
        system,
        backend,
        max_turns=config.max_turns,
        interval_ms=interval_ms,
        out_path=out_path,
    )
    app = create_app(controller, static_dir=static_dir)
    controller.start()
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        controller.stop()
