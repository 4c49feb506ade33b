"""Command-line entry points: run, compare, serve.

Exit codes: 0 — run completed; 2 — run hit the turn budget before all
tasks were done; 1 — any error (bad flags, bad scenario, backend setup).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .backend import make_backend
from .composition import CGOT, GOT
from .engine import run_to_completion
from .errors import CgotError
from .metrics import RunReport, compare
from .scenario import ScenarioConfig, build_system, load_scenario

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCOMPLETE = 2


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_ERROR)


def _build_parser() -> _Parser:
    parser = _Parser(prog="cgot-sim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one scenario in one mode")
    run.add_argument("--scenario", required=True, help='path or "default"')
    run.add_argument("--mode", choices=[CGOT, GOT], default=CGOT)
    run.add_argument("--backend", choices=["scripted", "http"], default="scripted")
    run.add_argument("--seed", type=int, default=None, help="overrides the scenario seed")
    run.add_argument("--out", default=None, help="report CSV path")
    run.add_argument("--log", default=None, help="per-turn JSONL log path")
    run.add_argument(
        "--max-turns", type=int, default=None, help="overrides the scenario turn budget"
    )

    cmp_ = sub.add_parser("compare", help="run both modes and contrast token usage")
    cmp_.add_argument("--scenario", required=True)
    cmp_.add_argument("--backend", choices=["scripted", "http"], default="scripted")
    cmp_.add_argument("--seed", type=int, default=None)
    cmp_.add_argument("--out", default=None, help="comparison CSV path")

    serve = sub.add_parser("serve", help="interactive run behind the control plane")
    serve.add_argument("--scenario", required=True)
    serve.add_argument("--mode", choices=[CGOT, GOT], default=CGOT)
    serve.add_argument("--backend", choices=["scripted", "http"], default="scripted")
    serve.add_argument("--seed", type=int, default=None)
    serve.add_argument("--port", type=int, required=True)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--out", default=None, help="report CSV written on completion")
    serve.add_argument(
        "--interval", type=float, default=500.0, help="Run-mode step interval (ms)"
    )
    serve.add_argument(
        "--static", default=None, help="directory of dashboard assets to serve at /"
    )
    return parser


def _effective_seed(config: ScenarioConfig, flag: int | None) -> int:
    return config.seed if flag is None else flag


def _execute_run(
    config: ScenarioConfig, mode: str, backend_name: str, seed: int,
    max_turns: int, out: str | None, log: str | None,
) -> RunReport:
    system = build_system(config, mode, seed)
    backend = make_backend(backend_name)
    log_lines: list[str] = []

    def on_turn(record):
        log_lines.append(json.dumps(record.to_dict(), sort_keys=True))

    report = run_to_completion(system, backend, max_turns, on_turn=on_turn)
    if out:
        Path(out).write_text(report.to_csv())
    if log:
        log_lines.append(
            json.dumps(
                {
                    "final": True,
                    "turn": system.env.turn,
                    "environment": system.env.to_dict(),
                    "agents": {
                        aid: agent.to_dict()
                        for aid, agent in sorted(system.agents.items())
                    },
                    "report": report.to_dict(),
                },
                sort_keys=True,
            )
        )
        Path(log).write_text("\n".join(log_lines) + "\n")
    if system.substitutions:
        print(
            f"note: scripted oracle substituted for {len(system.substitutions)} "
            "failed backend call(s)",
            file=sys.stderr,
        )
    return report


def _cmd_run(args) -> int:
    config = load_scenario(args.scenario)
    seed = _effective_seed(config, args.seed)
    max_turns = args.max_turns if args.max_turns is not None else config.max_turns
    report = _execute_run(
        config, args.mode, args.backend, seed, max_turns, args.out, args.log
    )
    status = "completed" if report.completed else "incomplete"
    print(
        f"{report.mode} run {status}: makespan={report.makespan_turns} turns, "
        f"tokens={report.cumulative_tokens}, "
        f"compositions={report.compositions_formed}"
    )
    return EXIT_OK if report.completed else EXIT_INCOMPLETE


def _cmd_compare(args) -> int:
    config = load_scenario(args.scenario)
    seed = _effective_seed(config, args.seed)
    report_got = _execute_run(
        config, GOT, args.backend, seed, config.max_turns, None, None
    )
    report_cgot = _execute_run(
        config, CGOT, args.backend, seed, config.max_turns, None, None
    )
    comparison = compare(report_got, report_cgot)
    if args.out:
        Path(args.out).write_text(comparison.to_csv())
    print(comparison.summary())
    both_done = report_got.completed and report_cgot.completed
    return EXIT_OK if both_done else EXIT_INCOMPLETE


def _cmd_serve(args) -> int:
    from .control_plane import serve  # deferred: pulls in fastapi/uvicorn

    config = load_scenario(args.scenario)
    seed = _effective_seed(config, args.seed)
    serve(
        config,
        mode=args.mode,
        backend_name=args.backend,
        seed=seed,
        host=args.host,
        port=args.port,
        out_path=args.out,
        interval_ms=args.interval,
        static_dir=args.static,
    )
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {"run": _cmd_run, "compare": _cmd_compare, "serve": _cmd_serve}
    try:
        return handlers[args.command](args)
    except CgotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
