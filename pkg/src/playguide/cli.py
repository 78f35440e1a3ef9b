"""Operator command line: serve, replay, simulate, stats, accuracy.

Exit codes: 0 success, 1 usage error, 2 data error, 3 invariant violation.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analytics import (
    AnalyticsError,
    compute_stats,
    load_truth,
    minute_accuracy,
    render_accuracy_report,
    render_stats_report,
)
from .board import BoardError
from .catalog import CatalogError
from .cues import CueLogError, read_cue_log
from .fusion import FusionError
from .session import (
    SessionConfig,
    SessionError,
    config_from_file,
    final_state_dump,
    run_inputs,
)
from .sessionlog import SessionLogError, read_session_log
from .simulate import ScenarioError, load_scenario, run_simulation

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INVARIANT = 3

DATA_ERRORS = (
    CatalogError,
    CueLogError,
    SessionLogError,
    AnalyticsError,
    ScenarioError,
    SessionError,
    FusionError,
    BoardError,
    FileNotFoundError,
    OSError,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="playguide")
    parser.add_argument("--config", help="JSON session config file")
    parser.add_argument("--catalog", help="object catalog file")
    parser.add_argument("--bank", help="phrase bank file")
    parser.add_argument("--lemmas", help="lemma dictionary file")
    parser.add_argument("--layout", help="scene layout file")
    parser.add_argument("--alpha", type=float, help="visual cue increment")
    parser.add_argument("--beta", type=float, help="spoken cue increment")
    parser.add_argument("--n-uses", type=int, help="target word uses before card replacement")
    parser.add_argument("--t-display", type=int, help="card display timeout in ms")
    parser.add_argument("--board-size", type=int, help="number of displayed cards")
    parser.add_argument("--seed", type=int, default=0, help="simulation seed")
    parser.add_argument("--out", help="output file path")

    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the session service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8765)
    serve.add_argument("--data-dir", default="session-logs", help="directory for persisted logs")

    replay = sub.add_parser("replay", help="replay a cue log or a persisted session log")
    replay.add_argument("log", help="cue log (tsv) or session log (jsonl)")

    simulate = sub.add_parser("simulate", help="run a scripted attention scenario")
    simulate.add_argument("scenario", help="scenario JSON file")

    stats = sub.add_parser("stats", help="session statistics from a session log")
    stats.add_argument("log", help="session log (jsonl)")

    accuracy = sub.add_parser("accuracy", help="minute-level recommendation accuracy")
    accuracy.add_argument("log", help="session log (jsonl)")
    accuracy.add_argument("truth", help="ground-truth focus file (json)")

    return parser


def resolve_config(args: argparse.Namespace) -> SessionConfig:
    config = config_from_file(args.config) if args.config else SessionConfig()
    overrides: dict = {}
    for key, flag in (
        ("catalog", args.catalog),
        ("bank", args.bank),
        ("lemmas", args.lemmas),
        ("layout", args.layout),
        ("alpha", args.alpha),
        ("beta", args.beta),
        ("n_uses", args.n_uses),
        ("t_display_ms", args.t_display),
        ("board_size", args.board_size),
    ):
        if flag is not None:
            overrides[key] = flag
    if not overrides:
        return config
    from .session import config_from_dict

    return config_from_dict(overrides, base=config, base_dir=Path.cwd())


def _looks_like_session_log(path: Path) -> bool:
    with path.open(encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            return line.startswith("{")
    return False


def cmd_replay(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    path = Path(args.log)
    if _looks_like_session_log(path):
        # Event-sourced reconstruction of a persisted session log.
        log = read_session_log(path)
        resources = config.load()
        dump = final_state_dump(log, resources.bank)
        if args.out:
            Path(args.out).write_text(
                "".join(line + "\n" for line in log.to_lines()), encoding="utf-8"
            )
    else:
        resources = config.load()
        engine = run_inputs(resources, config, read_cue_log(path), session_id="replay")
        dump = final_state_dump(engine.log, resources.bank)
        if args.out:
            engine.log.write(args.out)
    print(dump)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    resources = config.load()
    scenario = load_scenario(args.scenario)
    metrics, engine = run_simulation(scenario, resources, config, seed=args.seed)
    lines = ["shift\tobject\tfirst_card_ms\tlatency_ms"]
    for i, shift in enumerate(metrics.shifts):
        first = shift.first_card_ms if shift.first_card_ms is not None else "-"
        latency = shift.latency_ms if shift.latency_ms is not None else "-"
        lines.append(f"{i}\t{shift.object_id}\t{first}\t{latency}")
    lines.append("")
    lines.append(f"board_changes\t{metrics.board_changes}")
    lines.append(f"board_changes_per_minute\t{metrics.board_changes_per_minute:.6f}")
    lines.append("final_board\t" + ",".join(metrics.final_board_objects))
    lines.append("")
    lines.append(render_stats_report(metrics.stats).rstrip("\n"))
    table = "".join(line + "\n" for line in lines)
    if args.out:
        Path(args.out).write_text(table, encoding="utf-8")
        engine.log.write(str(args.out) + ".sessionlog")
    print(table, end="")
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    log = read_session_log(args.log)
    report = render_stats_report(compute_stats(log))
    if args.out:
        Path(args.out).write_text(report, encoding="utf-8")
    print(report, end="")
    return EXIT_OK


def cmd_accuracy(args: argparse.Namespace) -> int:
    log = read_session_log(args.log)
    truth = load_truth(args.truth)
    known = set(log.started.objects)
    for object_id in truth.minutes:
        if object_id not in known:
            raise AnalyticsError(f"unknown truth object id {object_id!r}")
    report = render_accuracy_report(minute_accuracy(log, truth))
    if args.out:
        Path(args.out).write_text(report, encoding="utf-8")
    print(report, end="")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    from .service import serve

    config = resolve_config(args)
    config.load()  # fail fast on bad data files
    serve(config, host=args.host, port=args.port, data_dir=args.data_dir)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    handlers = {
        "serve": cmd_serve,
        "replay": cmd_replay,
        "simulate": cmd_simulate,
        "stats": cmd_stats,
        "accuracy": cmd_accuracy,
    }
    try:
        return handlers[args.command](args)
    except DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except AssertionError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
