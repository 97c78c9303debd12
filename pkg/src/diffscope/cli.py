"""Command-line front door: replay, generate, oracle, serve, export.

Every path is a thin composition of module operations. Exit codes:
0 success, 1 data/runtime errors (parse failures carry line numbers),
2 bad flags, 3 oracle divergence. Each flag falls back to an
environment variable DIFFSCOPE_<FLAG> (dashes as underscores).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional

from . import report as report_mod
from . import synth
from .events import (
    RecordError,
    SessionConfig,
    parse_duration_ms,
    parse_rfc3339_ms,
)
from .global_metrics import OrderViolation
from .ingest import ReplaySource, SessionEngines, SourceOrderViolation, run_session
from .local_metrics import GraphView
from .oracle import batch_oracle


class _EnvError(Exception):
    pass


def _env(flag: str, cast=str):
    name = "DIFFSCOPE_" + flag.upper().replace("-", "_")
    raw = os.environ.get(name)
    if raw is None:
        return None
    try:
        return cast(raw)
    except (ValueError, TypeError) as exc:
        raise _EnvError(f"{name}={raw!r}: {exc}") from None


def _env_bool(raw: str) -> bool:
    return raw.strip().lower() in ("1", "true", "yes", "on")


def _split_keywords(raw: str) -> list[str]:
    return [k.strip() for k in raw.split(",") if k.strip()]


def _fmt(value: Optional[float], suffix: str = "") -> str:
    if value is None:
        return "-"
    return f"{value:.3f}{suffix}"


def _session_config(args, parser: argparse.ArgumentParser) -> SessionConfig:
    if not args.keywords:
        parser.error("--keywords is required (comma-separated, non-empty)")
    keywords = _split_keywords(args.keywords)
    if not keywords:
        parser.error("--keywords must contain at least one non-empty keyword")
    try:
        start_ms = None if args.start is None else parse_rfc3339_ms(args.start)
    except RecordError as exc:
        parser.error(f"--start: {exc}")
    try:
        bucket_ms = parse_duration_ms(args.bucket)
        duration_ms = None if args.duration is None else parse_duration_ms(args.duration)
    except ValueError as exc:
        parser.error(str(exc))
    try:
        return SessionConfig(
            keywords=keywords,
            language=args.language,
            start_ms=start_ms,
            duration_ms=duration_ms,
            bucket_ms=bucket_ms,
            display_offset_hours=args.display_offset,
            legacy_140=args.legacy_140,
        )
    except ValueError as exc:
        parser.error(str(exc))


def _print_summary(doc: dict) -> None:
    stats = doc["filter_stats"]
    glob = doc["global"]
    print(
        "events: seen {seen}  accepted {accepted}  "
        "rejected keyword {rejected_keyword}  language {rejected_language}  "
        "duplicates {duplicates_dropped}".format(**stats)
    )
    print(
        f"nb_tw {glob['nb_tw']}  nb_rtw {glob['nb_rtw']}  nb_us {glob['nb_us']}"
    )
    print(
        f"avg tw/user {_fmt(glob['avg_tw_per_user'])}  "
        f"avg rtw/user {_fmt(glob['avg_rtw_per_user'])}  "
        f"avg gap tw {_fmt(glob['avg_gap_tw_s'], 's')}  "
        f"avg gap rtw {_fmt(glob['avg_gap_rtw_s'], 's')}"
    )
    print(f"local population {doc['local']['population']}  graph misses {doc['local']['graph_miss']}")


def _cmd_replay(args, parser) -> int:
    if not args.log:
        parser.error("--log is required")
    config = _session_config(args, parser)
    log_path = Path(args.log)
    if not log_path.is_file():
        print(f"error: log file not found: {log_path}", file=sys.stderr)
        return 1
    if args.graph and not Path(args.graph).is_file():
        print(f"error: graph file not found: {args.graph}", file=sys.stderr)
        return 1
    graph = GraphView.load(args.graph) if args.graph else GraphView()
    engines = SessionEngines(config, graph)
    try:
        stats = run_session(config, ReplaySource(log_path, legacy_140=config.legacy_140), engines)
    except RecordError as exc:
        where = f"{log_path}:{exc.line_no}: " if exc.line_no else f"{log_path}: "
        print(f"error: {where}{exc}", file=sys.stderr)
        return 1
    except (OrderViolation, SourceOrderViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    doc = report_mod.build_report(config, engines, stats)
    _print_summary(doc)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(report_mod.dumps_report(doc), encoding="utf-8")
        written = report_mod.export_csvs(out, doc, engines)
        print(f"wrote {out / 'report.json'} and {len(written)} CSV files")
    return 0


_PARAM_FLAGS = {
    "users": "n_users",
    "alpha": "follower_exponent",
    "spontaneous": "base_spontaneous_rate",
    "influence": "influence_rate",
    "retweet_fraction": "retweet_fraction",
    "repost": "repost_rate",
    "steps": "n_steps",
    "decay": "decay",
    "seed": "seed",
    "topic": "topic",
    "start": "start_ts",
    "link_rate": "link_rate",
    "hashtag_rate": "hashtag_rate",
}


def _cmd_generate(args, parser) -> int:
    if not args.out_log or not args.out_graph:
        parser.error("--out-log and --out-graph are required")
    raw: dict = {}
    if args.preset:
        try:
            preset_params, _ = synth.load_preset(args.preset)
        except KeyError as exc:
            parser.error(str(exc))
        raw = preset_params.to_json()
    for flag, field_name in _PARAM_FLAGS.items():
        value = getattr(args, flag)
        if value is not None:
            raw[field_name] = value
    if args.step_width is not None:
        try:
            raw["step_width_s"] = parse_duration_ms(args.step_width) / 1000.0
        except ValueError as exc:
            parser.error(str(exc))
    if args.languages is not None:
        raw["languages"] = [s for s in _split_keywords(args.languages)]
    try:
        params = synth.GeneratorParams.from_json(raw)
    except synth.InvalidParams as exc:
        parser.error(str(exc))
    graph_path = synth.generate_graph(params, args.out_graph)
    log_path = synth.generate_cascade(graph_path, params, args.out_log)
    with open(log_path, encoding="utf-8") as fh:
        n_lines = sum(1 for line in fh if line.strip())
    print(f"wrote {graph_path} ({params.n_users} users) and {log_path} ({n_lines} events)")
    return 0


def _cmd_oracle(args, parser) -> int:
    if not args.log:
        parser.error("--log is required")
    compare_doc = None
    if args.compare:
        compare_path = Path(args.compare)
        if not compare_path.is_file():
            print(f"error: report not found: {compare_path}", file=sys.stderr)
            return 1
        compare_doc = report_mod.loads_report(compare_path.read_text(encoding="utf-8"))
    if args.keywords:
        config = _session_config(args, parser)
    elif compare_doc is not None:
        config = SessionConfig.from_json(compare_doc["config"])
    else:
        parser.error("provide --keywords or --compare (for its embedded config)")
    try:
        doc = batch_oracle(args.log, args.graph, config)
    except RecordError as exc:
        where = f"{args.log}:{exc.line_no}: " if exc.line_no else ""
        print(f"error: {where}{exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.out:
        Path(args.out).write_text(report_mod.dumps_report(doc), encoding="utf-8")
    if compare_doc is None:
        if not args.out:
            sys.stdout.write(report_mod.dumps_report(doc))
        return 0
    diffs = report_mod.compare_reports(compare_doc, doc)
    if diffs:
        print(f"reports diverge ({len(diffs)} differences); first:", file=sys.stderr)
        print(f"  {diffs[0]}", file=sys.stderr)
        return 3
    print("reports agree (counts exact, ratios within 1e-9)")
    return 0


def _cmd_serve(args, parser) -> int:
    import socket

    import uvicorn

    from .service import create_app

    host, _, port_text = args.addr.rpartition(":")
    if not host or not port_text.isdigit():
        parser.error(f"--addr must be HOST:PORT, got {args.addr!r}")
    port = int(port_text)
    if args.static and not Path(args.static).is_dir():
        parser.error(f"--static directory not found: {args.static}")
    try:
        probe = socket.create_server((host, port))
        probe.close()
    except OSError as exc:
        print(f"error: cannot bind {args.addr}: {exc}", file=sys.stderr)
        return 1
    app = create_app(static_dir=args.static)
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


def _cmd_export(args, parser) -> int:
    if not args.report:
        parser.error("--report is required")
    if not args.out:
        parser.error("--out is required")
    report_path = Path(args.report)
    if not report_path.is_file():
        print(f"error: report not found: {report_path}", file=sys.stderr)
        return 1
    try:
        doc = report_mod.loads_report(report_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        print(f"error: {report_path}: {exc}", file=sys.stderr)
        return 1
    written = report_mod.export_csvs(args.out, doc, None)
    print(f"wrote {len(written)} CSV files to {args.out}")
    return 0


def _add_config_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--keywords", default=_env("keywords"), help="comma-separated filter keywords")
    sub.add_argument("--language", default=_env("language"), help="language tag filter")
    sub.add_argument("--bucket", default=_env("bucket") or "1h", help="series bucket width (default 1h)")
    sub.add_argument("--start", default=_env("start"), help="session start, RFC 3339 (default: first accepted event)")
    sub.add_argument("--duration", default=_env("duration"), help="capture window length, e.g. 72h")
    offset_env = _env("display-offset", float)
    sub.add_argument(
        "--display-offset",
        type=float,
        default=1.0 if offset_env is None else offset_env,
        help="rendered timestamp offset in hours (default +1)",
    )
    sub.add_argument(
        "--legacy-140",
        action="store_true",
        default=_env("legacy-140", _env_bool) or False,
        help="enforce the historical 140-character text limit",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diffscope")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    replay = subs.add_parser("replay", help="analyze a recorded event log")
    replay.add_argument("--log", default=_env("log"))
    replay.add_argument("--graph", default=_env("graph"))
    _add_config_flags(replay)
    replay.add_argument("--out", default=_env("out"), help="directory for report.json + CSV exports")
    replay.set_defaults(func=_cmd_replay)

    gen = subs.add_parser("generate", help="emit a synthetic graph + cascade log")
    gen.add_argument("--preset", default=_env("preset"), help="named parameter preset to start from")
    gen.add_argument("--users", type=int, default=_env("users", int))
    gen.add_argument("--alpha", type=float, default=_env("alpha", float))
    gen.add_argument("--spontaneous", type=float, default=_env("spontaneous", float))
    gen.add_argument("--influence", type=float, default=_env("influence", float))
    gen.add_argument("--retweet-fraction", type=float, default=_env("retweet-fraction", float))
    gen.add_argument("--repost", type=float, default=_env("repost", float))
    gen.add_argument("--steps", type=int, default=_env("steps", int))
    gen.add_argument("--step-width", default=_env("step-width"), help="step span, e.g. 1h")
    gen.add_argument("--decay", type=float, default=_env("decay", float))
    gen.add_argument("--seed", type=int, default=_env("seed", int))
    gen.add_argument("--topic", default=_env("topic"))
    gen.add_argument("--start", default=_env("start"), help="cascade start, RFC 3339")
    gen.add_argument("--languages", default=_env("languages"), help="comma-separated language tags")
    gen.add_argument("--link-rate", type=float, default=_env("link-rate", float))
    gen.add_argument("--hashtag-rate", type=float, default=_env("hashtag-rate", float))
    gen.add_argument("--out-log", default=_env("out-log"))
    gen.add_argument("--out-graph", default=_env("out-graph"))
    gen.set_defaults(func=_cmd_generate)

    oracle = subs.add_parser("oracle", help="recompute a report from files and diff")
    oracle.add_argument("--log", default=_env("log"))
    oracle.add_argument("--graph", default=_env("graph"))
    _add_config_flags(oracle)
    oracle.add_argument("--compare", default=_env("compare"), help="engine report.json to diff against")
    oracle.add_argument("--out", default=_env("out"), help="write the recomputed report here")
    oracle.set_defaults(func=_cmd_oracle)

    serve = subs.add_parser("serve", help="run the HTTP session service")
    serve.add_argument("--addr", default=_env("addr") or "127.0.0.1:8000")
    serve.add_argument("--static", default=_env("static"), help="directory of built dashboard assets")
    serve.set_defaults(func=_cmd_serve)

    export = subs.add_parser("export", help="render CSV views from a saved report")
    export.add_argument("--report", default=_env("report"))
    export.add_argument("--out", default=_env("out"))
    export.set_defaults(func=_cmd_export)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    try:
        parser = build_parser()
    except _EnvError as exc:
        print(f"error: bad environment value: {exc}", file=sys.stderr)
        return 2
    args = parser.parse_args(argv)
    return args.func(args, parser)


if __name__ == "__main__":
    sys.exit(main())
