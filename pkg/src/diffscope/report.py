"""SessionReport assembly, canonical serialization and report comparison.

A report is a plain JSON-able dict so the CLI, the service and the batch
recomputation can all be diffed value-by-value. Serialization is
canonical (sorted keys, fixed separators) so identical sessions produce
byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Optional

from . import analytics
from .events import SessionConfig, format_rfc3339_ms
from .global_metrics import series_rows_to_json
from .ingest import FilterStats, SessionEngines
from .knowledge import KnowledgeSummary

SCATTER_PAIRS = (("nb_messages", "nb_fe"), ("nb_messages", "total_r"))
DEFAULT_TOP_K = 20

SERIES_CSV_COLUMNS = (
    "bucket_start",
    "nb_tw",
    "nb_rtw",
    "new_users",
    "bkt_avg_gap_tw_s",
    "bkt_avg_gap_rtw_s",
    "cum_avg_tw_per_user",
    "cum_avg_rtw_per_user",
)

LOCAL_CSV_COLUMNS = (
    "user",
    "nb_t",
    "nb_rt",
    "first_post_ts",
    "nb_fe",
    "nb_fg_p",
    "total_r",
    "elapsed_h",
    "graph_miss",
)


def build_report(
    config: SessionConfig,
    engines: SessionEngines,
    stats: FilterStats,
    *,
    k: int = DEFAULT_TOP_K,
) -> dict:
    """Assemble the full indicator report from one consistent engine state."""
    offset = config.display_offset_hours
    records = engines.local.population()
    distributions = {
        f: analytics.distribution(records, f).to_json() for f in analytics.LOCAL_FIELDS
    }
    correlations = {
        f"{x}_vs_{y}": analytics.correlation_scatter(records, x, y).to_json()
        for x, y in SCATTER_PAIRS
    }
    fe_values = analytics.field_values(records, "nb_fe")
    heavy_tail: dict = {"field": "nb_fe", "ccdf": [], "loglog_slope": None}
    if fe_values:
        points = analytics.ccdf(fe_values)
        heavy_tail["ccdf"] = [[v, f] for v, f in points]
        try:
            heavy_tail["loglog_slope"] = analytics.loglog_slope(points)
        except analytics.InsufficientPoints:
            pass
    elapsed = analytics.elapsed_summary(records).to_json() if records else None
    return {
        "config": config.to_json(),
        "session": {
            "start_ts": None
            if engines.start_ms is None
            else format_rfc3339_ms(engines.start_ms, offset),
            "last_event_ts": None
            if engines.global_.last_ms is None
            else format_rfc3339_ms(engines.global_.last_ms, offset),
        },
        "filter_stats": stats.to_json(),
        "global": engines.global_.snapshot().to_json(),
        "series": series_rows_to_json(
            engines.global_.bucket_series(engines.start_ms), offset
        ),
        "local": {
            "population": len(records),
            "graph_miss": engines.local.graph_miss_count,
        },
        "distributions": distributions,
        "heavy_tail": heavy_tail,
        "correlations": correlations,
        "elapsed": elapsed,
        "knowledge": engines.knowledge.snapshot(k).to_json(),
    }


def dumps_report(report: dict) -> str:
    return json.dumps(report, ensure_ascii=False, sort_keys=True, indent=2) + "\n"


def loads_report(text: str) -> dict:
    return json.loads(text)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    return str(value)


def _write_csv(path: Path, header: tuple[str, ...], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows([[_cell(v) for v in row] for row in rows])


def series_csv_rows(report: dict) -> list[list]:
    return [[row[c] for c in SERIES_CSV_COLUMNS] for row in report["series"]]


def knowledge_csv_rows(knowledge: dict) -> list[list]:
    rows: list[list] = []
    for entry in knowledge["top_tweets"]:
        rows.append(["tweet", entry["id"], entry["count"], entry["captured"]])
    for entry in knowledge["top_words"]:
        rows.append(["word", entry["word"], entry["count"], ""])
    for entry in knowledge["top_users"]:
        rows.append(["user", entry["user"], entry["count"], ""])
    for entry in knowledge["top_links"]:
        rows.append(["link", entry["url"], entry["count"], ""])
    return rows


def export_csvs(out_dir: str | Path, report: dict, engines: Optional[SessionEngines]) -> list[Path]:
    """Write the CSV views of a report into out_dir; returns written paths.

    The per-user local.csv needs live engine records and is skipped when
    exporting from a saved report alone.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    p = out / "global.csv"
    _write_csv(p, SERIES_CSV_COLUMNS, series_csv_rows(report))
    written.append(p)

    if engines is not None:
        offset = report["config"]["display_offset_hours"]
        rows = [
            [
                r.user_id,
                r.nb_t,
                r.nb_rt,
                format_rfc3339_ms(r.first_post_ms, offset),
                r.nb_fe,
                r.nb_fg_p,
                r.total_r,
                repr(r.elapsed_h),
                r.graph_miss,
            ]
            for r in engines.local.population()
        ]
        p = out / "local.csv"
        _write_csv(p, LOCAL_CSV_COLUMNS, rows)
        written.append(p)

    p = out / "knowledge.csv"
    _write_csv(p, ("category", "key", "count", "captured"), knowledge_csv_rows(report["knowledge"]))
    written.append(p)

    know = report["knowledge"]
    for name, rows in (
        ("knowledge_tweets", [[e["id"], e["count"], e["captured"]] for e in know["top_tweets"]]),
        ("knowledge_words", [[e["word"], e["count"]] for e in know["top_words"]]),
        ("knowledge_users", [[e["user"], e["count"]] for e in know["top_users"]]),
        ("knowledge_links", [[e["url"], e["count"]] for e in know["top_links"]]),
    ):
        p = out / f"{name}.csv"
        header = ("id", "count", "captured") if name == "knowledge_tweets" else ("key", "count")
        _write_csv(p, header, rows)
        written.append(p)

    for field_name, hist in report["distributions"].items():
        p = out / f"distribution_{field_name}.csv"
        _write_csv(p, ("bin_low", "bin_high", "count"), [list(b) for b in hist["bins"]])
        written.append(p)

    for pair_name, scatter in report["correlations"].items():
        p = out / f"scatter_{pair_name}.csv"
        _write_csv(p, ("user", "x", "y"), [list(pt) for pt in scatter["points"]])
        written.append(p)

    return written


def csv_bytes(header: tuple[str, ...], rows: list[list]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows([[_cell(v) for v in row] for row in rows])
    return buf.getvalue().encode("utf-8")


def compare_values(a, b, path: str, diffs: list[str], rel: float = 1e-9, abs_tol: float = 1e-12) -> None:
    if isinstance(a, bool) or isinstance(b, bool):
        if a is not b:
            diffs.append(f"{path}: {a!r} != {b!r}")
        return
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        if isinstance(a, int) and isinstance(b, int):
            if a != b:
                diffs.append(f"{path}: {a} != {b} (exact)")
            return
        fa, fb = float(a), float(b)
        if abs(fa - fb) > max(abs_tol, rel * max(abs(fa), abs(fb))):
            diffs.append(f"{path}: {fa!r} != {fb!r} (rel {rel})")
        return
    if type(a) is not type(b):
        diffs.append(f"{path}: type {type(a).__name__} != {type(b).__name__}")
        return
    if isinstance(a, dict):
        for key in sorted(set(a) | set(b)):
            if key not in a or key not in b:
                diffs.append(f"{path}.{key}: present in only one report")
                continue
            compare_values(a[key], b[key], f"{path}.{key}", diffs, rel, abs_tol)
        return
    if isinstance(a, list):
        if len(a) != len(b):
            diffs.append(f"{path}: length {len(a)} != {len(b)}")
            return
        for i, (x, y) in enumerate(zip(a, b)):
            compare_values(x, y, f"{path}[{i}]", diffs, rel, abs_tol)
        return
    if a != b:
        diffs.append(f"{path}: {a!r} != {b!r}")


def compare_reports(a: dict, b: dict, *, rel: float = 1e-9) -> list[str]:
    """Diff two reports: counts exact, ratios within rel. Returns divergences."""
    diffs: list[str] = []
    compare_values(a, b, "report", diffs, rel)
    return diffs
