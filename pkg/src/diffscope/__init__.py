"""Streaming diffusion analytics over timestamped message logs.

One pass over an ordered event stream maintains session-wide counters,
frozen per-user first-post snapshots and knowledge tallies; a separate
batch recomputation of every number doubles as the test oracle.
"""

from .events import (
    BadTimestamp,
    Kind,
    MalformedRecord,
    Message,
    RecordError,
    SessionConfig,
    UserMeta,
    format_rfc3339_ms,
    parse_rfc3339_ms,
)
from .global_metrics import GlobalEngine, GlobalIndicators, OrderViolation
from .ingest import (
    FilterStats,
    ListSource,
    QueueSource,
    ReplaySource,
    SessionEngines,
    SourceOrderViolation,
    run_session,
)
from .knowledge import KnowledgeEngine, KnowledgeSummary
from .local_metrics import GraphView, LocalEngine, UserLocalRecord
from .oracle import batch_oracle
from .report import build_report, compare_reports, dumps_report, export_csvs
from .synth import (
    GeneratorParams,
    InvalidParams,
    generate_cascade,
    generate_graph,
    list_presets,
    load_preset,
)

__version__ = "0.1.0"

__all__ = [
    "BadTimestamp",
    "FilterStats",
    "GeneratorParams",
    "GlobalEngine",
    "GlobalIndicators",
    "GraphView",
    "InvalidParams",
    "Kind",
    "KnowledgeEngine",
    "KnowledgeSummary",
    "ListSource",
    "LocalEngine",
    "MalformedRecord",
    "Message",
    "OrderViolation",
    "QueueSource",
    "RecordError",
    "ReplaySource",
    "SessionConfig",
    "SessionEngines",
    "SourceOrderViolation",
    "UserLocalRecord",
    "UserMeta",
    "batch_oracle",
    "build_report",
    "compare_reports",
    "dumps_report",
    "export_csvs",
    "format_rfc3339_ms",
    "generate_cascade",
    "generate_graph",
    "list_presets",
    "load_preset",
    "parse_rfc3339_ms",
    "run_session",
]
