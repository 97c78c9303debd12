"""HTTP session service: create and control analysis sessions, query
indicator snapshots, export CSVs, and stream update notices.

One driver thread per running session applies events under the session
lock; request handlers take the same lock for snapshot reads, so every
response reflects one consistent engine state. Clients are notified by
small "something changed" notices and re-query the panels they render.
"""
from __future__ import annotations

import json
import threading
import time
import uuid
from pathlib import Path
from typing import Iterator, Optional

from fastapi import Body, FastAPI, HTTPException, Query
from fastapi.responses import Response, StreamingResponse

from . import analytics, report, synth
from .events import (
    Message,
    SessionConfig,
    format_rfc3339_ms,
    parse_duration_ms,
    parse_event_record,
)
from .ingest import (
    FilterStats,
    ListSource,
    QueueSource,
    ReplaySource,
    SessionEngines,
    run_session,
)
from .local_metrics import GraphView

API_PREFIX = "/api/v1"
DEFAULT_FLUSH_INTERVAL_S = 0.5

CREATED = "Created"
RUNNING = "Running"
PAUSED = "Paused"
FINISHED = "Finished"
FAILED = "Failed"

# Panels a notice can name; the dashboard refetches only what changed.
PANEL_FILTER = "filter"
PANEL_GLOBAL = "global"
PANEL_SERIES = "series"
PANEL_LOCAL = "local"
PANEL_KNOWLEDGE = "knowledge"


class Session:
    """All state for one analysis session."""

    def __init__(
        self,
        session_id: str,
        config: SessionConfig,
        source_desc: dict,
        graph: GraphView,
        source,
        total: Optional[int],
        pace: Optional[float],
        flush_interval_s: float,
        persist_report: Optional[Path],
    ):
        self.id = session_id
        self.config = config
        self.source_desc = source_desc
        self.source = source
        self.total = total
        self.pace = pace
        self.flush_interval_s = flush_interval_s
        self.persist_report = persist_report

        self.lock = threading.Lock()
        self.engines = SessionEngines(config, graph)
        self.stats = FilterStats()
        self.state = CREATED
        self.error: Optional[str] = None
        self.events_processed = 0

        self.ctl = threading.Condition()
        self._paused = False
        self._stopping = False
        self._driver: Optional[threading.Thread] = None

        self.notice_cond = threading.Condition()
        self.notices: list[dict] = []
        self.seq = 0
        self.dirty: set[str] = set()
        self.terminal_emitted = False

    # -- driver side ------------------------------------------------------

    def _gate(self) -> bool:
        """Block while paused; False once stopping."""
        with self.ctl:
            while self._paused and not self._stopping:
                self.ctl.wait()
            return not self._stopping

    def _paced(self) -> Iterator[Message]:
        prev_ms: Optional[int] = None
        for msg in self.source:
            if self.pace and prev_ms is not None:
                deadline = time.monotonic() + (msg.ts_ms - prev_ms) / 1000.0 / self.pace
                with self.ctl:
                    while not self._stopping:
                        remaining = deadline - time.monotonic()
                        if remaining <= 0:
                            break
                        self.ctl.wait(remaining)
                    if self._stopping:
                        return
            prev_ms = msg.ts_ms
            yield msg

    def _stream(self) -> Iterator[Message]:
        for msg in self._paced():
            self.events_processed += 1
            self._mark(PANEL_FILTER)
            yield msg
            if not self._gate():
                return

    def _mark(self, *panels: str) -> None:
        with self.notice_cond:
            self.dirty.update(panels)

    def _on_event(self, msg: Message, is_new: bool) -> None:
        if is_new:
            self._mark(PANEL_GLOBAL, PANEL_SERIES, PANEL_KNOWLEDGE, PANEL_LOCAL)
        else:
            self._mark(PANEL_GLOBAL, PANEL_SERIES, PANEL_KNOWLEDGE)

    def _emit(self, state: Optional[str] = None) -> None:
        with self.notice_cond:
            if self.terminal_emitted:
                return
            if state is None and not self.dirty:
                return
            self.seq += 1
            notice = {
                "seq": self.seq,
                "event_count": self.events_processed,
                "changed": sorted(self.dirty),
            }
            self.dirty.clear()
            if state is not None:
                notice["state"] = state
                if self.error is not None:
                    notice["error"] = self.error
                self.terminal_emitted = True
            self.notices.append(notice)
            self.notice_cond.notify_all()

    def _flusher(self) -> None:
        while True:
            with self.notice_cond:
                if self.terminal_emitted:
                    return
            time.sleep(self.flush_interval_s)
            self._emit()

    def _drive(self) -> None:
        flusher = threading.Thread(target=self._flusher, daemon=True)
        flusher.start()
        final = FINISHED
        try:
            run_session(
                self.config,
                self._stream(),
                self.engines,
                on_event=self._on_event,
                lock=self.lock,
                stats=self.stats,
            )
        except Exception as exc:
            final = FAILED
            self.error = f"{type(exc).__name__}: {exc}"
        with self.ctl:
            self.state = final
            self.ctl.notify_all()
        if final == FINISHED and self.persist_report is not None:
            try:
                doc = self.build_report()
                self.persist_report.parent.mkdir(parents=True, exist_ok=True)
                self.persist_report.write_text(report.dumps_report(doc), encoding="utf-8")
            except OSError as exc:
                self.error = f"persist failed: {exc}"
        self._emit(state=final)

    # -- control side -----------------------------------------------------

    def start(self) -> None:
        with self.ctl:
            if self.state != CREATED:
                raise Conflict(f"cannot start from {self.state}")
            self.state = RUNNING
            self._driver = threading.Thread(target=self._drive, daemon=True)
            self._driver.start()

    def pause(self) -> None:
        with self.ctl:
            if self.state != RUNNING:
                raise Conflict(f"cannot pause from {self.state}")
            self._paused = True
            self.state = PAUSED
            self.ctl.notify_all()

    def resume(self) -> None:
        with self.ctl:
            if self.state != PAUSED:
                raise Conflict(f"cannot resume from {self.state}")
            self._paused = False
            self.state = RUNNING
            self.ctl.notify_all()

    def stop(self) -> None:
        with self.ctl:
            if self.state not in (RUNNING, PAUSED):
                raise Conflict(f"cannot stop from {self.state}")
            self._stopping = True
            self._paused = False
            self.ctl.notify_all()
        if isinstance(self.source, QueueSource):
            self.source.close()
        driver = self._driver
        if driver is not None:
            driver.join(timeout=10.0)

    # -- read side --------------------------------------------------------

    def handle(self) -> dict:
        with self.ctl:
            state = self.state
            error = self.error
        progress: dict = {"events": self.events_processed}
        progress["total"] = self.total
        return {
            "id": self.id,
            "state": state,
            "config": self.config.to_json(),
            "source": self.source_desc,
            "progress": progress,
            "error": error,
        }

    def build_report(self) -> dict:
        with self.lock:
            return report.build_report(self.config, self.engines, self.stats)


class Conflict(RuntimeError):
    pass


def _bad(status: int, detail: str):
    return HTTPException(status_code=status, detail=detail)


def _build_source(desc: dict, config: SessionConfig):
    """Validate a source descriptor eagerly; returns (source, graph, total).

    Replay needs readable files; generator parameters are expanded to the
    full synthetic log up front so identical seeds give identical sessions.
    """
    kind = desc.get("kind")
    if kind == "replay":
        log = desc.get("log")
        if not log:
            raise _bad(400, "replay source needs a log path")
        log_path = Path(log)
        if not log_path.is_file():
            raise _bad(404, f"log file not found: {log}")
        graph_path = desc.get("graph")
        if graph_path is not None and not Path(graph_path).is_file():
            raise _bad(404, f"graph file not found: {graph_path}")
        graph = GraphView.load(graph_path) if graph_path else GraphView()
        with open(log_path, encoding="utf-8") as fh:
            total = sum(1 for line in fh if line.strip())
        return ReplaySource(log_path, legacy_140=config.legacy_140), graph, total
    if kind == "generator":
        if "preset" in desc:
            try:
                params, _targets = synth.load_preset(desc["preset"])
            except KeyError as exc:
                raise _bad(404, str(exc)) from None
            if "params" in desc:
                merged = params.to_json()
                merged.update(desc["params"])
                params = _parse_params(merged)
        else:
            params = _parse_params(desc.get("params") or {})
        graph_records = synth.generate_graph_records(params)
        messages = synth.generate_cascade_messages(graph_records, params)
        return ListSource(messages), GraphView(graph_records), len(messages)
    if kind == "live":
        graph_path = desc.get("graph")
        if graph_path is not None and not Path(graph_path).is_file():
            raise _bad(404, f"graph file not found: {graph_path}")
        graph = GraphView.load(graph_path) if graph_path else GraphView()
        return QueueSource(), graph, None
    raise _bad(400, f"unknown source kind: {kind!r}")


def _parse_params(data: dict) -> synth.GeneratorParams:
    try:
        return synth.GeneratorParams.from_json(data)
    except (synth.InvalidParams, TypeError) as exc:
        raise _bad(400, f"invalid generator params: {exc}") from None


class SessionRegistry:
    def __init__(self):
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}

    def create(self, body: dict) -> Session:
        config_obj = body.get("config")
        if not isinstance(config_obj, dict):
            raise _bad(400, "config object is required")
        try:
            config = SessionConfig.from_json(config_obj)
        except (ValueError, KeyError, TypeError) as exc:
            raise _bad(400, f"invalid config: {exc}") from None
        source_desc = body.get("source")
        if not isinstance(source_desc, dict):
            raise _bad(400, "source descriptor is required")
        source, graph, total = _build_source(source_desc, config)
        pace = body.get("pace")
        if pace is not None and (not isinstance(pace, (int, float)) or pace <= 0):
            raise _bad(400, "pace must be a positive number")
        flush = body.get("flush_interval_s", DEFAULT_FLUSH_INTERVAL_S)
        if not isinstance(flush, (int, float)) or flush <= 0:
            raise _bad(400, "flush_interval_s must be a positive number")
        persist = body.get("persist_report")
        session_id = body.get("id") or f"s{uuid.uuid4().hex[:10]}"
        session = Session(
            session_id=session_id,
            config=config,
            source_desc=dict(source_desc),
            graph=graph,
            source=source,
            total=total,
            pace=pace,
            flush_interval_s=float(flush),
            persist_report=Path(persist) if persist else None,
        )
        with self._lock:
            if session_id in self._sessions:
                raise _bad(409, f"session id already exists: {session_id}")
            self._sessions[session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise _bad(404, f"unknown session: {session_id}")
        return session

    def all(self) -> list[Session]:
        with self._lock:
            return list(self._sessions.values())


def _envelope(session: Session, data) -> dict:
    return {"seq": session.events_processed, "data": data}


def _csv_response(name: str, payload: bytes) -> Response:
    return Response(
        content=payload,
        media_type="text/csv; charset=utf-8",
        headers={"Content-Disposition": f'attachment; filename="{name}"'},
    )


def create_app(*, static_dir: Optional[str | Path] = None) -> FastAPI:
    app = FastAPI(title="diffscope", docs_url=None, redoc_url=None)
    registry = SessionRegistry()
    app.state.registry = registry

    @app.get(f"{API_PREFIX}/health")
    def health():
        return {"status": "ok"}

    @app.get(f"{API_PREFIX}/presets")
    def presets():
        return [synth.preset_doc(name) for name in synth.list_presets()]

    @app.post(f"{API_PREFIX}/sessions", status_code=201)
    def create_session(body: dict = Body(...)):
        session = registry.create(body)
        return _envelope(session, session.handle())

    @app.get(f"{API_PREFIX}/sessions")
    def list_sessions():
        sessions = sorted(registry.all(), key=lambda s: s.id)
        return {"seq": 0, "data": [s.handle() for s in sessions]}

    @app.get(f"{API_PREFIX}/sessions/{{session_id}}")
    def get_session(session_id: str):
        session = registry.get(session_id)
        return _envelope(session, session.handle())

    @app.post(f"{API_PREFIX}/sessions/{{session_id}}/control")
    def control_session(session_id: str, body: dict = Body(...)):
        session = registry.get(session_id)
        action = body.get("action")
        try:
            if action == "start":
                session.start()
            elif action == "pause":
                session.pause()
            elif action == "resume":
                session.resume()
            elif action == "stop":
                session.stop()
            else:
                raise _bad(400, f"unknown action: {action!r}")
        except Conflict as exc:
            raise _bad(409, str(exc)) from None
        return _envelope(session, session.handle())

    @app.post(f"{API_PREFIX}/sessions/{{session_id}}/events", status_code=202)
    def push_events(session_id: str, body: list = Body(...)):
        session = registry.get(session_id)
        if not isinstance(session.source, QueueSource):
            raise _bad(409, "session source does not accept pushed events")
        pushed = 0
        for i, item in enumerate(body, start=1):
            try:
                msg = parse_event_record(
                    json.dumps(item), legacy_140=session.config.legacy_140, line_no=i
                )
            except ValueError as exc:
                raise _bad(400, f"event {i}: {exc}") from None
            try:
                session.source.push(msg)
            except RuntimeError as exc:
                raise _bad(409, str(exc)) from None
            pushed += 1
        return {"seq": session.events_processed, "data": {"pushed": pushed}}

    @app.get(f"{API_PREFIX}/sessions/{{session_id}}/global")
    def global_snapshot(session_id: str):
        session = registry.get(session_id)
        with session.lock:
            data = {
                "global": session.engines.global_.snapshot().to_json(),
                "filter_stats": session.stats.to_json(),
                "local": {
                    "population": len(session.engines.local.records),
                    "graph_miss": session.engines.local.graph_miss_count,
                },
                "start_ts": None
                if session.engines.start_ms is None
                else format_rfc3339_ms(
                    session.engines.start_ms, session.config.display_offset_hours
                ),
            }
            return _envelope(session, data)

    @app.get(f"{API_PREFIX}/sessions/{{session_id}}/series")
    def series(session_id: str, bucket: Optional[str] = Query(default=None)):
        session = registry.get(session_id)
        bucket_ms = None
        if bucket is not None:
            try:
                bucket_ms = parse_duration_ms(bucket)
            except ValueError as exc:
                raise _bad(400, str(exc)) from None
        with session.lock:
            try:
                rows = session.engines.global_.bucket_series(
                    session.engines.start_ms, bucket_ms=bucket_ms
                )
            except ValueError as exc:
                raise _bad(400, str(exc)) from None
            data = report.series_rows_to_json(rows, session.config.display_offset_hours)
            return _envelope(session, data)

    @app.get(f"{API_PREFIX}/sessions/{{session_id}}/local/distribution")
    def distribution(session_id: str, field: str = Query(...)):
        session = registry.get(session_id)
        with session.lock:
            try:
                hist = analytics.distribution(session.engines.local.population(), field)
            except analytics.UnknownField as exc:
                raise _bad(400, str(exc)) from None
            return _envelope(session, hist.to_json())

    @app.get(f"{API_PREFIX}/sessions/{{session_id}}/local/scatter")
    def scatter(session_id: str, x: str = Query(...), y: str = Query(...)):
        session = registry.get(session_id)
        with session.lock:
            try:
                series_obj = analytics.correlation_scatter(
                    session.engines.local.population(), x, y
                )
            except analytics.UnknownField as exc:
                raise _bad(400, str(exc)) from None
            return _envelope(session, series_obj.to_json())

    @app.get(f"{API_PREFIX}/sessions/{{session_id}}/knowledge")
    def knowledge(session_id: str, k: int = Query(default=report.DEFAULT_TOP_K)):
        session = registry.get(session_id)
        with session.lock:
            try:
                summary = session.engines.knowledge.snapshot(k)
            except ValueError as exc:
                raise _bad(400, str(exc)) from None
            return _envelope(session, summary.to_json())

    @app.get(f"{API_PREFIX}/sessions/{{session_id}}/report")
    def full_report(session_id: str):
        session = registry.get(session_id)
        return session.build_report()

    @app.get(f"{API_PREFIX}/sessions/{{session_id}}/export/global.csv")
    def export_global(session_id: str):
        session = registry.get(session_id)
        doc = session.build_report()
        payload = report.csv_bytes(report.SERIES_CSV_COLUMNS, report.series_csv_rows(doc))
        return _csv_response("global.csv", payload)

    @app.get(f"{API_PREFIX}/sessions/{{session_id}}/export/local.csv")
    def export_local(session_id: str):
        session = registry.get(session_id)
        offset = session.config.display_offset_hours
        with session.lock:
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
                for r in session.engines.local.population()
            ]
        payload = report.csv_bytes(report.LOCAL_CSV_COLUMNS, rows)
        return _csv_response("local.csv", payload)

    @app.get(f"{API_PREFIX}/sessions/{{session_id}}/export/knowledge.csv")
    def export_knowledge(session_id: str):
        session = registry.get(session_id)
        with session.lock:
            know = session.engines.knowledge.snapshot(report.DEFAULT_TOP_K).to_json()
        payload = report.csv_bytes(
            ("category", "key", "count", "captured"), report.knowledge_csv_rows(know)
        )
        return _csv_response("knowledge.csv", payload)

    @app.get(f"{API_PREFIX}/sessions/{{session_id}}/feed")
    def feed(session_id: str, since: Optional[int] = Query(default=None)):
        session = registry.get(session_id)

        def stream():
            with session.notice_cond:
                if since is not None:
                    cursor = since
                elif session.terminal_emitted:
                    cursor = session.seq - 1
                else:
                    cursor = session.seq
            while True:
                batch: list[dict] = []
                with session.notice_cond:
                    while session.seq <= cursor:
                        if not session.notice_cond.wait(timeout=15.0):
                            break
                    for notice in session.notices[cursor:]:
                        batch.append(notice)
                    if batch:
                        cursor = batch[-1]["seq"]
                if not batch:
                    yield ": ping\n\n"
                    continue
                for notice in batch:
                    yield f"data: {json.dumps(notice, sort_keys=True)}\n\n"
                    if "state" in notice:
                        return

        return StreamingResponse(stream(), media_type="text/event-stream")

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="static")

    return app
