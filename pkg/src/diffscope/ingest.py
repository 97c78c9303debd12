"""Session driver: pull ordered events from a source, filter, dedup, and
feed accepted messages to the metric engines.

Single-writer model: one driver applies events sequentially; snapshot
readers synchronize through the optional lock passed to run_session.
"""
from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator, Optional

from .events import Message, SessionConfig, read_event_log
from .global_metrics import GlobalEngine
from .knowledge import KnowledgeEngine
from .local_metrics import GraphView, LocalEngine

DEFAULT_QUEUE_SIZE = 65_536


class SourceOrderViolation(RuntimeError):
    """A source emitted a timestamp lower than its predecessor (tolerance 0)."""


def keyword_match(text: str, keywords: Iterable[str]) -> bool:
    """True iff text contains any keyword as a case-insensitive substring."""
    folded = text.casefold()
    return any(k.casefold() in folded for k in keywords)


def message_matches(msg: Message, keywords: Iterable[str]) -> bool:
    """Keyword filter over the concatenation of body text and hashtags."""
    target = msg.text if not msg.hashtags else " ".join((msg.text, *msg.hashtags))
    return keyword_match(target, keywords)


@dataclass
class FilterStats:
    seen: int = 0
    accepted: int = 0
    rejected_keyword: int = 0
    rejected_language: int = 0
    duplicates_dropped: int = 0

    def check(self) -> None:
        assert self.seen == (
            self.accepted + self.rejected_keyword + self.rejected_language + self.duplicates_dropped
        )

    def to_json(self) -> dict:
        return {
            "seen": self.seen,
            "accepted": self.accepted,
            "rejected_keyword": self.rejected_keyword,
            "rejected_language": self.rejected_language,
            "duplicates_dropped": self.duplicates_dropped,
        }


class ReplaySource:
    """Finite source reading the event-log JSONL format."""

    finite = True

    def __init__(self, path: str | Path, *, legacy_140: bool = False):
        self.path = Path(path)
        self.legacy_140 = legacy_140

    def __iter__(self) -> Iterator[Message]:
        with open(self.path, encoding="utf-8") as fh:
            yield from read_event_log(fh, legacy_140=self.legacy_140)


class ListSource:
    """Finite in-memory source (synthetic logs, tests)."""

    finite = True

    def __init__(self, messages: Iterable[Message]):
        self.messages = list(messages)

    def __iter__(self) -> Iterator[Message]:
        return iter(self.messages)

    def __len__(self) -> int:
        return len(self.messages)


class QueueSource:
    """Unbounded live source backed by a bounded buffer, drop-oldest on overflow.

    Producers call push() from any thread; close() ends the stream.
    """

    finite = False

    def __init__(self, maxsize: int = DEFAULT_QUEUE_SIZE):
        self._buf: deque[Message] = deque()
        self._maxsize = maxsize
        self._cond = threading.Condition()
        self._closed = False
        self.dropped_oldest = 0

    def push(self, msg: Message) -> None:
        with self._cond:
            if self._closed:
                raise RuntimeError("push() after close()")
            if len(self._buf) >= self._maxsize:
                self._buf.popleft()
                self.dropped_oldest += 1
            self._buf.append(msg)
            self._cond.notify()

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    def __iter__(self) -> Iterator[Message]:
        while True:
            with self._cond:
                while not self._buf and not self._closed:
                    self._cond.wait()
                if self._buf:
                    item = self._buf.popleft()
                else:
                    return
            yield item


@dataclass
class SessionEngines:
    """The three metric engines plus the established session start."""

    config: SessionConfig
    graph: GraphView
    global_: GlobalEngine = field(init=False)
    local: LocalEngine = field(init=False)
    knowledge: KnowledgeEngine = field(init=False)
    start_ms: Optional[int] = field(init=False)

    def __post_init__(self) -> None:
        self.global_ = GlobalEngine(self.config.bucket_ms)
        self.local = LocalEngine(self.graph)
        self.knowledge = KnowledgeEngine(self.config.keywords)
        self.start_ms = self.config.start_ms


def run_session(
    config: SessionConfig,
    source: Iterable[Message],
    engines: SessionEngines,
    *,
    on_event: Optional[Callable[[Message, bool], None]] = None,
    lock: Optional[threading.Lock] = None,
    stats: Optional[FilterStats] = None,
) -> FilterStats:
    """Drive a session until the source ends.

    Every accepted message is applied to all three engines exactly once, in
    source order. Precedence for the accounting stats: keyword filter, then
    language filter, then duplicate-id drop (among accepted ids only).
    Events outside an explicitly configured [start, start+duration) window
    are sliced off before any counting. Pause/stop control belongs to the
    source: a source that stops yielding ends the session cleanly.

    A caller that reads stats concurrently passes its own FilterStats and
    the same lock its snapshot reads take.
    """
    if stats is None:
        stats = FilterStats()
    keywords = config.keywords
    language = config.language
    seen_ids: set[str] = set()
    last_ms: Optional[int] = None
    end_ms: Optional[int] = None
    if config.start_ms is not None and config.duration_ms is not None:
        end_ms = config.start_ms + config.duration_ms
    noop_lock = threading.Lock()
    guard = lock if lock is not None else noop_lock

    for msg in source:
        if last_ms is not None and msg.ts_ms < last_ms:
            raise SourceOrderViolation(
                f"source order violated at id={msg.id!r}: {msg.ts_ms} < {last_ms}"
            )
        last_ms = msg.ts_ms
        if config.start_ms is not None and msg.ts_ms < config.start_ms:
            continue
        if end_ms is not None and msg.ts_ms >= end_ms:
            break

        if not message_matches(msg, keywords):
            with guard:
                stats.seen += 1
                stats.rejected_keyword += 1
            continue
        if language is not None and msg.lang is not None and msg.lang != language:
            with guard:
                stats.seen += 1
                stats.rejected_language += 1
            continue
        if msg.id in seen_ids:
            with guard:
                stats.seen += 1
                stats.duplicates_dropped += 1
            continue
        seen_ids.add(msg.id)

        if engines.start_ms is None:
            engines.start_ms = msg.ts_ms
            if config.duration_ms is not None:
                end_ms = engines.start_ms + config.duration_ms
        with guard:
            is_new = engines.local.apply(msg, engines.start_ms)
            engines.global_.apply(msg, is_new, engines.start_ms)
            engines.knowledge.apply(msg)
            stats.seen += 1
            stats.accepted += 1
        if on_event is not None:
            on_event(msg, is_new)
    return stats
