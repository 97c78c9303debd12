"""Canonical message/event types and the JSONL record formats.

Timestamps are stored internally as integer epoch milliseconds (UTC).
All on-disk formats are UTF-8 JSON Lines with RFC 3339 timestamps.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import Iterable, Iterator, Optional, TextIO

MS_PER_HOUR = 3_600_000
_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
_ONE_MS = timedelta(milliseconds=1)


class RecordError(ValueError):
    """Base class for record-level parse/validation failures."""

    def __init__(self, message: str, line_no: int | None = None):
        super().__init__(message)
        self.line_no = line_no

    def __str__(self) -> str:
        base = super().__str__()
        if self.line_no is not None:
            return f"line {self.line_no}: {base}"
        return base


class MalformedRecord(RecordError):
    pass


class InvalidKind(RecordError):
    pass


class BadTimestamp(RecordError):
    pass


class SelfFollowing(RecordError):
    pass


class Kind(str, Enum):
    TWEET = "tweet"
    RETWEET = "retweet"


def parse_rfc3339_ms(text: str) -> int:
    """Parse an RFC 3339 timestamp to epoch milliseconds (UTC).

    Offsets are normalized away; sub-millisecond digits are truncated.
    Raises BadTimestamp for naive or unparseable inputs.
    """
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    # datetime.fromisoformat only handles up to microseconds
    raw = re.sub(r"(\.\d{6})\d+", r"\1", raw)
    try:
        dt = datetime.fromisoformat(raw)
    except ValueError as exc:
        raise BadTimestamp(f"unparseable timestamp {text!r}: {exc}") from None
    if dt.tzinfo is None:
        raise BadTimestamp(f"timestamp {text!r} has no UTC offset")
    return (dt - _EPOCH) // _ONE_MS


def format_rfc3339_ms(ts_ms: int, offset_hours: float = 0.0) -> str:
    """Render epoch milliseconds as RFC 3339 with millisecond precision.

    offset_hours shifts the rendered wall clock (display only); the
    instant denoted is unchanged.
    """
    tz = timezone.utc if offset_hours == 0 else timezone(timedelta(hours=offset_hours))
    dt = _EPOCH + timedelta(milliseconds=ts_ms)
    local = dt.astimezone(tz)
    base = local.strftime("%Y-%m-%dT%H:%M:%S") + f".{ts_ms % 1000:03d}"
    if offset_hours == 0:
        return base + "Z"
    off = local.utcoffset() or timedelta(0)
    total_min = int(off.total_seconds() // 60)
    sign = "+" if total_min >= 0 else "-"
    total_min = abs(total_min)
    return base + f"{sign}{total_min // 60:02d}:{total_min % 60:02d}"


_DURATION_UNITS = {"ms": 1, "s": 1000, "m": 60_000, "h": 3_600_000, "d": 86_400_000}


def parse_duration_ms(text: str) -> int:
    """Parse a duration like '1h', '30m', '90s', '500ms' or bare seconds."""
    raw = text.strip().lower()
    match = re.fullmatch(r"(\d+(?:\.\d+)?)(ms|s|m|h|d)?", raw)
    if not match:
        raise ValueError(f"unparseable duration {text!r}")
    value = float(match.group(1))
    ms = int(round(value * _DURATION_UNITS[match.group(2) or "s"]))
    if ms <= 0:
        raise ValueError(f"duration must be positive: {text!r}")
    return ms


@dataclass(frozen=True, slots=True)
class Message:
    """One captured tweet/retweet event."""

    id: str
    ts_ms: int
    author: str
    kind: Kind
    retweet_of: Optional[str]
    text: str
    links: tuple[str, ...] = ()
    hashtags: tuple[str, ...] = ()
    lang: Optional[str] = None
    seq: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        if not self.id:
            raise InvalidKind("message id must be non-empty")
        if (self.kind is Kind.RETWEET) != (self.retweet_of is not None):
            raise InvalidKind(
                f"kind={self.kind.value} requires retweet_of "
                f"{'present' if self.kind is Kind.RETWEET else 'absent'}"
            )


@dataclass(frozen=True, slots=True)
class UserMeta:
    """One user's neighborhood snapshot: reported follower count + followings."""

    user_id: str
    followers_count: int
    followings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.followers_count < 0:
            raise MalformedRecord(f"followers_count < 0 for {self.user_id!r}")
        if self.user_id in self.followings:
            raise SelfFollowing(f"user {self.user_id!r} follows itself")
        if len(set(self.followings)) != len(self.followings):
            raise MalformedRecord(f"duplicate followings for {self.user_id!r}")


@dataclass
class SessionConfig:
    """Capture-session parameters shared by the CLI, the service and the engines."""

    keywords: list[str]
    language: Optional[str] = None
    start_ms: Optional[int] = None
    duration_ms: Optional[int] = None
    bucket_ms: int = MS_PER_HOUR
    display_offset_hours: float = 1.0
    legacy_140: bool = False

    def __post_init__(self) -> None:
        self.keywords = [k.strip() for k in self.keywords]
        if not self.keywords or any(not k for k in self.keywords):
            raise ValueError("keywords must be a non-empty list of non-empty strings")
        if self.bucket_ms <= 0:
            raise ValueError("bucket_ms must be > 0")
        if self.duration_ms is not None and self.duration_ms <= 0:
            raise ValueError("duration_ms must be > 0 when given")

    def to_json(self) -> dict:
        return {
            "keywords": list(self.keywords),
            "language": self.language,
            "start_ts": None if self.start_ms is None else format_rfc3339_ms(self.start_ms),
            "duration_s": None if self.duration_ms is None else self.duration_ms / 1000.0,
            "bucket_s": self.bucket_ms / 1000.0,
            "display_offset_hours": self.display_offset_hours,
            "legacy_140": self.legacy_140,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SessionConfig":
        start = obj.get("start_ts")
        duration = obj.get("duration_s")
        return cls(
            keywords=list(obj["keywords"]),
            language=obj.get("language"),
            start_ms=None if start is None else parse_rfc3339_ms(start),
            duration_ms=None if duration is None else int(round(duration * 1000)),
            bucket_ms=int(round(obj.get("bucket_s", 3600.0) * 1000)),
            display_offset_hours=obj.get("display_offset_hours", 1.0),
            legacy_140=obj.get("legacy_140", False),
        )


def _require_str(obj: dict, key: str, line_no: int | None) -> str:
    val = obj.get(key)
    if not isinstance(val, str) or not val:
        raise MalformedRecord(f"missing or empty field {key!r}", line_no)
    return val


def parse_event_record(line: str, *, legacy_140: bool = False, line_no: int | None = None) -> Message:
    """Parse one event-log JSONL record into a validated Message.

    Unknown fields (e.g. position) are tolerated and dropped.
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"invalid JSON: {exc}", line_no) from None
    if not isinstance(obj, dict):
        raise MalformedRecord("record is not a JSON object", line_no)

    msg_id = _require_str(obj, "id", line_no)
    author = _require_str(obj, "user", line_no)
    kind_raw = _require_str(obj, "kind", line_no)
    try:
        kind = Kind(kind_raw)
    except ValueError:
        raise InvalidKind(f"unknown kind {kind_raw!r}", line_no) from None

    ts_raw = obj.get("ts")
    if not isinstance(ts_raw, str):
        raise BadTimestamp("missing ts field", line_no)
    try:
        ts_ms = parse_rfc3339_ms(ts_raw)
    except BadTimestamp as exc:
        raise BadTimestamp(str(exc), line_no) from None

    rt_of = obj.get("rt_of")
    if rt_of is not None and not isinstance(rt_of, str):
        raise MalformedRecord("rt_of must be a string", line_no)
    text = obj.get("text", "")
    if not isinstance(text, str):
        raise MalformedRecord("text must be a string", line_no)
    if legacy_140 and len(text) > 140:
        raise MalformedRecord(f"text exceeds 140 code points ({len(text)})", line_no)
    links = obj.get("links", [])
    tags = obj.get("tags", [])
    if not isinstance(links, list) or not all(isinstance(x, str) for x in links):
        raise MalformedRecord("links must be a list of strings", line_no)
    if not isinstance(tags, list) or not all(isinstance(x, str) for x in tags):
        raise MalformedRecord("tags must be a list of strings", line_no)
    lang = obj.get("lang")
    if lang is not None and not isinstance(lang, str):
        raise MalformedRecord("lang must be a string", line_no)

    try:
        return Message(
            id=msg_id,
            ts_ms=ts_ms,
            author=author,
            kind=kind,
            retweet_of=rt_of,
            text=text,
            links=tuple(links),
            hashtags=tuple(tags),
            lang=lang,
            seq=line_no or 0,
        )
    except RecordError as exc:
        exc.line_no = line_no
        raise


def format_event_record(msg: Message) -> str:
    """Serialize a Message to one canonical event-log JSONL line (UTC)."""
    obj: dict = {
        "id": msg.id,
        "ts": format_rfc3339_ms(msg.ts_ms),
        "user": msg.author,
        "kind": msg.kind.value,
    }
    if msg.retweet_of is not None:
        obj["rt_of"] = msg.retweet_of
    obj["text"] = msg.text
    obj["links"] = list(msg.links)
    obj["tags"] = list(msg.hashtags)
    if msg.lang is not None:
        obj["lang"] = msg.lang
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def parse_graph_record(line: str, *, line_no: int | None = None, counters: dict | None = None) -> UserMeta:
    """Parse one graph-snapshot JSONL record.

    Duplicate followings are deduplicated (first occurrence kept); when a
    counters dict is passed its "duplicate_followings" entry is bumped.
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"invalid JSON: {exc}", line_no) from None
    if not isinstance(obj, dict):
        raise MalformedRecord("record is not a JSON object", line_no)
    user_id = _require_str(obj, "user", line_no)
    followers = obj.get("followers")
    if not isinstance(followers, int) or isinstance(followers, bool) or followers < 0:
        raise MalformedRecord(f"followers must be a non-negative integer for {user_id!r}", line_no)
    raw = obj.get("followings", [])
    if not isinstance(raw, list) or not all(isinstance(x, str) for x in raw):
        raise MalformedRecord("followings must be a list of strings", line_no)
    seen: set[str] = set()
    followings: list[str] = []
    dups = 0
    for f in raw:
        if f == user_id:
            raise SelfFollowing(f"user {user_id!r} follows itself", line_no)
        if f in seen:
            dups += 1
            continue
        seen.add(f)
        followings.append(f)
    if dups and counters is not None:
        counters["duplicate_followings"] = counters.get("duplicate_followings", 0) + dups
    return UserMeta(user_id=user_id, followers_count=followers, followings=tuple(followings))


def format_graph_record(meta: UserMeta) -> str:
    return json.dumps(
        {"user": meta.user_id, "followers": meta.followers_count, "followings": list(meta.followings)},
        ensure_ascii=False,
        separators=(",", ":"),
    )


def read_event_log(fh: TextIO | Iterable[str], *, legacy_140: bool = False) -> Iterator[Message]:
    """Yield Messages from an open event log, numbering lines from 1."""
    for line_no, line in enumerate(fh, start=1):
        if not line.strip():
            continue
        yield parse_event_record(line, legacy_140=legacy_140, line_no=line_no)
