"""Per-user activity counts and the frozen first-expression snapshot.

The moment a user first posts, their neighborhood state (follower count,
followings that already posted, total messages received, elapsed hours)
is computed from the running publisher index and never changes again.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .events import Kind, Message, UserMeta, parse_graph_record

MS_PER_HOUR = 3_600_000


class GraphView:
    """Static follower-graph snapshot: user id -> UserMeta lookup."""

    def __init__(self, users: Iterable[UserMeta] = ()):
        self._users: dict[str, UserMeta] = {}
        self.duplicate_followings = 0
        for meta in users:
            self._users[meta.user_id] = meta

    def get(self, user_id: str) -> Optional[UserMeta]:
        return self._users.get(user_id)

    def __len__(self) -> int:
        return len(self._users)

    def __iter__(self):
        return iter(self._users.values())

    @classmethod
    def load(cls, path: str | Path) -> "GraphView":
        view = cls()
        counters: dict = {}
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                meta = parse_graph_record(line, line_no=line_no, counters=counters)
                view._users[meta.user_id] = meta
        view.duplicate_followings = counters.get("duplicate_followings", 0)
        return view


@dataclass
class UserLocalRecord:
    """Final activity counts plus the frozen first-post neighborhood snapshot."""

    user_id: str
    nb_t: int
    nb_rt: int
    first_post_ms: int
    nb_fe: int
    nb_fg_p: int
    total_r: int
    elapsed_h: float
    graph_miss: bool

    @property
    def nb_messages(self) -> int:
        return self.nb_t + self.nb_rt


class LocalEngine:
    """Single-writer engine for per-user records and the publisher index."""

    def __init__(self, graph: GraphView):
        self.graph = graph
        self.index: dict[str, int] = {}
        self.records: dict[str, UserLocalRecord] = {}
        self.graph_miss_count = 0

    def apply(self, msg: Message, start_ms: int) -> bool:
        """Apply one message; returns True iff the author is new this session.

        The neighborhood snapshot is computed before the message itself is
        added to the publisher index.
        """
        author = msg.author
        record = self.records.get(author)
        is_new = record is None
        if is_new:
            meta = self.graph.get(author)
            if meta is None:
                nb_fe = nb_fg_p = total_r = 0
                self.graph_miss_count += 1
            else:
                nb_fe = meta.followers_count
                nb_fg_p = 0
                total_r = 0
                index = self.index
                for f in meta.followings:
                    n = index.get(f, 0)
                    if n:
                        nb_fg_p += 1
                        total_r += n
            record = self.records[author] = UserLocalRecord(
                user_id=author,
                nb_t=0,
                nb_rt=0,
                first_post_ms=msg.ts_ms,
                nb_fe=nb_fe,
                nb_fg_p=nb_fg_p,
                total_r=total_r,
                elapsed_h=(msg.ts_ms - start_ms) / MS_PER_HOUR,
                graph_miss=meta is None,
            )
        self.index[author] = self.index.get(author, 0) + 1
        if msg.kind is Kind.TWEET:
            record.nb_t += 1
        else:
            record.nb_rt += 1
        return is_new

    def population(self) -> list[UserLocalRecord]:
        """All user records, in first-post order."""
        return list(self.records.values())

    def check_conservation(self, nb_tw: int, nb_rtw: int) -> None:
        assert sum(self.index.values()) == nb_tw + nb_rtw
        for rec in self.records.values():
            assert rec.total_r >= rec.nb_fg_p
            assert rec.elapsed_h >= 0
