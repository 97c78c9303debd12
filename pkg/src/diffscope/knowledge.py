"""Knowledge extraction: top tweets, words, users and links for a session.

Word tokenization rule set (fixed): strip URLs, @-mentions and #-hashtags
from the text, case-fold, split on non-alphanumeric boundaries, drop
tokens shorter than 3 code points, drop the session keywords' own tokens,
subtract the stopword list. Only original tweets feed word counts;
retweets feed the per-tweet retransmission tallies instead.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional

from . import stopwords
from .events import Kind, Message

_STRIP_RE = re.compile(r"https?://\S+|www\.\S+|[@#]\w+")
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str, drop: frozenset[str] | set[str] = frozenset()) -> list[str]:
    """Extract countable word tokens from one message text."""
    cleaned = _STRIP_RE.sub(" ", text).casefold()
    return [t for t in _TOKEN_RE.findall(cleaned) if len(t) >= 3 and t not in drop]


def keyword_tokens(keywords: Iterable[str]) -> frozenset[str]:
    """Tokens the session keywords themselves would produce (always dropped)."""
    out: set[str] = set()
    for kw in keywords:
        out.update(_TOKEN_RE.findall(kw.casefold()))
    return frozenset(out)


@dataclass(frozen=True)
class KnowledgeSummary:
    top_tweets: list[tuple[str, int, bool]]  # (message id, retweet count, captured)
    top_words: list[tuple[str, int]]
    top_users: list[tuple[str, int]]
    top_links: list[tuple[str, int]]
    k: int

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "top_tweets": [
                {"id": i, "count": c, "captured": cap} for i, c, cap in self.top_tweets
            ],
            "top_words": [{"word": w, "count": c} for w, c in self.top_words],
            "top_users": [{"user": u, "count": c} for u, c in self.top_users],
            "top_links": [{"url": u, "count": c} for u, c in self.top_links],
        }


def _top_k(counts: dict[str, int], k: int) -> list[tuple[str, int]]:
    # dicts preserve first-seen insertion order; the stable sort therefore
    # breaks count ties by first occurrence.
    return sorted(counts.items(), key=lambda kv: -kv[1])[:k]


class KnowledgeEngine:
    """Single-writer tally engine for the knowledge panels."""

    def __init__(self, keywords: Iterable[str], stop: frozenset[str] | None = None):
        self.drop = (stopwords.DEFAULT if stop is None else stop) | keyword_tokens(keywords)
        self.word_counts: dict[str, int] = {}
        self.link_counts: dict[str, int] = {}
        self.user_counts: dict[str, int] = {}
        self.retweet_counts: dict[str, int] = {}
        self.captured_ids: set[str] = set()
        self.accepted = 0

    def apply(self, msg: Message) -> None:
        self.accepted += 1
        self.captured_ids.add(msg.id)
        self.user_counts[msg.author] = self.user_counts.get(msg.author, 0) + 1
        for url in msg.links:
            self.link_counts[url] = self.link_counts.get(url, 0) + 1
        if msg.kind is Kind.TWEET:
            for token in tokenize(msg.text, self.drop):
                self.word_counts[token] = self.word_counts.get(token, 0) + 1
        else:
            target = msg.retweet_of
            assert target is not None
            self.retweet_counts[target] = self.retweet_counts.get(target, 0) + 1

    def snapshot(self, k: int = 20) -> KnowledgeSummary:
        if k < 1:
            raise ValueError("k must be >= 1")
        return KnowledgeSummary(
            top_tweets=[
                (i, c, i in self.captured_ids) for i, c in _top_k(self.retweet_counts, k)
            ],
            top_words=_top_k(self.word_counts, k),
            top_users=_top_k(self.user_counts, k),
            top_links=_top_k(self.link_counts, k),
            k=k,
        )

    def check_conservation(self) -> None:
        assert sum(self.user_counts.values()) == self.accepted
        assert sum(self.retweet_counts.values()) <= self.accepted
