"""Session-wide indicators and their time-bucketed evolution.

Counters and inter-arrival sums are kept as exact integers (milliseconds);
averages are derived only at snapshot time so incremental state and a
from-scratch recomputation agree bit-for-bit on the underlying integers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .events import Kind, Message, format_rfc3339_ms


class OrderViolation(RuntimeError):
    """An applied message's timestamp regressed (tolerance 0)."""


@dataclass
class BucketStats:
    tweets: int = 0
    retweets: int = 0
    new_users: int = 0
    sum_gap_tw_ms: int = 0
    gaps_tw: int = 0
    sum_gap_rtw_ms: int = 0
    gaps_rtw: int = 0


@dataclass(frozen=True)
class GlobalIndicators:
    """Point-in-time view of the seven global indicators.

    Averages are None while undefined (no users / fewer than two
    messages of a kind); they are never 0 or NaN.
    """

    nb_tw: int
    nb_rtw: int
    nb_us: int
    avg_tw_per_user: Optional[float]
    avg_rtw_per_user: Optional[float]
    avg_gap_tw_s: Optional[float]
    avg_gap_rtw_s: Optional[float]

    def to_json(self) -> dict:
        return {
            "nb_tw": self.nb_tw,
            "nb_rtw": self.nb_rtw,
            "nb_us": self.nb_us,
            "avg_tw_per_user": self.avg_tw_per_user,
            "avg_rtw_per_user": self.avg_rtw_per_user,
            "avg_gap_tw_s": self.avg_gap_tw_s,
            "avg_gap_rtw_s": self.avg_gap_rtw_s,
        }


class GlobalEngine:
    """Single-writer incremental accumulator for the global indicators."""

    def __init__(self, bucket_ms: int):
        if bucket_ms <= 0:
            raise ValueError("bucket_ms must be > 0")
        self.bucket_ms = bucket_ms
        self.nb_tw = 0
        self.nb_rtw = 0
        self.nb_us = 0
        self.last_ms: Optional[int] = None
        self.last_tweet_ms: Optional[int] = None
        self.last_retweet_ms: Optional[int] = None
        self.sum_gap_tw_ms = 0
        self.gaps_tw = 0
        self.sum_gap_rtw_ms = 0
        self.gaps_rtw = 0
        self.buckets: dict[int, BucketStats] = {}

    def apply(self, msg: Message, is_new_user: bool, start_ms: int) -> None:
        if self.last_ms is not None and msg.ts_ms < self.last_ms:
            raise OrderViolation(f"timestamp regressed: {msg.ts_ms} < {self.last_ms}")
        self.last_ms = msg.ts_ms
        idx = (msg.ts_ms - start_ms) // self.bucket_ms
        bucket = self.buckets.get(idx)
        if bucket is None:
            bucket = self.buckets[idx] = BucketStats()

        if msg.kind is Kind.TWEET:
            if self.last_tweet_ms is not None:
                gap = msg.ts_ms - self.last_tweet_ms
                self.sum_gap_tw_ms += gap
                self.gaps_tw += 1
                bucket.sum_gap_tw_ms += gap
                bucket.gaps_tw += 1
            self.last_tweet_ms = msg.ts_ms
            self.nb_tw += 1
            bucket.tweets += 1
        else:
            if self.last_retweet_ms is not None:
                gap = msg.ts_ms - self.last_retweet_ms
                self.sum_gap_rtw_ms += gap
                self.gaps_rtw += 1
                bucket.sum_gap_rtw_ms += gap
                bucket.gaps_rtw += 1
            self.last_retweet_ms = msg.ts_ms
            self.nb_rtw += 1
            bucket.retweets += 1

        if is_new_user:
            self.nb_us += 1
            bucket.new_users += 1

    def snapshot(self) -> GlobalIndicators:
        return GlobalIndicators(
            nb_tw=self.nb_tw,
            nb_rtw=self.nb_rtw,
            nb_us=self.nb_us,
            avg_tw_per_user=self.nb_tw / self.nb_us if self.nb_us else None,
            avg_rtw_per_user=self.nb_rtw / self.nb_us if self.nb_us else None,
            avg_gap_tw_s=self.sum_gap_tw_ms / self.gaps_tw / 1000.0 if self.gaps_tw else None,
            avg_gap_rtw_s=self.sum_gap_rtw_ms / self.gaps_rtw / 1000.0 if self.gaps_rtw else None,
        )

    def bucket_series(self, start_ms: Optional[int], *, bucket_ms: Optional[int] = None) -> list[dict]:
        """One row per bucket from session start to the last event, zero-filled.

        Rows carry per-bucket (bkt_) counts and gap averages plus
        cumulative-to-date (cum_) totals and ratio indicators. An optional
        coarser bucket_ms (integer multiple of the engine's) re-groups rows.
        """
        if start_ms is None or not self.buckets:
            return []
        width = self.bucket_ms
        merge = 1
        if bucket_ms is not None and bucket_ms != width:
            if bucket_ms <= 0 or bucket_ms % width != 0:
                raise ValueError(f"bucket width must be a positive multiple of {width} ms")
            merge = bucket_ms // width
            width = bucket_ms
        last_idx = max(self.buckets) // merge
        rows: list[dict] = []
        cum_tw = cum_rtw = cum_us = 0
        cum_gap_tw = cum_gaps_tw = 0
        cum_gap_rtw = cum_gaps_rtw = 0
        empty = BucketStats()
        for idx in range(last_idx + 1):
            tweets = retweets = new_users = 0
            g_tw_ms = g_tw_n = g_rtw_ms = g_rtw_n = 0
            for sub in range(idx * merge, (idx + 1) * merge):
                b = self.buckets.get(sub, empty)
                tweets += b.tweets
                retweets += b.retweets
                new_users += b.new_users
                g_tw_ms += b.sum_gap_tw_ms
                g_tw_n += b.gaps_tw
                g_rtw_ms += b.sum_gap_rtw_ms
                g_rtw_n += b.gaps_rtw
            cum_tw += tweets
            cum_rtw += retweets
            cum_us += new_users
            cum_gap_tw += g_tw_ms
            cum_gaps_tw += g_tw_n
            cum_gap_rtw += g_rtw_ms
            cum_gaps_rtw += g_rtw_n
            rows.append(
                {
                    "bucket_start_ms": start_ms + idx * width,
                    "nb_tw": tweets,
                    "nb_rtw": retweets,
                    "new_users": new_users,
                    "bkt_avg_gap_tw_s": g_tw_ms / g_tw_n / 1000.0 if g_tw_n else None,
                    "bkt_avg_gap_rtw_s": g_rtw_ms / g_rtw_n / 1000.0 if g_rtw_n else None,
                    "cum_nb_tw": cum_tw,
                    "cum_nb_rtw": cum_rtw,
                    "cum_nb_us": cum_us,
                    "cum_avg_tw_per_user": cum_tw / cum_us if cum_us else None,
                    "cum_avg_rtw_per_user": cum_rtw / cum_us if cum_us else None,
                    "cum_avg_gap_tw_s": cum_gap_tw / cum_gaps_tw / 1000.0 if cum_gaps_tw else None,
                    "cum_avg_gap_rtw_s": cum_gap_rtw / cum_gaps_rtw / 1000.0 if cum_gaps_rtw else None,
                }
            )
        return rows

    def check_conservation(self) -> None:
        """Assert per-bucket sums equal the global totals (cheap, O(buckets))."""
        assert sum(b.tweets for b in self.buckets.values()) == self.nb_tw
        assert sum(b.retweets for b in self.buckets.values()) == self.nb_rtw
        assert sum(b.new_users for b in self.buckets.values()) == self.nb_us
        assert sum(b.gaps_tw for b in self.buckets.values()) == self.gaps_tw
        assert sum(b.sum_gap_tw_ms for b in self.buckets.values()) == self.sum_gap_tw_ms
        assert sum(b.gaps_rtw for b in self.buckets.values()) == self.gaps_rtw
        assert sum(b.sum_gap_rtw_ms for b in self.buckets.values()) == self.sum_gap_rtw_ms
        assert self.gaps_tw == max(0, self.nb_tw - 1)
        assert self.gaps_rtw == max(0, self.nb_rtw - 1)
        assert self.nb_us <= self.nb_tw + self.nb_rtw


def series_rows_to_json(rows: list[dict], display_offset_hours: float = 0.0) -> list[dict]:
    """Replace raw bucket_start_ms with a rendered RFC 3339 bucket_start."""
    out = []
    for row in rows:
        rendered = dict(row)
        rendered["bucket_start"] = format_rfc3339_ms(row["bucket_start_ms"], display_offset_hours)
        del rendered["bucket_start_ms"]
        out.append(rendered)
    return out
