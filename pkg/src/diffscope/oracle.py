"""From-scratch batch recomputation of a full session report.

This module is the cross-check for the incremental engines: it reads the
same files and produces the same report dict, but every aggregation is a
separate naive pass (explicit scans, bisect prefix counts, closed-form
least squares) sharing only the record formats, the stopword data and
the timestamp rendering with the live path. Tokenization and filtering
are re-derived from their documented rules rather than imported.
"""
from __future__ import annotations

import math
from bisect import bisect_left
from pathlib import Path
from typing import Iterable, Optional

from . import stopwords
from .events import (
    Kind,
    Message,
    SessionConfig,
    UserMeta,
    format_rfc3339_ms,
    parse_graph_record,
    read_event_log,
)

MS_PER_HOUR = 3_600_000
TOP_K = 20
ACTIVITY_THRESHOLD = 20
ELAPSED_HORIZON_H = 72.0


# -- independent text machinery ------------------------------------------

def _is_word_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def _strip_markup(text: str) -> str:
    """Blank out URLs, @-mentions and #-hashtags by linear scan."""
    out: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in "@#" and i + 1 < n and _is_word_char(text[i + 1]):
            j = i + 1
            while j < n and _is_word_char(text[j]):
                j += 1
            out.append(" ")
            i = j
            continue
        hit = None
        for prefix in ("https://", "http://", "www."):
            if text.startswith(prefix, i):
                hit = i + len(prefix)
                break
        if hit is not None:
            j = hit
            while j < n and not text[j].isspace():
                j += 1
            if j > hit:
                out.append(" ")
                i = j
                continue
        out.append(ch)
        i += 1
    return "".join(out)


def _word_tokens(text: str) -> list[str]:
    toks: list[str] = []
    cur: list[str] = []
    for ch in text:
        if ch.isalnum():
            cur.append(ch)
        else:
            if cur:
                toks.append("".join(cur))
                cur = []
    if cur:
        toks.append("".join(cur))
    return toks


def oracle_tokenize(text: str, drop: frozenset[str]) -> list[str]:
    cleaned = _strip_markup(text).casefold()
    return [t for t in _word_tokens(cleaned) if len(t) >= 3 and t not in drop]


def _keyword_blob(msg: Message) -> str:
    if not msg.hashtags:
        return msg.text
    return " ".join((msg.text, *msg.hashtags))


# -- file loading ---------------------------------------------------------

def load_messages(path: str | Path, *, legacy_140: bool = False) -> list[Message]:
    with open(path, encoding="utf-8") as fh:
        return list(read_event_log(fh, legacy_140=legacy_140))


def load_graph_map(path: str | Path) -> dict[str, UserMeta]:
    out: dict[str, UserMeta] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            meta = parse_graph_record(line, line_no=line_no, counters={})
            out[meta.user_id] = meta
    return out


# -- statistics helpers ---------------------------------------------------

def _mean_std_cv(ys: list[float]) -> dict:
    if not ys:
        return {"n": 0, "y_min": None, "y_max": None, "y_mean": None, "y_cv": None}
    n = len(ys)
    mean = sum(ys) / n
    var = sum((v - mean) ** 2 for v in ys) / n
    cv = math.sqrt(var) / mean if mean != 0 else None
    return {"n": n, "y_min": min(ys), "y_max": max(ys), "y_mean": mean, "y_cv": cv}


def _fit_line_slope(xs: list[float], ys: list[float]) -> float:
    n = len(xs)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    return sxy / sxx


# -- the oracle -----------------------------------------------------------

def filter_messages(
    messages: Iterable[Message], config: SessionConfig
) -> tuple[list[Message], dict, Optional[int]]:
    """Replay the admission rules; returns (accepted, filter stats, start_ms).

    Precedence mirrors the documented rules: window slice (uncounted),
    keyword, language, duplicate id among accepted. The session start is
    the configured one or the first accepted timestamp.
    """
    folded_keywords = [k.casefold() for k in config.keywords]
    language = config.language
    accepted: list[Message] = []
    accepted_ids: set[str] = set()
    seen = rej_kw = rej_lang = dups = 0
    start_ms = config.start_ms
    end_ms: Optional[int] = None
    if config.start_ms is not None and config.duration_ms is not None:
        end_ms = config.start_ms + config.duration_ms
    last_ms: Optional[int] = None
    session_start: Optional[int] = start_ms
    for msg in messages:
        if last_ms is not None and msg.ts_ms < last_ms:
            raise ValueError(f"log not sorted at id={msg.id!r}")
        last_ms = msg.ts_ms
        if config.start_ms is not None and msg.ts_ms < config.start_ms:
            continue
        if end_ms is not None and msg.ts_ms >= end_ms:
            break
        blob = _keyword_blob(msg).casefold()
        if not any(k in blob for k in folded_keywords):
            seen += 1
            rej_kw += 1
            continue
        if language is not None and msg.lang is not None and msg.lang != language:
            seen += 1
            rej_lang += 1
            continue
        if msg.id in accepted_ids:
            seen += 1
            dups += 1
            continue
        accepted_ids.add(msg.id)
        if session_start is None:
            session_start = msg.ts_ms
            if config.duration_ms is not None:
                end_ms = session_start + config.duration_ms
        seen += 1
        accepted.append(msg)
    stats = {
        "seen": seen,
        "accepted": len(accepted),
        "rejected_keyword": rej_kw,
        "rejected_language": rej_lang,
        "duplicates_dropped": dups,
    }
    return accepted, stats, session_start


def _global_section(accepted: list[Message]) -> dict:
    tweets = [m.ts_ms for m in accepted if m.kind is Kind.TWEET]
    retweets = [m.ts_ms for m in accepted if m.kind is Kind.RETWEET]
    users: dict[str, None] = {}
    for m in accepted:
        users.setdefault(m.author, None)
    nb_tw, nb_rtw, nb_us = len(tweets), len(retweets), len(users)
    return {
        "nb_tw": nb_tw,
        "nb_rtw": nb_rtw,
        "nb_us": nb_us,
        "avg_tw_per_user": nb_tw / nb_us if nb_us else None,
        "avg_rtw_per_user": nb_rtw / nb_us if nb_us else None,
        "avg_gap_tw_s": (tweets[-1] - tweets[0]) / (nb_tw - 1) / 1000.0
        if nb_tw > 1
        else None,
        "avg_gap_rtw_s": (retweets[-1] - retweets[0]) / (nb_rtw - 1) / 1000.0
        if nb_rtw > 1
        else None,
    }


def _series_section(
    accepted: list[Message], start_ms: Optional[int], bucket_ms: int, offset_hours: float
) -> list[dict]:
    if start_ms is None or not accepted:
        return []
    n_buckets = (accepted[-1].ts_ms - start_ms) // bucket_ms + 1
    tw = [0] * n_buckets
    rtw = [0] * n_buckets
    newu = [0] * n_buckets
    g_tw_ms = [0] * n_buckets
    g_tw_n = [0] * n_buckets
    g_rtw_ms = [0] * n_buckets
    g_rtw_n = [0] * n_buckets
    seen_users: set[str] = set()
    prev_tw: Optional[int] = None
    prev_rtw: Optional[int] = None
    for m in accepted:
        b = (m.ts_ms - start_ms) // bucket_ms
        if m.kind is Kind.TWEET:
            tw[b] += 1
            if prev_tw is not None:
                g_tw_ms[b] += m.ts_ms - prev_tw
                g_tw_n[b] += 1
            prev_tw = m.ts_ms
        else:
            rtw[b] += 1
            if prev_rtw is not None:
                g_rtw_ms[b] += m.ts_ms - prev_rtw
                g_rtw_n[b] += 1
            prev_rtw = m.ts_ms
        if m.author not in seen_users:
            seen_users.add(m.author)
            newu[b] += 1
    rows = []
    c_tw = c_rtw = c_us = c_g_tw = c_gn_tw = c_g_rtw = c_gn_rtw = 0
    for b in range(n_buckets):
        c_tw += tw[b]
        c_rtw += rtw[b]
        c_us += newu[b]
        c_g_tw += g_tw_ms[b]
        c_gn_tw += g_tw_n[b]
        c_g_rtw += g_rtw_ms[b]
        c_gn_rtw += g_rtw_n[b]
        rows.append(
            {
                "bucket_start": format_rfc3339_ms(start_ms + b * bucket_ms, offset_hours),
                "nb_tw": tw[b],
                "nb_rtw": rtw[b],
                "new_users": newu[b],
                "bkt_avg_gap_tw_s": g_tw_ms[b] / g_tw_n[b] / 1000.0 if g_tw_n[b] else None,
                "bkt_avg_gap_rtw_s": g_rtw_ms[b] / g_rtw_n[b] / 1000.0
                if g_rtw_n[b]
                else None,
                "cum_nb_tw": c_tw,
                "cum_nb_rtw": c_rtw,
                "cum_nb_us": c_us,
                "cum_avg_tw_per_user": c_tw / c_us if c_us else None,
                "cum_avg_rtw_per_user": c_rtw / c_us if c_us else None,
                "cum_avg_gap_tw_s": c_g_tw / c_gn_tw / 1000.0 if c_gn_tw else None,
                "cum_avg_gap_rtw_s": c_g_rtw / c_gn_rtw / 1000.0 if c_gn_rtw else None,
            }
        )
    return rows


def _local_records(
    accepted: list[Message], graph: dict[str, UserMeta], start_ms: int
) -> list[dict]:
    positions: dict[str, list[int]] = {}
    for pos, m in enumerate(accepted):
        positions.setdefault(m.author, []).append(pos)
    first_pos: dict[str, int] = {}
    first_ts: dict[str, int] = {}
    nb_t: dict[str, int] = {}
    nb_rt: dict[str, int] = {}
    order: list[str] = []
    for pos, m in enumerate(accepted):
        a = m.author
        if a not in first_pos:
            first_pos[a] = pos
            first_ts[a] = m.ts_ms
            order.append(a)
            nb_t[a] = 0
            nb_rt[a] = 0
        if m.kind is Kind.TWEET:
            nb_t[a] += 1
        else:
            nb_rt[a] += 1
    records = []
    for a in order:
        meta = graph.get(a)
        miss = meta is None
        nb_fe = nb_fg_p = total_r = 0
        if not miss:
            nb_fe = meta.followers_count
            p = first_pos[a]
            for f in meta.followings:
                plist = positions.get(f)
                if not plist:
                    continue
                before = bisect_left(plist, p)
                if before:
                    nb_fg_p += 1
                    total_r += before
        records.append(
            {
                "user": a,
                "nb_t": nb_t[a],
                "nb_rt": nb_rt[a],
                "nb_messages": nb_t[a] + nb_rt[a],
                "first_post_ms": first_ts[a],
                "nb_fe": nb_fe,
                "nb_fg_p": nb_fg_p,
                "total_r": total_r,
                "elapsed_h": (first_ts[a] - start_ms) / MS_PER_HOUR,
                "graph_miss": miss,
            }
        )
    return records


_GRAPH_FIELDS = frozenset({"nb_fe", "nb_fg_p", "total_r"})


def _field_vals(records: list[dict], field: str) -> list:
    pop = records
    if field in _GRAPH_FIELDS:
        pop = [r for r in records if not r["graph_miss"]]
    return [r[field] for r in pop]


def _distribution(records: list[dict], field: str) -> dict:
    values = _field_vals(records, field)
    n = len(values)
    if n == 0:
        return {
            "field": field,
            "population": 0,
            "share_at_zero": None,
            "share_at_one": None,
            "bins": [],
        }
    share0 = sum(1 for v in values if v == 0) / n
    share1 = sum(1 for v in values if v == 1) / n
    if field == "elapsed_h":
        top = int(max(ELAPSED_HORIZON_H, math.floor(max(values)) + 1))
        counts: dict[int, int] = {}
        for v in values:
            counts[int(v)] = counts.get(int(v), 0) + 1
        bins = [[float(h), float(h + 1), counts.get(h, 0)] for h in range(top)]
    else:
        counts = {}
        for v in values:
            counts[int(v)] = counts.get(int(v), 0) + 1
        bins = [[float(v), float(v), counts[v]] for v in sorted(counts)]
    return {
        "field": field,
        "population": n,
        "share_at_zero": share0,
        "share_at_one": share1,
        "bins": bins,
    }


def _ccdf_points(values: list) -> list[list]:
    n = len(values)
    counts: dict = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    points = []
    remaining = n
    for v in sorted(counts):
        points.append([v, remaining / n])
        remaining -= counts[v]
    return points


def _heavy_tail(records: list[dict]) -> dict:
    fe = _field_vals(records, "nb_fe")
    out: dict = {"field": "nb_fe", "ccdf": [], "loglog_slope": None}
    if not fe:
        return out
    points = _ccdf_points(fe)
    out["ccdf"] = points
    fitting = [(v, f) for v, f in points if v >= 1.0 and f > 0]
    if len(fitting) >= 3:
        xs = [math.log10(v) for v, _ in fitting]
        ys = [math.log10(f) for _, f in fitting]
        out["loglog_slope"] = _fit_line_slope(xs, ys)
    return out


def _scatter(records: list[dict], x_field: str, y_field: str) -> dict:
    pop = records
    if {x_field, y_field} & _GRAPH_FIELDS:
        pop = [r for r in records if not r["graph_miss"]]
    points = [[r["user"], float(r[x_field]), float(r[y_field])] for r in pop]
    low = [y for _, x, y in points if x <= ACTIVITY_THRESHOLD]
    high = [y for _, x, y in points if x > ACTIVITY_THRESHOLD]
    return {
        "x_field": x_field,
        "y_field": y_field,
        "points": points,
        "split": {
            "threshold": ACTIVITY_THRESHOLD,
            "low": _mean_std_cv(low),
            "high": _mean_std_cv(high),
        },
    }


def _elapsed_section(records: list[dict]) -> Optional[dict]:
    values = [r["elapsed_h"] for r in records]
    if not values:
        return None
    n = len(values)
    return {
        "population": n,
        "within_24h": sum(1 for v in values if v < 24.0) / n,
        "within_48h": sum(1 for v in values if v < 48.0) / n,
        "within_72h": sum(1 for v in values if v < 72.0) / n,
        "final_24h_share": sum(
            1 for v in values if ELAPSED_HORIZON_H - 24.0 <= v <= ELAPSED_HORIZON_H
        )
        / n,
        "horizon_h": ELAPSED_HORIZON_H,
    }


def _top_entries(counts: dict, k: int) -> list[tuple]:
    return sorted(counts.items(), key=lambda kv: -kv[1])[:k]


def _knowledge_section(accepted: list[Message], keywords: list[str], k: int) -> dict:
    drop_set = set(stopwords.DEFAULT)
    for kw in keywords:
        drop_set.update(_word_tokens(kw.casefold()))
    drop = frozenset(drop_set)
    word_counts: dict[str, int] = {}
    link_counts: dict[str, int] = {}
    user_counts: dict[str, int] = {}
    rt_counts: dict[str, int] = {}
    ids = {m.id for m in accepted}
    for m in accepted:
        user_counts[m.author] = user_counts.get(m.author, 0) + 1
        for url in m.links:
            link_counts[url] = link_counts.get(url, 0) + 1
        if m.kind is Kind.TWEET:
            for t in oracle_tokenize(m.text, drop):
                word_counts[t] = word_counts.get(t, 0) + 1
        else:
            rt_counts[m.retweet_of] = rt_counts.get(m.retweet_of, 0) + 1
    return {
        "k": k,
        "top_tweets": [
            {"id": i, "count": c, "captured": i in ids} for i, c in _top_entries(rt_counts, k)
        ],
        "top_words": [{"word": w, "count": c} for w, c in _top_entries(word_counts, k)],
        "top_users": [{"user": u, "count": c} for u, c in _top_entries(user_counts, k)],
        "top_links": [{"url": u, "count": c} for u, c in _top_entries(link_counts, k)],
    }


def batch_oracle(
    log_path: str | Path,
    graph_path: Optional[str | Path],
    config: SessionConfig,
    *,
    k: int = TOP_K,
) -> dict:
    """Recompute the full report for a finished log, from the files alone."""
    messages = load_messages(log_path, legacy_140=config.legacy_140)
    graph = load_graph_map(graph_path) if graph_path is not None else {}
    accepted, stats, start_ms = filter_messages(messages, config)
    offset = config.display_offset_hours
    records = (
        _local_records(accepted, graph, start_ms) if start_ms is not None and accepted else []
    )
    miss_count = sum(1 for r in records if r["graph_miss"])
    return {
        "config": config.to_json(),
        "session": {
            "start_ts": None if start_ms is None else format_rfc3339_ms(start_ms, offset),
            "last_event_ts": None
            if not accepted
            else format_rfc3339_ms(accepted[-1].ts_ms, offset),
        },
        "filter_stats": stats,
        "global": _global_section(accepted),
        "series": _series_section(accepted, start_ms if accepted else None, config.bucket_ms, offset),
        "local": {"population": len(records), "graph_miss": miss_count},
        "distributions": {
            f: _distribution(records, f)
            for f in ("nb_messages", "nb_fe", "nb_fg_p", "total_r", "elapsed_h")
        },
        "heavy_tail": _heavy_tail(records),
        "correlations": {
            "nb_messages_vs_nb_fe": _scatter(records, "nb_messages", "nb_fe"),
            "nb_messages_vs_total_r": _scatter(records, "nb_messages", "total_r"),
        },
        "elapsed": _elapsed_section(records),
        "knowledge": _knowledge_section(accepted, list(config.keywords), k),
    }
