"""Synthetic follower graphs and diffusion cascades.

Generation is seeded and byte-deterministic: all randomness flows from
NumPy's PCG64 stream (graph draws from PCG64(seed), cascade draws from
PCG64(seed).jumped(1)), and emitted files are canonically sorted.

The cascade model is susceptible-infected flavored with extras: silent
users post spontaneously at a decaying rate or are triggered by fresh
posts from their followings; triggered and repeat posts become retweets
of a uniformly chosen earlier post by a following.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .events import (
    BadTimestamp,
    Kind,
    Message,
    UserMeta,
    format_event_record,
    format_graph_record,
    parse_rfc3339_ms,
)
from .local_metrics import GraphView


class InvalidParams(ValueError):
    """Raised when generator parameters fail validation."""


_VOCAB = (
    "launch", "demo", "release", "crowd", "debate", "vote", "stream",
    "clip", "photo", "rumor", "panel", "speech", "rally", "update",
    "leak", "review", "thread", "poll", "recap", "live", "scoop",
    "angle", "take", "watch",
)

_LINK_POOL = (
    "http://ex.am/a1", "http://ex.am/b2", "http://ex.am/c3",
    "http://news.site/x", "http://news.site/y", "http://clips.tv/q",
    "http://blog.net/p", "http://pix.io/z",
)


@dataclass(frozen=True)
class GeneratorParams:
    """Knobs for one synthetic graph + cascade pair."""

    n_users: int
    follower_exponent: float = 2.5
    base_spontaneous_rate: float = 0.01
    influence_rate: float = 0.05
    retweet_fraction: float = 0.5
    repost_rate: float = 0.0
    n_steps: int = 72
    step_width_s: float = 3600.0
    decay: float = 1.0
    seed: int = 0
    topic: str = "topic"
    start_ts: str = "2015-01-01T00:00:00Z"
    languages: tuple[str, ...] = ("en",)
    link_rate: float = 0.1
    hashtag_rate: float = 0.2

    def __post_init__(self):
        if not isinstance(self.n_users, int) or self.n_users < 1:
            raise InvalidParams("n_users must be a positive integer")
        if not self.follower_exponent > 1.0:
            raise InvalidParams("follower_exponent must be > 1")
        for name in (
            "base_spontaneous_rate",
            "influence_rate",
            "retweet_fraction",
            "repost_rate",
            "link_rate",
            "hashtag_rate",
        ):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise InvalidParams(f"{name} must be in [0, 1]")
        if not 0.0 < self.decay <= 1.0:
            raise InvalidParams("decay must be in (0, 1]")
        if not isinstance(self.n_steps, int) or self.n_steps < 0:
            raise InvalidParams("n_steps must be a non-negative integer")
        if not self.step_width_s > 0:
            raise InvalidParams("step_width_s must be positive")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise InvalidParams("seed must be a non-negative integer")
        if not self.topic or not self.topic.strip():
            raise InvalidParams("topic must be non-empty")
        if not self.languages or any(not s for s in self.languages):
            raise InvalidParams("languages must be a non-empty tuple of tags")
        try:
            parse_rfc3339_ms(self.start_ts)
        except BadTimestamp as exc:
            raise InvalidParams(f"start_ts: {exc}") from exc

    @property
    def start_ms(self) -> int:
        return parse_rfc3339_ms(self.start_ts)

    @property
    def step_ms(self) -> int:
        return max(1, int(round(self.step_width_s * 1000)))

    def to_json(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    @classmethod
    def from_json(cls, data: dict) -> "GeneratorParams":
        known = {f.name for f in cls.__dataclass_fields__.values()}
        unknown = set(data) - known
        if unknown:
            raise InvalidParams(f"unknown parameter(s): {sorted(unknown)}")
        if "n_users" not in data:
            raise InvalidParams("n_users is required")
        kw = dict(data)
        if "languages" in kw:
            kw["languages"] = tuple(kw["languages"])
        return cls(**kw)


def sample_following_counts(
    n_users: int, alpha: float, rng: np.random.Generator
) -> np.ndarray:
    """Draw per-user following counts from a discrete power law.

    P(k) proportional to k^-alpha on k = 1 .. n_users-1. A single-user
    graph has nobody to follow, so the count is 0.
    """
    cap = n_users - 1
    if cap < 1:
        return np.zeros(n_users, dtype=np.int64)
    ks = np.arange(1, cap + 1, dtype=np.float64)
    cum = np.cumsum(ks ** (-alpha))
    cum /= cum[-1]
    draws = rng.random(n_users)
    return (np.searchsorted(cum, draws, side="right") + 1).astype(np.int64)


def _pick_followings(
    u: int, k: int, n: int, rng: np.random.Generator
) -> np.ndarray:
    """k distinct users other than u, uniform, ascending."""
    if k >= n - 1:
        out = np.delete(np.arange(n), u)
        return out
    if k > (n - 1) // 2:
        perm = rng.permutation(n - 1)[:k]
        return np.sort(perm + (perm >= u))
    chosen: set[int] = set()
    while len(chosen) < k:
        batch = rng.integers(0, n - 1, size=k - len(chosen))
        for x in batch:
            chosen.add(int(x) + (1 if x >= u else 0))
    return np.array(sorted(chosen), dtype=np.int64)


def _user_id(i: int) -> str:
    return f"u{i:05d}"


def generate_graph_records(params: GeneratorParams) -> list[UserMeta]:
    """Build the synthetic follower graph in memory, sorted by user id."""
    rng = np.random.Generator(np.random.PCG64(params.seed))
    n = params.n_users
    counts = sample_following_counts(n, params.follower_exponent, rng)
    followings = [_pick_followings(u, int(counts[u]), n, rng) for u in range(n)]
    in_deg = np.zeros(n, dtype=np.int64)
    for fg in followings:
        if fg.size:
            np.add.at(in_deg, fg, 1)
    return [
        UserMeta(
            user_id=_user_id(u),
            followers_count=int(in_deg[u]),
            followings=tuple(_user_id(v) for v in followings[u]),
        )
        for u in range(n)
    ]


def generate_graph(params: GeneratorParams, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for meta in generate_graph_records(params):
            fh.write(format_graph_record(meta) + "\n")
    return path


def _csr(adj: list[np.ndarray], n: int) -> tuple[np.ndarray, np.ndarray]:
    offsets = np.zeros(n + 1, dtype=np.int64)
    for i, a in enumerate(adj):
        offsets[i + 1] = offsets[i] + a.size
    flat = np.concatenate(adj) if offsets[-1] else np.zeros(0, dtype=np.int64)
    return flat.astype(np.int64), offsets


def generate_cascade_messages(
    graph: Iterable[UserMeta] | GraphView, params: GeneratorParams
) -> list[Message]:
    """Simulate the cascade over a graph; returns messages sorted by (ts, id).

    Per step: silent users post spontaneously at rate*decay^t or are
    triggered with probability 1-(1-influence_rate)^exposures, where
    exposures counts followings that posted in the previous step.
    Already-active users post again at repost_rate. Triggered and repeat
    posts are retweets of a uniformly chosen earlier following post with
    probability retweet_fraction (a plain tweet when nothing to cite).
    """
    metas = list(graph)
    uid_of = [m.user_id for m in metas]
    idx_of = {uid: i for i, uid in enumerate(uid_of)}
    n = len(metas)
    if n == 0:
        return []
    fg_adj = [
        np.array(
            sorted(idx_of[v] for v in m.followings if v in idx_of), dtype=np.int64
        )
        for m in metas
    ]
    fr_lists: list[list[int]] = [[] for _ in range(n)]
    for u, fg in enumerate(fg_adj):
        for v in fg:
            fr_lists[int(v)].append(u)
    fr_adj = [np.array(sorted(s), dtype=np.int64) for s in fr_lists]
    fg_flat, fg_off = _csr(fg_adj, n)
    fr_flat, fr_off = _csr(fr_adj, n)

    rng = np.random.Generator(np.random.PCG64(params.seed).jumped(1))
    start_ms = params.start_ms
    step_ms = params.step_ms
    n_lang = len(params.languages)

    active = np.zeros(n, dtype=bool)
    post_counts = np.zeros(n, dtype=np.int64)
    posts_by_author: list[list[str]] = [[] for _ in range(n)]
    prev_posters = np.zeros(0, dtype=np.int64)
    raw: list[tuple] = []
    serial = 0

    for t in range(params.n_steps):
        rate_t = params.base_spontaneous_rate * (params.decay ** t)
        u_draw = rng.random(n)
        spont = (~active) & (u_draw < rate_t)
        exposures = np.zeros(n, dtype=np.int64)
        if prev_posters.size:
            hit = np.concatenate(
                [fr_flat[fr_off[a] : fr_off[a + 1]] for a in prev_posters]
            )
            if hit.size:
                np.add.at(exposures, hit, 1)
        p_inf = np.where(
            exposures > 0,
            1.0 - (1.0 - params.influence_rate) ** exposures,
            0.0,
        )
        v_draw = rng.random(n)
        infl = (~active) & (~spont) & (v_draw < p_inf)
        w_draw = rng.random(n)
        repeat = active & (w_draw < params.repost_rate)

        posters = np.flatnonzero(spont | infl | repeat)
        if posters.size == 0:
            prev_posters = posters
            continue
        jitters = rng.integers(0, step_ms, size=posters.size)
        step_start = start_ms + t * step_ms
        new_posts: list[tuple[int, str]] = []
        for j, u in enumerate(posters):
            u = int(u)
            ts = step_start + int(jitters[j])
            mid = f"m{serial:06d}"
            serial += 1
            kind = Kind.TWEET
            rt_of: Optional[str] = None
            if not spont[u]:
                fg = fg_flat[fg_off[u] : fg_off[u + 1]]
                total = int(post_counts[fg].sum()) if fg.size else 0
                if total and rng.random() < params.retweet_fraction:
                    k = int(rng.integers(0, total))
                    for a in fg:
                        c = int(post_counts[a])
                        if k < c:
                            rt_of = posts_by_author[int(a)][k]
                            break
                        k -= c
                    kind = Kind.RETWEET
            widx = rng.integers(0, len(_VOCAB), size=3)
            if kind is Kind.TWEET:
                text = f"{params.topic} {' '.join(_VOCAB[i] for i in widx)}"
            else:
                text = f"rt {params.topic} {_VOCAB[widx[0]]}"
            links: tuple[str, ...] = ()
            if rng.random() < params.link_rate:
                links = (_LINK_POOL[int(rng.integers(0, len(_LINK_POOL)))],)
            tags: tuple[str, ...] = ()
            if rng.random() < params.hashtag_rate:
                tags = (params.topic.replace(" ", "").lower(),)
            lang = params.languages[int(rng.integers(0, n_lang))] if n_lang > 1 else params.languages[0]
            raw.append((ts, mid, uid_of[u], kind, rt_of, text, links, tags, lang))
            new_posts.append((u, mid))

        active[posters] = True
        for u, mid in new_posts:
            posts_by_author[u].append(mid)
            post_counts[u] += 1
        prev_posters = posters

    raw.sort(key=lambda r: (r[0], r[1]))
    return [
        Message(
            id=mid,
            ts_ms=ts,
            author=author,
            kind=kind,
            retweet_of=rt_of,
            text=text,
            links=links,
            hashtags=tags,
            lang=lang,
        )
        for ts, mid, author, kind, rt_of, text, links, tags, lang in raw
    ]


def generate_cascade(
    graph: str | Path | GraphView | Iterable[UserMeta],
    params: GeneratorParams,
    path: str | Path,
) -> Path:
    if isinstance(graph, (str, Path)):
        graph = GraphView.load(graph)
    msgs = generate_cascade_messages(graph, params)
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for msg in msgs:
            fh.write(format_event_record(msg) + "\n")
    return path


def list_presets() -> list[str]:
    names = []
    for entry in resources.files("diffscope.presets").iterdir():
        if entry.name.endswith(".json"):
            names.append(entry.name[:-5])
    return sorted(names)


def preset_doc(name: str) -> dict:
    """Raw preset document (name, description, params, targets)."""
    try:
        text = resources.files("diffscope.presets").joinpath(f"{name}.json").read_text("utf-8")
    except FileNotFoundError:
        raise KeyError(f"unknown preset: {name!r}") from None
    return json.loads(text)


def load_preset(name: str) -> tuple[GeneratorParams, dict]:
    """Load a shipped preset; returns (params, qualitative targets)."""
    data = preset_doc(name)
    return GeneratorParams.from_json(data["params"]), dict(data.get("targets", {}))
