"""Shared fixtures: a fully hand-checked session plus generator shortcuts.

The hand log below is small enough to recompute every indicator with pencil
and paper; its expected values are frozen in the individual test modules.
"""

from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from diffscope.events import (
    Kind,
    Message,
    SessionConfig,
    UserMeta,
    format_event_record,
    format_graph_record,
    parse_rfc3339_ms,
)
from diffscope.ingest import FilterStats, SessionEngines, run_session
from diffscope.local_metrics import GraphView
from diffscope.synth import GeneratorParams, generate_cascade_messages, generate_graph_records

T0 = parse_rfc3339_ms("2015-01-21T18:00:00Z")
MIN_MS = 60_000
HOUR_MS = 3_600_000


def msg(
    id,
    ts_ms,
    author,
    kind=Kind.TWEET,
    retweet_of=None,
    text="holo",
    links=(),
    hashtags=(),
    lang=None,
):
    return Message(
        id=id,
        ts_ms=ts_ms,
        author=author,
        kind=kind,
        retweet_of=retweet_of,
        text=text,
        links=tuple(links),
        hashtags=tuple(hashtags),
        lang=lang,
    )


def hand_messages() -> list[Message]:
    """Five events: three accepted, one off-keyword, one duplicate id."""
    return [
        msg("m1", T0, "alice", text="Holo launch demo http://x.io", links=("http://x.io",)),
        msg("m2", T0 + 30 * MIN_MS, "bob", kind=Kind.RETWEET, retweet_of="m1", text="rt holo"),
        msg("mx", T0 + 45 * MIN_MS, "dave", text="nothing to see here"),
        msg("m3", T0 + 90 * MIN_MS, "alice", text="go holo go"),
        msg("m1", T0 + 120 * MIN_MS, "alice", text="holo dup"),
    ]


def hand_graph_metas() -> list[UserMeta]:
    return [
        UserMeta("alice", 2, ()),
        UserMeta("bob", 1, ("alice",)),
        UserMeta("carol", 0, ("alice", "bob")),
    ]


def hand_config(**overrides) -> SessionConfig:
    kw = {"keywords": ["holo"]}
    kw.update(overrides)
    return SessionConfig(**kw)


def write_log(path: Path, messages) -> Path:
    path.write_text("".join(format_event_record(m) + "\n" for m in messages), encoding="utf-8")
    return path


def write_graph(path: Path, metas) -> Path:
    path.write_text("".join(format_graph_record(m) + "\n" for m in metas), encoding="utf-8")
    return path


@pytest.fixture
def hand_log_path(tmp_path):
    return write_log(tmp_path / "log.jsonl", hand_messages())


@pytest.fixture
def hand_graph_path(tmp_path):
    return write_graph(tmp_path / "graph.jsonl", hand_graph_metas())


def run_list(messages, metas=None, config=None):
    """Run a session over an in-memory list; returns (config, engines, stats)."""
    if config is None:
        config = hand_config()
    graph = GraphView(metas if metas is not None else hand_graph_metas())
    engines = SessionEngines(config=config, graph=graph)
    stats = run_session(config, messages, engines)
    return config, engines, stats


def small_params(**overrides) -> GeneratorParams:
    kw = dict(
        n_users=60,
        follower_exponent=2.5,
        base_spontaneous_rate=0.02,
        influence_rate=0.08,
        retweet_fraction=0.5,
        repost_rate=0.01,
        n_steps=24,
        step_width_s=3600.0,
        decay=0.97,
        seed=7,
        topic="holo",
    )
    kw.update(overrides)
    return GeneratorParams(**kw)


def gen_run(params):
    metas = generate_graph_records(params)
    messages = generate_cascade_messages(metas, params)
    return metas, messages


def mutate_messages(messages, rng: np.random.Generator) -> list[Message]:
    """Inject off-keyword texts and duplicate ids, preserving timestamp order."""
    out = []
    for m in messages:
        r = rng.random()
        if r < 0.15:
            out.append(replace(m, text="unrelated chatter", links=(), hashtags=()))
        else:
            out.append(m)
    n = len(out)
    if n == 0:
        return out
    for _ in range(max(1, n // 12)):
        i = int(rng.integers(0, n))
        dup = replace(out[i], ts_ms=out[i].ts_ms + int(rng.integers(1, HOUR_MS)))
        out.append(dup)
    out.sort(key=lambda m: (m.ts_ms, m.id))
    return out


def thin_graph(metas, rng: np.random.Generator, drop=0.1) -> list[UserMeta]:
    """Withhold a fraction of graph records so some authors become misses."""
    keep = rng.random(len(metas)) >= drop
    return [m for m, k in zip(metas, keep) if k]
