"""Whole-system gates: each test here is one release criterion.

Run with -v to read the checklist; every test prints the numbers it
judged so a failure is diagnosable without rerunning by hand.
"""

import hashlib
import json
import resource
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from diffscope.analytics import LOCAL_FIELDS, ccdf, distribution, elapsed_summary, loglog_slope
from diffscope.cli import main as cli_main
from diffscope.events import MS_PER_HOUR, SessionConfig
from diffscope.ingest import FilterStats, ReplaySource, SessionEngines, run_session
from diffscope.local_metrics import GraphView
from diffscope.oracle import batch_oracle, filter_messages
from diffscope.report import build_report, compare_reports
from diffscope.synth import generate_cascade_messages, generate_graph_records, load_preset
from conftest import gen_run, mutate_messages, small_params, thin_graph, write_graph, write_log


def _random_params(rng: np.random.Generator):
    languages = ["en"] if rng.random() < 0.7 else ["en", "fr"]
    return small_params(
        n_users=int(rng.integers(30, 160)),
        follower_exponent=float(rng.uniform(2.0, 3.0)),
        base_spontaneous_rate=float(rng.uniform(0.005, 0.05)),
        influence_rate=float(rng.uniform(0.0, 0.3)),
        retweet_fraction=float(rng.uniform(0.0, 1.0)),
        repost_rate=float(rng.uniform(0.0, 0.05)),
        n_steps=int(rng.integers(6, 48)),
        decay=float(rng.uniform(0.9, 1.0)),
        seed=int(rng.integers(0, 2**31)),
        languages=languages,
    )


def _random_config(rng: np.random.Generator, params) -> SessionConfig:
    kw = {}
    if rng.random() < 0.20:
        kw["language"] = str(rng.choice(["en", "fr"]))
    r = rng.random()
    if r < 0.15:
        kw["start_ms"] = params.start_ms + int(rng.integers(0, params.n_steps)) * MS_PER_HOUR
    elif r < 0.25:
        kw["start_ms"] = params.start_ms
    if rng.random() < 0.20:
        kw["duration_ms"] = int(rng.integers(1, params.n_steps + 1)) * MS_PER_HOUR
    return SessionConfig(
        keywords=[params.topic],
        bucket_ms=int(rng.choice([MS_PER_HOUR // 2, MS_PER_HOUR, 2 * MS_PER_HOUR])),
        display_offset_hours=float(rng.choice([0.0, 1.0, 5.5])),
        legacy_140=bool(rng.random() < 0.10),
        **kw,
    )


def _one_equivalence_run(rng, params, tmp: Path) -> tuple[int, int]:
    metas, messages = gen_run(params)
    if rng.random() < 0.6:
        messages = mutate_messages(messages, rng)
    log_path = write_log(tmp / "log.jsonl", messages)

    g = rng.random()
    if g < 0.15:
        graph_path = None
        view = GraphView()
    else:
        if g < 0.55:
            metas = thin_graph(metas, rng)
        graph_path = write_graph(tmp / "graph.jsonl", metas)
        view = GraphView.load(graph_path)

    config = _random_config(rng, params)
    engines = SessionEngines(config=config, graph=view)
    stats = run_session(config, ReplaySource(log_path, legacy_140=config.legacy_140), engines)
    eng = build_report(config, engines, stats)
    ora = batch_oracle(log_path, graph_path, config)
    diffs = compare_reports(eng, ora)
    assert not diffs, f"seed {params.seed}: {diffs[:5]}"
    return len(messages), stats.accepted


def test_engine_matches_oracle_across_randomized_runs(tmp_path):
    """500+ randomized generator runs: streaming report == multi-pass recount."""
    rng = np.random.default_rng(20150121)
    t0 = time.monotonic()
    total_events = runs = 0
    for _ in range(500):
        events, _ = _one_equivalence_run(rng, _random_params(rng), tmp_path)
        total_events += events
        runs += 1
    # a few runs at the scale ceiling: 1e4 users, up to ~1e5 events
    for spont, repost, steps in [(0.02, 0.12, 48), (0.03, 0.20, 48), (0.02, 0.30, 60)] * 4:
        params = small_params(
            n_users=10_000,
            base_spontaneous_rate=spont,
            influence_rate=0.05,
            repost_rate=repost,
            retweet_fraction=0.45,
            n_steps=steps,
            decay=0.99,
            seed=int(rng.integers(0, 2**31)),
        )
        events, _ = _one_equivalence_run(rng, params, tmp_path)
        total_events += events
        runs += 1
    took = time.monotonic() - t0
    print(f"\n[gate] oracle equivalence: {runs} runs, {total_events} events, {took:.1f}s")


def test_first_post_snapshots_match_prefix_recount(tmp_path):
    """100 random logs: every (nb_fg_p, total_r) equals a recount of the accepted prefix."""
    rng = np.random.default_rng(42)
    users_checked = 0
    for _ in range(100):
        params = _random_params(rng)
        metas, messages = gen_run(params)
        if rng.random() < 0.5:
            messages = mutate_messages(messages, rng)
        if rng.random() < 0.5:
            metas = thin_graph(metas, rng)
        config = _random_config(rng, params)

        engines = SessionEngines(config=config, graph=GraphView(metas))
        run_session(config, messages, engines)
        by_user = {r.user_id: r for r in engines.local.population()}

        accepted, _, _ = filter_messages(messages, config)
        followings = {m.user_id: frozenset(m.followings) for m in metas}
        first_idx: dict[str, int] = {}
        for i, m in enumerate(accepted):
            first_idx.setdefault(m.author, i)
        assert set(first_idx) == set(by_user)
        for uid, i in first_idx.items():
            fg = followings.get(uid, frozenset())
            prefix = accepted[:i]
            total_r = sum(1 for m in prefix if m.author in fg)
            nb_fg_p = len({m.author for m in prefix if m.author in fg})
            rec = by_user[uid]
            assert (rec.nb_fg_p, rec.total_r) == (nb_fg_p, total_r), uid
            users_checked += 1
    print(f"\n[gate] prefix recount: {users_checked} first-post snapshots over 100 logs")


def test_conservation_holds_after_every_event():
    """Counter identities re-checked after each of 1e4 events, none deferred."""
    params = small_params(
        n_users=1500,
        base_spontaneous_rate=0.03,
        influence_rate=0.05,
        repost_rate=0.25,
        retweet_fraction=0.4,
        n_steps=48,
        decay=1.0,
        seed=9,
    )
    metas, messages = gen_run(params)
    assert len(messages) >= 10_000
    messages = messages[:10_000]

    config = SessionConfig(keywords=[params.topic])
    engines = SessionEngines(config=config, graph=GraphView(metas))
    stats = FilterStats()
    count = [0]

    def check(msg, is_new):
        count[0] += 1
        stats.check()
        engines.global_.check_conservation()
        g = engines.global_.snapshot()
        engines.local.check_conservation(g.nb_tw, g.nb_rtw)
        engines.knowledge.check_conservation()
        pop = engines.local.population()
        assert len(pop) == g.nb_us
        # one histogram field per event keeps the sweep O(n); all five cycle
        fields = LOCAL_FIELDS if count[0] % 500 == 0 else (LOCAL_FIELDS[count[0] % len(LOCAL_FIELDS)],)
        for field in fields:
            hist = distribution(pop, field)
            assert hist.population == g.nb_us == sum(b[2] for b in hist.bins)

    run_session(config, messages, engines, on_event=check, stats=stats)
    stats.check()
    assert count[0] == stats.accepted == 10_000
    print(f"\n[gate] conservation: identities held after each of {count[0]} events")


def test_ccdf_slope_recovers_following_exponent():
    """Generated graphs show the configured tail exponent within 0.2, 10-seed mean."""
    for alpha in (2.0, 2.5, 3.0):
        slopes = []
        for seed in range(10):
            params = small_params(n_users=10_000, follower_exponent=alpha, seed=seed)
            metas = generate_graph_records(params)
            counts = [float(len(m.followings)) for m in metas]
            slopes.append(loglog_slope(ccdf(counts)))
        mean = sum(slopes) / len(slopes)
        want = -(alpha - 1.0)
        print(f"\n[gate] ccdf slope alpha={alpha}: mean {mean:.3f}, want {want:.1f}+-0.2")
        assert abs(mean - want) <= 0.2, (alpha, mean)


def _preset_shape(name: str) -> dict:
    params, targets = load_preset(name)
    metas = generate_graph_records(params)
    messages = generate_cascade_messages(metas, params)
    config = SessionConfig(keywords=[params.topic])
    engines = SessionEngines(config=config, graph=GraphView(metas))
    run_session(config, messages, engines)

    pop = engines.local.population()
    new_users = [r["new_users"] for r in engines.global_.bucket_series(engines.start_ms)]
    xs = np.arange(len(new_users))
    return {
        "targets": targets,
        "single": distribution(pop, "nb_messages").share_at_one,
        "zero_fgp": sum(1 for r in pop if r.nb_fg_p == 0) / len(pop),
        "within_24h": elapsed_summary(pop).within_24h,
        "nu_trend": float(np.polyfit(xs, new_users, 1)[0]),
    }


def test_shipped_presets_reproduce_qualitative_shapes():
    """Broadcast preset: mostly one-shot posters with quiet neighborhoods.
    Viral preset: first posts overwhelmingly preceded by community activity.
    Both: early first posts, fading arrival of new users."""
    lo = _preset_shape("hololens_like")
    hi = _preset_shape("syriza_like")

    assert lo["single"] >= 0.65
    assert abs(lo["single"] - lo["targets"]["single_message_share"]) <= 0.05

    assert hi["zero_fgp"] > 0
    ratio = lo["zero_fgp"] / hi["zero_fgp"]
    assert ratio >= 3.0, (lo["zero_fgp"], hi["zero_fgp"])

    for shape in (lo, hi):
        assert shape["within_24h"] >= 0.5
        assert shape["nu_trend"] <= 0.0

    print(
        f"\n[gate] presets: single {lo['single']:.3f}, zero_fgp {lo['zero_fgp']:.3f}"
        f" vs {hi['zero_fgp']:.3f} ({ratio:.1f}x), within_24h {lo['within_24h']:.2f}/"
        f"{hi['within_24h']:.2f}, trends {lo['nu_trend']:+.2f}/{hi['nu_trend']:+.2f}"
    )


def _digest_tree(root: Path) -> dict[str, str]:
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def test_seeded_pipeline_is_byte_deterministic(tmp_path):
    """generate -> replay -> export twice: identical bytes everywhere."""
    for d in ("a", "b"):
        base = tmp_path / d
        base.mkdir()
        log, graph = base / "log.jsonl", base / "graph.jsonl"
        rc = cli_main(["generate", "--preset", "hololens_like", "--out-log", str(log), "--out-graph", str(graph)])
        assert rc == 0
        rc = cli_main([
            "replay", "--log", str(log), "--graph", str(graph),
            "--keywords", "hololens", "--out", str(base / "out"),
        ])
        assert rc == 0
        rc = cli_main(["export", "--report", str(base / "out" / "report.json"), "--out", str(base / "exp")])
        assert rc == 0
    da, db = _digest_tree(tmp_path / "a"), _digest_tree(tmp_path / "b")
    assert da == db
    print(f"\n[gate] determinism: {len(da)} files byte-identical across two runs")


def test_million_event_replay_fits_time_and_memory_budget(tmp_path):
    """1e6-event replay finishes under 60s using well under 2 GB."""
    log = tmp_path / "big.jsonl"
    graph = tmp_path / "big_graph.jsonl"
    with open(graph, "w", encoding="utf-8") as fh:
        for u in range(10_000):
            fg = json.dumps([f"u{(u + j) % 10_000}" for j in (1, 2, 3)])
            fh.write(f'{{"user":"u{u}","followers":3,"followings":{fg}}}\n')
    with open(log, "w", encoding="utf-8") as fh:
        for i in range(1_000_000):
            total_ms = i * 250
            s, ms = divmod(total_ms, 1000)
            mi, sec = divmod(s, 60)
            h, mi = divmod(mi, 60)
            day, h = divmod(18 + h, 24)
            ts = f"2015-01-{21 + day:02d}T{h:02d}:{mi:02d}:{sec:02d}.{ms:03d}Z"
            if i % 10 == 9:
                body = f'"kind":"retweet","rt_of":"m{i - 5}","text":"rt holo"'
            else:
                body = f'"kind":"tweet","text":"holo signal number {i % 97}"'
            fh.write(f'{{"id":"m{i}","ts":"{ts}","user":"u{i % 10_000}",{body},"links":[],"tags":[]}}\n')

    t0 = time.monotonic()
    proc = subprocess.run(
        [sys.executable, "-m", "diffscope", "replay", "--log", str(log), "--graph", str(graph), "--keywords", "holo"],
        capture_output=True,
        text=True,
        timeout=300,
    )
    took = time.monotonic() - t0
    assert proc.returncode == 0, proc.stderr[-500:]
    assert "seen 1000000" in proc.stdout
    peak_gb = resource.getrusage(resource.RUSAGE_CHILDREN).ru_maxrss / 1e6
    print(f"\n[gate] throughput: 1e6 events in {took:.1f}s, child peak {peak_gb:.2f} GB")
    assert took < 60.0
    assert peak_gb < 2.0
