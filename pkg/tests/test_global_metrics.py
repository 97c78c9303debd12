"""Session-wide counters, averages, gap bookkeeping and the bucket series."""

import pytest
from hypothesis import given, settings, strategies as st

from diffscope.events import Kind, Message
from diffscope.global_metrics import GlobalEngine, OrderViolation, series_rows_to_json
from conftest import HOUR_MS, MIN_MS, T0, hand_messages, msg, run_list


def hand_engines():
    _, engines, _ = run_list(hand_messages())
    return engines


def test_hand_counts():
    g = hand_engines().global_.snapshot()
    assert g.nb_tw == 2
    assert g.nb_rtw == 1
    assert g.nb_us == 2


def test_hand_averages():
    g = hand_engines().global_.snapshot()
    assert g.avg_tw_per_user == 1.0
    assert g.avg_rtw_per_user == 0.5
    # one tweet gap of 90 minutes, in seconds
    assert g.avg_gap_tw_s == 5400.0
    # a single retweet has no same-kind gap: undefined, not zero
    assert g.avg_gap_rtw_s is None


def test_empty_session_has_no_averages():
    engine = GlobalEngine(HOUR_MS)
    g = engine.snapshot()
    assert (g.nb_tw, g.nb_rtw, g.nb_us) == (0, 0, 0)
    assert g.avg_tw_per_user is None
    assert g.avg_rtw_per_user is None
    assert g.avg_gap_tw_s is None
    assert g.avg_gap_rtw_s is None
    assert engine.bucket_series(None) == []


def test_to_json_keys():
    doc = hand_engines().global_.snapshot().to_json()
    assert set(doc) == {
        "nb_tw",
        "nb_rtw",
        "nb_us",
        "avg_tw_per_user",
        "avg_rtw_per_user",
        "avg_gap_tw_s",
        "avg_gap_rtw_s",
    }
    assert doc["avg_gap_rtw_s"] is None


def test_hand_bucket_series():
    engines = hand_engines()
    rows = engines.global_.bucket_series(engines.start_ms)
    assert len(rows) == 2

    b0, b1 = rows
    assert b0["bucket_start_ms"] == T0
    assert (b0["nb_tw"], b0["nb_rtw"], b0["new_users"]) == (1, 1, 2)
    assert b0["bkt_avg_gap_tw_s"] is None
    assert b0["cum_avg_tw_per_user"] == 0.5
    assert b0["cum_avg_rtw_per_user"] == 0.5

    assert b1["bucket_start_ms"] == T0 + HOUR_MS
    assert (b1["nb_tw"], b1["nb_rtw"], b1["new_users"]) == (1, 0, 0)
    # the 90-minute tweet gap lands in the bucket of the later message
    assert b1["bkt_avg_gap_tw_s"] == 5400.0
    assert b1["cum_avg_gap_tw_s"] == 5400.0
    assert b1["cum_avg_tw_per_user"] == 1.0


def test_series_zero_fills_quiet_buckets():
    quiet = [
        msg("a", T0, "u1"),
        msg("b", T0 + 5 * HOUR_MS, "u2"),
    ]
    _, engines, _ = run_list(quiet)
    rows = engines.global_.bucket_series(engines.start_ms)
    assert len(rows) == 6
    assert [r["nb_tw"] for r in rows] == [1, 0, 0, 0, 0, 1]
    assert all(r["new_users"] == 0 for r in rows[1:5])
    # cumulative columns carry through the silence
    assert [r["cum_nb_tw"] for r in rows] == [1, 1, 1, 1, 1, 2]


def test_series_coarser_bucket_must_be_multiple():
    engines = hand_engines()
    rows = engines.global_.bucket_series(engines.start_ms, bucket_ms=2 * HOUR_MS)
    assert len(rows) == 1
    assert rows[0]["nb_tw"] == 2
    with pytest.raises(ValueError):
        engines.global_.bucket_series(engines.start_ms, bucket_ms=HOUR_MS // 2)
    with pytest.raises(ValueError):
        engines.global_.bucket_series(engines.start_ms, bucket_ms=HOUR_MS + 1)


def test_series_rendering_applies_display_offset():
    engines = hand_engines()
    rows = engines.global_.bucket_series(engines.start_ms)
    doc = series_rows_to_json(rows, display_offset_hours=1.0)
    assert doc[0]["bucket_start"] == "2015-01-21T19:00:00.000+01:00"
    assert "bucket_start_ms" not in doc[0]


def test_rejects_time_travel():
    engine = GlobalEngine(HOUR_MS)
    engine.apply(msg("a", T0, "u"), True, T0)
    with pytest.raises(OrderViolation):
        engine.apply(msg("b", T0 - 1, "u"), False, T0)


def test_gap_is_same_kind_only():
    """Interleaved kinds never cross-pollinate the gap accumulators."""
    seq = [
        msg("t1", T0, "a"),
        msg("r1", T0 + 10_000, "b", kind=Kind.RETWEET, retweet_of="t1"),
        msg("t2", T0 + 30_000, "a"),
        msg("r2", T0 + 70_000, "b", kind=Kind.RETWEET, retweet_of="t1"),
    ]
    _, engines, _ = run_list(seq)
    g = engines.global_.snapshot()
    assert g.avg_gap_tw_s == 30.0
    assert g.avg_gap_rtw_s == 60.0


def ts_lists(max_n=40):
    return st.lists(st.integers(0, 10**7), min_size=0, max_size=max_n).map(sorted)


@given(ts_lists(), st.integers(0, 2))
@settings(max_examples=60, deadline=None)
def test_incremental_equals_batch(offsets, kind_seed):
    """Applying one by one gives the same snapshot as one engine fed the lot."""
    mk = []
    for i, off in enumerate(offsets):
        if (i + kind_seed) % 3 == 0:
            mk.append(msg(f"r{i}", T0 + off, f"u{i % 5}", kind=Kind.RETWEET, retweet_of="x"))
        else:
            mk.append(msg(f"t{i}", T0 + off, f"u{i % 5}"))

    whole = GlobalEngine(HOUR_MS)
    seen = set()
    for m in mk:
        new = m.author not in seen
        seen.add(m.author)
        whole.apply(m, new, T0)

    stepped = GlobalEngine(HOUR_MS)
    seen2 = set()
    snaps = []
    for m in mk:
        new = m.author not in seen2
        seen2.add(m.author)
        stepped.apply(m, new, T0)
        snaps.append(stepped.snapshot())

    assert whole.snapshot() == (snaps[-1] if snaps else stepped.snapshot())
    whole.check_conservation()


@given(ts_lists(max_n=30).filter(bool))
@settings(max_examples=60, deadline=None)
def test_bucket_sums_match_totals(offsets):
    mk = [msg(f"t{i}", T0 + off, f"u{i % 4}") for i, off in enumerate(offsets)]
    _, engines, _ = run_list(mk)
    g = engines.global_.snapshot()
    rows = engines.global_.bucket_series(engines.start_ms)
    assert sum(r["nb_tw"] for r in rows) == g.nb_tw
    assert sum(r["new_users"] for r in rows) == g.nb_us
    engines.global_.check_conservation()
