"""Histograms, ccdf, log-log slope fitting, scatter splits and elapsed shares."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diffscope.analytics import (
    EmptyPopulation,
    InsufficientPoints,
    UnknownField,
    ccdf,
    correlation_scatter,
    distribution,
    elapsed_summary,
    field_values,
    loglog_slope,
)
from conftest import hand_messages, run_list


def hand_records():
    _, engines, _ = run_list(hand_messages())
    return engines.local.population()


def test_field_access_and_unknown_field():
    recs = hand_records()
    assert field_values(recs, "nb_messages") == [2, 1]
    assert field_values(recs, "elapsed_h") == [0.0, 0.5]
    with pytest.raises(UnknownField):
        field_values(recs, "first_post_ms")


def test_unit_histogram_for_count_fields():
    recs = hand_records()
    doc = distribution(recs, "nb_messages").to_json()
    assert doc["field"] == "nb_messages"
    assert doc["population"] == 2
    assert doc["share_at_zero"] == 0.0
    assert doc["share_at_one"] == 0.5
    assert [b[2] for b in doc["bins"]] == [1, 1]
    assert doc["bins"][0][0] == 1.0


def test_elapsed_histogram_uses_hour_bins_out_to_72():
    recs = hand_records()
    doc = distribution(recs, "elapsed_h").to_json()
    # both users fall in the first hour; axis still spans three days
    assert len(doc["bins"]) == 72
    assert doc["bins"][0][2] == 2
    assert sum(b[2] for b in doc["bins"]) == doc["population"]
    assert doc["bins"][-1][1] == 72.0


def test_empty_population_renders_an_empty_histogram():
    doc = distribution([], "nb_messages").to_json()
    assert doc["population"] == 0
    assert doc["share_at_zero"] is None
    assert doc["share_at_one"] is None
    assert doc["bins"] == []


def test_ccdf_shape():
    pts = ccdf([1, 1, 2, 3, 3, 3])
    assert pts[0] == (1, 1.0)
    values = [v for v, _ in pts]
    fracs = [f for _, f in pts]
    assert values == sorted(values)
    assert all(a > b for a, b in zip(fracs, fracs[1:]))
    assert math.isclose(fracs[1], 4 / 6)
    assert math.isclose(fracs[2], 3 / 6)


@given(st.lists(st.integers(0, 50), min_size=1, max_size=200))
@settings(max_examples=100, deadline=None)
def test_ccdf_starts_at_one_and_strictly_decreases(values):
    pts = ccdf(values)
    assert pts[0][1] == 1.0
    fracs = [f for _, f in pts]
    assert all(a > b for a, b in zip(fracs, fracs[1:]))
    # every listed fraction is a positive share of the population
    assert all(0 < f <= 1 for f in fracs)


def test_loglog_slope_recovers_exact_power_law():
    points = [(v, v ** -1.5) for v in [1, 2, 4, 8, 16, 32, 64]]
    assert abs(loglog_slope(points) - (-1.5)) < 1e-9


def test_loglog_slope_needs_three_points_past_cutoff():
    with pytest.raises(InsufficientPoints):
        loglog_slope([(1, 1.0), (2, 0.5)])
    with pytest.raises(InsufficientPoints):
        loglog_slope([(0.5, 1.0), (0.7, 0.9), (0.9, 0.8)], min_value=1.0)


def test_scatter_split_groups():
    recs = hand_records()
    doc = correlation_scatter(recs, "nb_messages", "nb_fe", threshold=1).to_json()
    assert doc["x_field"] == "nb_messages"
    assert doc["points"] == [["alice", 2.0, 2.0], ["bob", 1.0, 1.0]]
    low, high = doc["split"]["low"], doc["split"]["high"]
    assert doc["split"]["threshold"] == 1
    assert low["n"] == 1 and low["y_mean"] == 1.0
    assert high["n"] == 1 and high["y_mean"] == 2.0


def test_scatter_cv_is_population_std_over_mean():
    recs = hand_records()
    doc = correlation_scatter(recs, "nb_messages", "nb_fe", threshold=20).to_json()
    group = doc["split"]["low"]
    assert group["n"] == 2
    ys = [2.0, 1.0]
    expected_cv = float(np.std(ys)) / float(np.mean(ys))
    assert math.isclose(group["y_cv"], expected_cv)
    assert doc["split"]["high"]["n"] == 0
    assert doc["split"]["high"]["y_cv"] is None


def test_elapsed_summary_shares():
    recs = hand_records()
    doc = elapsed_summary(recs).to_json()
    assert doc["population"] == 2
    assert doc["within_24h"] == 1.0
    assert doc["within_48h"] == 1.0
    assert doc["within_72h"] == 1.0


def test_elapsed_summary_boundaries():
    """within_24h is strict; the final-day share covers [horizon-24, horizon]."""

    class R:
        def __init__(self, h):
            self.elapsed_h = h

    recs = [R(0.0), R(23.999), R(24.0), R(47.0), R(72.0)]
    doc = elapsed_summary(recs).to_json()
    assert doc["within_24h"] == 2 / 5
    assert doc["within_48h"] == 4 / 5
    assert doc["horizon_h"] == 72.0
    # only 72.0 itself lands in [48, 72]
    assert doc["final_24h_share"] == 1 / 5

    with pytest.raises(EmptyPopulation):
        elapsed_summary([])
