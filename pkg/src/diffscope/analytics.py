"""Distributions, heavy-tail diagnostics, correlation scatters and
elapsed-time summaries over a population of user records.

All functions are pure: they take a snapshot of UserLocalRecords and
never mutate engine state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .local_metrics import UserLocalRecord


class UnknownField(ValueError):
    pass


class EmptyPopulation(ValueError):
    pass


class InsufficientPoints(ValueError):
    pass


LOCAL_FIELDS = ("nb_messages", "nb_fe", "nb_fg_p", "total_r", "elapsed_h")

# Fields whose values come from the graph snapshot; records flagged
# graph_miss are excluded from these by default so "unknown user" never
# masquerades as "zero followers".
GRAPH_FIELDS = frozenset({"nb_fe", "nb_fg_p", "total_r"})

ELAPSED_HORIZON_H = 72.0
ACTIVITY_THRESHOLD = 20


def field_values(
    records: Sequence[UserLocalRecord], field: str, *, include_graph_miss: bool = False
) -> list[float]:
    if field not in LOCAL_FIELDS:
        raise UnknownField(f"unknown local field {field!r}")
    if field in GRAPH_FIELDS and not include_graph_miss:
        records = [r for r in records if not r.graph_miss]
    return [getattr(r, field) for r in records]


@dataclass(frozen=True)
class Histogram:
    field: str
    bins: list[tuple[float, float, int]]  # (lower, upper, count)
    population: int
    share_at_zero: Optional[float]
    share_at_one: Optional[float]

    def to_json(self) -> dict:
        return {
            "field": self.field,
            "population": self.population,
            "share_at_zero": self.share_at_zero,
            "share_at_one": self.share_at_one,
            "bins": [[lo, hi, c] for lo, hi, c in self.bins],
        }


def distribution(
    records: Sequence[UserLocalRecord], field: str, *, include_graph_miss: bool = False
) -> Histogram:
    """Histogram of one local indicator.

    Integer indicators use unit bins over the observed values; elapsed_h
    uses one-hour bins zero-filled over [0, 72] (extended past 72 when
    later first posts exist).
    """
    values = field_values(records, field, include_graph_miss=include_graph_miss)
    n = len(values)
    if n == 0:
        return Histogram(field, [], 0, None, None)
    share_zero = sum(1 for v in values if v == 0) / n
    share_one = sum(1 for v in values if v == 1) / n
    bins: list[tuple[float, float, int]]
    if field == "elapsed_h":
        top = max(ELAPSED_HORIZON_H, math.floor(max(values)) + 1)
        counts: dict[int, int] = {}
        for v in values:
            counts[int(v)] = counts.get(int(v), 0) + 1
        bins = [(float(h), float(h + 1), counts.get(h, 0)) for h in range(int(top))]
    else:
        counts = {}
        for v in values:
            counts[int(v)] = counts.get(int(v), 0) + 1
        bins = [(float(v), float(v), counts[v]) for v in sorted(counts)]
    return Histogram(field, bins, n, share_zero, share_one)


def ccdf(values: Sequence[float]) -> list[tuple[float, float]]:
    """Complementary CDF: (value, fraction of population >= value),
    one point per distinct value in ascending order."""
    if not values:
        raise EmptyPopulation("ccdf of an empty population")
    n = len(values)
    counts: dict[float, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    points: list[tuple[float, float]] = []
    remaining = n
    for v in sorted(counts):
        points.append((v, remaining / n))
        remaining -= counts[v]
    return points


def loglog_slope(points: Sequence[tuple[float, float]], min_value: float = 1.0) -> float:
    """Least-squares slope of log10(fraction) vs log10(value).

    Diagnostic only: a near-linear log-log CCDF with slope -(a-1) is the
    signature of a power-law tail with exponent a. Points below
    max(min_value, 1) are excluded.
    """
    floor_v = max(min_value, 1.0)
    qualifying = [(v, f) for v, f in points if v >= floor_v and f > 0]
    if len(qualifying) < 3:
        raise InsufficientPoints(
            f"need >= 3 ccdf points with value >= {floor_v}, got {len(qualifying)}"
        )
    x = np.log10([v for v, _ in qualifying])
    y = np.log10([f for _, f in qualifying])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


@dataclass(frozen=True)
class GroupStats:
    n: int
    y_min: Optional[float]
    y_max: Optional[float]
    y_mean: Optional[float]
    y_cv: Optional[float]  # coefficient of variation (population std / mean)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "y_min": self.y_min,
            "y_max": self.y_max,
            "y_mean": self.y_mean,
            "y_cv": self.y_cv,
        }


def _group_stats(ys: list[float]) -> GroupStats:
    if not ys:
        return GroupStats(0, None, None, None, None)
    n = len(ys)
    mean = sum(ys) / n
    var = sum((v - mean) ** 2 for v in ys) / n
    cv = math.sqrt(var) / mean if mean != 0 else None
    return GroupStats(n, min(ys), max(ys), mean, cv)


@dataclass(frozen=True)
class ScatterSeries:
    x_field: str
    y_field: str
    points: list[tuple[str, float, float]]  # (user, x, y)
    threshold: float
    low: GroupStats  # users with x <= threshold
    high: GroupStats  # users with x > threshold

    def to_json(self) -> dict:
        return {
            "x_field": self.x_field,
            "y_field": self.y_field,
            "points": [[u, x, y] for u, x, y in self.points],
            "split": {
                "threshold": self.threshold,
                "low": self.low.to_json(),
                "high": self.high.to_json(),
            },
        }


def correlation_scatter(
    records: Sequence[UserLocalRecord],
    x_field: str,
    y_field: str,
    *,
    threshold: float = ACTIVITY_THRESHOLD,
    include_graph_miss: bool = False,
) -> ScatterSeries:
    """One (x, y) point per user, plus a below/above-threshold split summary
    supporting the homogeneity-of-the-most-active reading."""
    for f in (x_field, y_field):
        if f not in LOCAL_FIELDS:
            raise UnknownField(f"unknown local field {f!r}")
    graphy = {x_field, y_field} & GRAPH_FIELDS
    pop = [r for r in records if include_graph_miss or not graphy or not r.graph_miss]
    points = [(r.user_id, float(getattr(r, x_field)), float(getattr(r, y_field))) for r in pop]
    low = [y for _, x, y in points if x <= threshold]
    high = [y for _, x, y in points if x > threshold]
    return ScatterSeries(
        x_field=x_field,
        y_field=y_field,
        points=points,
        threshold=threshold,
        low=_group_stats(low),
        high=_group_stats(high),
    )


@dataclass(frozen=True)
class ElapsedSummary:
    population: int
    within_24h: float
    within_48h: float
    within_72h: float
    final_24h_share: float
    horizon_h: float

    def to_json(self) -> dict:
        return {
            "population": self.population,
            "within_24h": self.within_24h,
            "within_48h": self.within_48h,
            "within_72h": self.within_72h,
            "final_24h_share": self.final_24h_share,
            "horizon_h": self.horizon_h,
        }


def elapsed_summary(
    records: Sequence[UserLocalRecord], *, horizon_h: float = ELAPSED_HORIZON_H
) -> ElapsedSummary:
    """Fractions of first posts landing within 24/48/72 hours and within the
    final 24-hour window of the study horizon."""
    values = [r.elapsed_h for r in records]
    if not values:
        raise EmptyPopulation("elapsed summary of an empty population")
    n = len(values)
    return ElapsedSummary(
        population=n,
        within_24h=sum(1 for v in values if v < 24.0) / n,
        within_48h=sum(1 for v in values if v < 48.0) / n,
        within_72h=sum(1 for v in values if v < 72.0) / n,
        final_24h_share=sum(1 for v in values if horizon_h - 24.0 <= v <= horizon_h) / n,
        horizon_h=horizon_h,
    )
