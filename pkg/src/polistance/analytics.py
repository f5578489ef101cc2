"""Corpus-level descriptive statistics over tweet streams.

Everything here buckets tweets by local wall-clock time after applying a
fixed utc offset, +05:30 by default. Series are gap-free: a bucket with no
tweets is present with value 0, so consecutive bucket starts always differ
by exactly one granularity step. Standard deviations are population
standard deviations (divide by n); exports record that choice.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Tweet, format_timestamp, tokenize
from .features import PARTIES, PartyLexicon

__all__ = [
    "GRANULARITIES",
    "IST_OFFSET_MINUTES",
    "STDDEV_KIND",
    "AnalyticsError",
    "DayHourMatrix",
    "TimeSeries",
    "day_hour_matrix",
    "party_mentions",
    "pearson",
    "pct_change",
    "pct_change_values",
    "top_hashtags",
    "unique_user_stats",
    "volume_series",
    "write_day_hour",
    "write_series",
    "write_top_hashtags",
]

GRANULARITIES = ("hour", "day", "week", "month")
IST_OFFSET_MINUTES = 330
STDDEV_KIND = "population"


class AnalyticsError(ValueError):
    """Raised for invalid analytics inputs."""


def _local_zone(tz_offset_minutes: int) -> timezone:
    return timezone(timedelta(minutes=tz_offset_minutes))


def _floor_bucket(moment: datetime, granularity: str) -> datetime:
    if granularity == "hour":
        return moment.replace(minute=0, second=0, microsecond=0)
    day = moment.replace(hour=0, minute=0, second=0, microsecond=0)
    if granularity == "day":
        return day
    if granularity == "week":
        return day - timedelta(days=day.weekday())  # ISO weeks start Monday
    if granularity == "month":
        return day.replace(day=1)
    raise AnalyticsError(f"unknown granularity {granularity!r}")


def _next_bucket(bucket: datetime, granularity: str) -> datetime:
    if granularity == "hour":
        return bucket + timedelta(hours=1)
    if granularity == "day":
        return bucket + timedelta(days=1)
    if granularity == "week":
        return bucket + timedelta(days=7)
    if bucket.month == 12:
        return bucket.replace(year=bucket.year + 1, month=1)
    return bucket.replace(month=bucket.month + 1)


@dataclass(frozen=True)
class TimeSeries:
    """Gap-free bucketed values; bucket starts carry the local offset."""

    granularity: str
    tz_offset_minutes: int
    points: tuple[tuple[datetime, float], ...]

    def __post_init__(self) -> None:
        if self.granularity not in GRANULARITIES:
            raise AnalyticsError(f"unknown granularity {self.granularity!r}")
        for (a, _), (b, _) in zip(self.points, self.points[1:]):
            if _next_bucket(a, self.granularity) != b:
                raise AnalyticsError(
                    f"buckets not gap-free at {a.isoformat()} -> {b.isoformat()}"
                )

    def __len__(self) -> int:
        return len(self.points)

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(v for _, v in self.points)

    @property
    def bucket_starts(self) -> tuple[datetime, ...]:
        return tuple(t for t, _ in self.points)

    def total(self) -> float:
        return math.fsum(self.values)

    def mean(self) -> float:
        if not self.points:
            raise AnalyticsError("mean of an empty series")
        return math.fsum(self.values) / len(self.points)

    def stddev(self) -> float:
        """Population standard deviation over the buckets."""
        if not self.points:
            raise AnalyticsError("stddev of an empty series")
        center = self.mean()
        return math.sqrt(
            math.fsum((v - center) ** 2 for v in self.values) / len(self.points)
        )


def _bucket_counts(
    tweets: Iterable[Tweet], granularity: str, tz_offset_minutes: int
) -> dict[datetime, int]:
    zone = _local_zone(tz_offset_minutes)
    counts: dict[datetime, int] = {}
    for tweet in tweets:
        bucket = _floor_bucket(tweet.created_at.astimezone(zone), granularity)
        counts[bucket] = counts.get(bucket, 0) + 1
    return counts


def _filled_series(
    counts: Mapping[datetime, int],
    granularity: str,
    tz_offset_minutes: int,
    span: tuple[datetime, datetime] | None = None,
) -> TimeSeries:
    if not counts and span is None:
        return TimeSeries(granularity, tz_offset_minutes, ())
    lo, hi = span if span is not None else (min(counts), max(counts))
    points = []
    bucket = lo
    while bucket <= hi:
        points.append((bucket, float(counts.get(bucket, 0))))
        bucket = _next_bucket(bucket, granularity)
    return TimeSeries(granularity, tz_offset_minutes, tuple(points))


def volume_series(
    tweets: Sequence[Tweet],
    granularity: str = "day",
    tz_offset_minutes: int = IST_OFFSET_MINUTES,
) -> TimeSeries:
    """Tweet counts per bucket, zero-filled between first and last bucket."""
    if granularity not in GRANULARITIES:
        raise AnalyticsError(f"unknown granularity {granularity!r}")
    return _filled_series(
        _bucket_counts(tweets, granularity, tz_offset_minutes),
        granularity,
        tz_offset_minutes,
    )


@dataclass(frozen=True)
class DayHourMatrix:
    """Tweet counts by (day of week, hour of day); day 1 is Sunday."""

    counts: tuple[tuple[int, ...], ...]
    tz_offset_minutes: int

    def __post_init__(self) -> None:
        if len(self.counts) != 7 or any(len(row) != 24 for row in self.counts):
            raise AnalyticsError("day-hour matrix must be 7 x 24")

    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def at(self, day: int, hour: int) -> int:
        if not 1 <= day <= 7:
            raise AnalyticsError(f"day must be 1..7, got {day}")
        if not 0 <= hour <= 23:
            raise AnalyticsError(f"hour must be 0..23, got {hour}")
        return self.counts[day - 1][hour]


def day_hour_matrix(
    tweets: Sequence[Tweet],
    tz_offset_minutes: int = IST_OFFSET_MINUTES,
) -> DayHourMatrix:
    """7x24 histogram of local posting times, Sunday-first."""
    zone = _local_zone(tz_offset_minutes)
    grid = [[0] * 24 for _ in range(7)]
    for tweet in tweets:
        local = tweet.created_at.astimezone(zone)
        day = (local.weekday() + 1) % 7  # Monday-based 0..6 -> Sunday-based
        grid[day][local.hour] += 1
    return DayHourMatrix(
        counts=tuple(tuple(row) for row in grid),
        tz_offset_minutes=tz_offset_minutes,
    )


def party_mentions(
    tweets: Sequence[Tweet],
    lexicon: PartyLexicon,
    granularity: str = "week",
    tz_offset_minutes: int = IST_OFFSET_MINUTES,
) -> dict[str, TimeSeries]:
    """Per-party tweet counts over time.

    A tweet counts toward a party when any of its tokens matches the
    party's keywords or any of its hashtags matches the party's hashtags;
    one tweet may count toward several parties. All returned series share
    the full corpus span so they plot on a common axis.
    """
    if granularity not in GRANULARITIES:
        raise AnalyticsError(f"unknown granularity {granularity!r}")
    zone = _local_zone(tz_offset_minutes)
    per_party: dict[str, dict[datetime, int]] = {p: {} for p in PARTIES}
    span_lo: datetime | None = None
    span_hi: datetime | None = None
    for tweet in tweets:
        bucket = _floor_bucket(tweet.created_at.astimezone(zone), granularity)
        if span_lo is None or bucket < span_lo:
            span_lo = bucket
        if span_hi is None or bucket > span_hi:
            span_hi = bucket
        tokens = set(tokenize(tweet.text))
        tags = set(tweet.hashtags)
        for party in PARTIES:
            terms = lexicon.terms(party)
            if tokens & terms.keywords or tags & terms.hashtags:
                counts = per_party[party]
                counts[bucket] = counts.get(bucket, 0) + 1
    span = None if span_lo is None else (span_lo, span_hi)
    return {
        party: _filled_series(per_party[party], granularity,
                              tz_offset_minutes, span)
        for party in PARTIES
    }


def top_hashtags(
    tweets: Sequence[Tweet],
    window: str = "week",
    k: int = 5,
    tz_offset_minutes: int = IST_OFFSET_MINUTES,
) -> dict[datetime, tuple[tuple[str, int], ...]]:
    """Most frequent hashtags per window; count desc, ties alphabetical."""
    if k < 1:
        raise AnalyticsError("k must be >= 1")
    if window not in GRANULARITIES:
        raise AnalyticsError(f"unknown granularity {window!r}")
    zone = _local_zone(tz_offset_minutes)
    per_window: dict[datetime, dict[str, int]] = {}
    for tweet in tweets:
        if not tweet.hashtags:
            continue
        bucket = _floor_bucket(tweet.created_at.astimezone(zone), window)
        counts = per_window.setdefault(bucket, {})
        for tag in tweet.hashtags:
            counts[tag] = counts.get(tag, 0) + 1
    out: dict[datetime, tuple[tuple[str, int], ...]] = {}
    for bucket in sorted(per_window):
        ranked = sorted(per_window[bucket].items(),
                        key=lambda item: (-item[1], item[0]))
        out[bucket] = tuple(ranked[:k])
    return out


def unique_user_stats(
    tweets: Sequence[Tweet],
    month: str | None = None,
    top_n: int = 5,
    tz_offset_minutes: int = IST_OFFSET_MINUTES,
) -> tuple[int, tuple[tuple[str, int], ...]]:
    """Distinct author count and the heaviest tweeters.

    ``month`` is a "YYYY-MM" filter applied in local time; None keeps the
    whole corpus. Ranking is tweet count desc, ties alphabetical.
    """
    if top_n < 1:
        raise AnalyticsError("top_n must be >= 1")
    zone = _local_zone(tz_offset_minutes)
    counts: dict[str, int] = {}
    for tweet in tweets:
        if month is not None:
            local = tweet.created_at.astimezone(zone)
            if f"{local.year:04d}-{local.month:02d}" != month:
                continue
        name = tweet.author_screen_name
        counts[name] = counts.get(name, 0) + 1
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return len(counts), tuple(ranked[:top_n])


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation; exactly ±1 on exact linear relations."""
    if len(xs) != len(ys):
        raise AnalyticsError(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise AnalyticsError("need at least two points")
    n = len(xs)
    mean_x = math.fsum(xs) / n
    mean_y = math.fsum(ys) / n
    dx = [x - mean_x for x in xs]
    dy = [y - mean_y for y in ys]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0.0 or syy == 0.0:
        raise AnalyticsError("zero variance")
    sxy = math.fsum(a * b for a, b in zip(dx, dy))
    r = sxy / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def pct_change_values(values: Sequence[float]) -> tuple[float, ...]:
    """Percent change between consecutive values; input must be positive."""
    for i, value in enumerate(values):
        if not value > 0:
            raise AnalyticsError(f"value at index {i} is not positive: {value!r}")
    return tuple(
        100.0 * (curr - prev) / prev for prev, curr in zip(values, values[1:])
    )


def pct_change(series: TimeSeries) -> TimeSeries:
    """Relative day-over-day (bucket-over-bucket) change, first bucket dropped."""
    changes = pct_change_values(series.values)
    return TimeSeries(
        granularity=series.granularity,
        tz_offset_minutes=series.tz_offset_minutes,
        points=tuple(zip(series.bucket_starts[1:], changes)),
    )


def _utc_stamp(bucket: datetime) -> str:
    return format_timestamp(bucket.astimezone(timezone.utc))


def write_series(series: TimeSeries, path: str | Path) -> None:
    """CSV with bucket_start (RFC 3339, utc) and value columns."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["bucket_start", "value"])
        for bucket, value in series.points:
            writer.writerow([_utc_stamp(bucket), repr(value)])


def write_day_hour(matrix: DayHourMatrix, path: str | Path) -> None:
    """Tidy CSV: one (day, hour, count) row per cell, day 1 = Sunday."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["day", "hour", "count"])
        for day in range(1, 8):
            for hour in range(24):
                writer.writerow([day, hour, matrix.at(day, hour)])


def write_top_hashtags(
    ranked: Mapping[datetime, tuple[tuple[str, int], ...]],
    path: str | Path,
) -> None:
    """CSV of per-window hashtag rankings."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["window_start", "rank", "hashtag", "count"])
        for bucket in sorted(ranked):
            for rank, (tag, count) in enumerate(ranked[bucket], start=1):
                writer.writerow([_utc_stamp(bucket), rank, tag, count])
