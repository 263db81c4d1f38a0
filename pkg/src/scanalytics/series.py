"""Daily label time series per (scanner, URL).

Reports are bucketed into UTC calendar days relative to the URL's first_seen
day (day 0). A day's binary label is the maximum detected flag the scanner
gave that day; its detailed label is the plurality label among the scanner's
detecting reports that day (ties broken by DetailedLabel order). Days without
a report for the scanner are absent, never imputed.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from datetime import date
from functools import cached_property
from typing import Iterable, Mapping

from .feed import DetailedLabel, FeedCohort

__all__ = ["SeriesPoint", "LabelTimeSeries", "SeriesMap", "build_series", "align_by_offset", "write_series_csv"]


@dataclass(frozen=True, slots=True)
class SeriesPoint:
    day_offset: int
    bl: int
    dl: DetailedLabel


@dataclass(frozen=True)
class LabelTimeSeries:
    """Chronological daily labels of one scanner for one URL."""

    scanner: str
    url: str
    day0: date
    points: tuple[SeriesPoint, ...]

    @cached_property
    def observed_days(self) -> frozenset[int]:
        return frozenset(p.day_offset for p in self.points)

    @cached_property
    def _by_offset(self) -> dict[int, SeriesPoint]:
        return {p.day_offset: p for p in self.points}

    def at(self, offset: int) -> SeriesPoint | None:
        return self._by_offset.get(offset)

    def binary_sequence(self, window: int | None = None) -> list[int]:
        """Observed-day binary labels, in offset order, optionally windowed."""
        return [p.bl for p in self.points if window is None or p.day_offset < window]

    def detailed_sequence(self, window: int | None = None) -> list[DetailedLabel]:
        return [p.dl for p in self.points if window is None or p.day_offset < window]


SeriesMap = Mapping[tuple[str, str], LabelTimeSeries]


def _plurality_label(labels: Iterable[DetailedLabel]) -> DetailedLabel:
    counts = Counter(labels)
    # Most frequent wins; equal counts fall back to enumeration order.
    return min(counts, key=lambda lab: (-counts[lab], int(lab)))


def build_series(cohort: FeedCohort) -> dict[tuple[str, str], LabelTimeSeries]:
    """Build per-(scanner, URL) daily series from a deduplicated cohort.

    Day 0 is the URL's earliest first_seen day across its reports. The result
    is independent of input report order.
    """
    day0_by_url: dict[str, date] = {}
    for report in cohort.reports:
        day = report.first_seen_day
        prev = day0_by_url.get(report.url)
        if prev is None or day < prev:
            day0_by_url[report.url] = day

    # (scanner, url) -> offset -> (max bl, detecting labels seen that day)
    buckets: dict[tuple[str, str], dict[int, tuple[int, list[DetailedLabel]]]] = {}
    for report in cohort.reports:
        offset = (report.scan_day - day0_by_url[report.url]).days
        for verdict in report.verdicts:
            key = (verdict.scanner_name, report.url)
            days = buckets.setdefault(key, {})
            bl, detecting = days.get(offset, (0, []))
            if verdict.detected:
                bl = 1
                detecting.append(verdict.result)
            days[offset] = (bl, detecting)

    out: dict[tuple[str, str], LabelTimeSeries] = {}
    for (scanner, url), days in buckets.items():
        points = []
        for offset in sorted(days):
            bl, detecting = days[offset]
            dl = _plurality_label(detecting) if bl else DetailedLabel.Benign
            points.append(SeriesPoint(offset, bl, dl))
        out[(scanner, url)] = LabelTimeSeries(
            scanner=scanner, url=url, day0=day0_by_url[url], points=tuple(points)
        )
    return out


def align_by_offset(
    series: SeriesMap, offset: int
) -> dict[tuple[str, str], tuple[int, DetailedLabel]]:
    """Labels of every series that observed `offset`; no imputation."""
    if offset < 0:
        raise ValueError("offset must be non-negative")
    out: dict[tuple[str, str], tuple[int, DetailedLabel]] = {}
    for key, ts in series.items():
        point = ts.at(offset)
        if point is not None:
            out[key] = (point.bl, point.dl)
    return out


def write_series_csv(series: SeriesMap, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scanner", "url", "day_offset", "bl", "dl"])
        for scanner, url in sorted(series):
            for point in series[(scanner, url)].points:
                writer.writerow([scanner, url, point.day_offset, point.bl, point.dl.name])
