"""Shared fixtures and report-building helpers."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

import pytest

from scanalytics.feed import (
    DetailedLabel,
    FeedCohort,
    ScannerVerdict,
    ScanReport,
)

UTC = timezone.utc


def ts(day: int, hour: int = 12) -> datetime:
    """UTC timestamp `day` days after 2021-03-01."""
    return datetime(2021, 3, 1, hour, tzinfo=UTC) + timedelta(days=day)


def verdict(name: str, label: DetailedLabel | None = None) -> ScannerVerdict:
    """Detecting verdict when a label is given, benign verdict otherwise."""
    if label is None or label is DetailedLabel.Benign:
        return ScannerVerdict(name, False, DetailedLabel.Benign)
    return ScannerVerdict(name, True, label)


def report(
    url: str,
    day: int,
    scan_id: str,
    verdicts: list[ScannerVerdict],
    first_seen_day: int = 0,
    hour: int = 12,
) -> ScanReport:
    return ScanReport(
        url=url,
        scan_date=ts(day, hour),
        first_seen=ts(first_seen_day, hour=0),
        scan_id=scan_id,
        positives=sum(1 for v in verdicts if v.detected),
        verdicts=tuple(verdicts),
    )


def cohort(reports: list[ScanReport], name: str = "test") -> FeedCohort:
    return FeedCohort.build(name, {r.url for r in reports}, reports)


@pytest.fixture
def phishing_label() -> DetailedLabel:
    return DetailedLabel.PhishingSite
