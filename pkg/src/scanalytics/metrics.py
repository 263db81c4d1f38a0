"""Per-scanner statistics: F-1 trends, label certainty, label-count profiles.

All windows are day-offset windows: an observation is inside a window of W
days when its day_offset is in [0, W). Denominators count observed days only;
absent days are never imputed. Every metric here is a pure function of the
series and therefore invariant to raw report order.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from typing import Iterable

from .feed import DetailedLabel
from .series import LabelTimeSeries, SeriesMap

__all__ = [
    "CertaintyScores",
    "F1Curve",
    "UrlLabelStats",
    "bl_certainty",
    "dl_certainty",
    "certainty_scores",
    "f1_by_offset",
    "label_count_distribution",
    "url_label_stats",
    "write_f1_csv",
    "write_certainty_csv",
    "write_label_hist_csv",
    "write_url_label_cdf_csv",
]

DEFAULT_WINDOW_DAYS = 30


@dataclass(frozen=True, slots=True)
class CertaintyScores:
    scanner: str
    bl_certainty: float
    dl_certainty: float
    n_urls: int


@dataclass(frozen=True)
class F1Curve:
    scanner: str
    # (day_offset, precision, recall, f1); offsets with zero observed
    # positive-class URLs are absent rather than emitted as 0.
    points: tuple[tuple[int, float, float, float], ...]
    # (day_offset, n_positive_gt_observed, n_negative_gt_observed)
    support: tuple[tuple[int, int, int], ...]

    def at(self, offset: int) -> tuple[float, float, float] | None:
        for day, precision, recall, f1 in self.points:
            if day == offset:
                return precision, recall, f1
        return None


def _series_for_scanner(series: SeriesMap, scanner: str) -> list[LabelTimeSeries]:
    return [ts for (name, _), ts in series.items() if name == scanner]


def _url_bl_certainty(ts: LabelTimeSeries, window: int) -> float | None:
    seq = ts.binary_sequence(window)
    if not seq:
        return None
    return sum(seq) / len(seq)


def _url_dl_certainty(ts: LabelTimeSeries, window: int) -> float | None:
    seq = ts.detailed_sequence(window)
    if not seq:
        return None
    counts = Counter(dl for dl in seq if dl is not DetailedLabel.Benign)
    if not counts:
        return 0.0
    return max(counts.values()) / len(seq)


def bl_certainty(scanner_series: Iterable[LabelTimeSeries], window: int = DEFAULT_WINDOW_DAYS) -> float:
    """Mean over URLs of (detecting days / observed days) within the window."""
    if window < 1:
        raise ValueError("window must be >= 1")
    values = [v for ts in scanner_series if (v := _url_bl_certainty(ts, window)) is not None]
    if not values:
        raise ValueError("scanner has no observed URLs in the window")
    return sum(values) / len(values)


def dl_certainty(scanner_series: Iterable[LabelTimeSeries], window: int = DEFAULT_WINDOW_DAYS) -> float:
    """Mean over URLs of (most common detecting label count / observed days).

    A URL the scanner never detects inside the window contributes 0.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    values = [v for ts in scanner_series if (v := _url_dl_certainty(ts, window)) is not None]
    if not values:
        raise ValueError("scanner has no observed URLs in the window")
    return sum(values) / len(values)


def certainty_scores(series: SeriesMap, window: int = DEFAULT_WINDOW_DAYS) -> dict[str, CertaintyScores]:
    """Both certainty scores for every scanner with observations in the window."""
    per_scanner: dict[str, list[LabelTimeSeries]] = {}
    for (scanner, _), ts in series.items():
        per_scanner.setdefault(scanner, []).append(ts)

    out: dict[str, CertaintyScores] = {}
    for scanner in sorted(per_scanner):
        bl_values = []
        dl_values = []
        for ts in per_scanner[scanner]:
            bl_value = _url_bl_certainty(ts, window)
            if bl_value is None:
                continue
            bl_values.append(bl_value)
            dl_values.append(_url_dl_certainty(ts, window))
        if not bl_values:
            continue
        out[scanner] = CertaintyScores(
            scanner=scanner,
            bl_certainty=sum(bl_values) / len(bl_values),
            dl_certainty=sum(dl_values) / len(dl_values),
            n_urls=len(bl_values),
        )
    return out


def f1_by_offset(
    series: SeriesMap,
    positive_urls: set[str],
    benign_urls: set[str],
    max_offset: int = DEFAULT_WINDOW_DAYS,
) -> dict[str, F1Curve]:
    """Per-scanner F-1 trend over day offsets against a two-class ground truth.

    At each offset, only URLs the scanner observed that day participate:
    TP = positive URLs with bl=1, FP = benign URLs with bl=1, FN = positive
    URLs with bl=0. Offsets where a scanner observed no positive URLs are
    omitted from its curve.
    """
    series_urls = {url for (_, url) in series}
    if not (positive_urls & series_urls):
        raise ValueError("ground truth has no positive-class URLs in the series")
    if not (benign_urls & series_urls):
        raise ValueError("ground truth has no benign URLs in the series")
    overlap = positive_urls & benign_urls
    if overlap:
        raise ValueError(f"URLs in both ground-truth classes: {sorted(overlap)[:3]}")

    # scanner -> offset -> [tp, fp, fn, n_pos_observed, n_neg_observed]
    tallies: dict[str, dict[int, list[int]]] = {}
    for (scanner, url), ts in series.items():
        is_positive = url in positive_urls
        if not is_positive and url not in benign_urls:
            continue
        per_offset = tallies.setdefault(scanner, {})
        for point in ts.points:
            if point.day_offset > max_offset:
                break
            cell = per_offset.setdefault(point.day_offset, [0, 0, 0, 0, 0])
            if is_positive:
                cell[3] += 1
                if point.bl:
                    cell[0] += 1
                else:
                    cell[2] += 1
            else:
                cell[4] += 1
                if point.bl:
                    cell[1] += 1

    curves: dict[str, F1Curve] = {}
    for scanner in sorted(tallies):
        points = []
        support = []
        for offset in sorted(tallies[scanner]):
            tp, fp, fn, n_pos, n_neg = tallies[scanner][offset]
            support.append((offset, n_pos, n_neg))
            if n_pos == 0:
                continue
            precision = tp / (tp + fp) if (tp + fp) else 0.0
            recall = tp / (tp + fn) if (tp + fn) else 0.0
            f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
            points.append((offset, precision, recall, f1))
        curves[scanner] = F1Curve(scanner=scanner, points=tuple(points), support=tuple(support))
    return curves


_HIST_BINS = (1, 2, 3, 4)  # the last bin aggregates counts >= 4


def label_count_distribution(
    series: SeriesMap, window: int = DEFAULT_WINDOW_DAYS
) -> dict[str, dict[int, float]]:
    """Per scanner, ratio of its URLs by distinct attack-type label count.

    Counts distinct named attack types assigned within the window (Benign and
    the catch-all are ignored); URLs with no attack-type label are excluded.
    Histogram keys are 1, 2, 3 and 4, with 4 meaning "4 or more".
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    counts: dict[str, Counter] = {}
    for (scanner, _), ts in series.items():
        distinct = {dl for dl in ts.detailed_sequence(window) if dl.is_attack_type}
        if not distinct:
            continue
        bucket = min(len(distinct), _HIST_BINS[-1])
        counts.setdefault(scanner, Counter())[bucket] += 1

    out: dict[str, dict[int, float]] = {}
    for scanner in sorted(counts):
        total = sum(counts[scanner].values())
        out[scanner] = {b: counts[scanner].get(b, 0) / total for b in _HIST_BINS}
    return out


@dataclass(frozen=True)
class UrlLabelStats:
    """Cohort-level attack-label statistics.

    label_count_cdf maps k to the fraction of URLs whose distinct attack-type
    label count (across all scanners and observed days in the window) is <= k.
    top_ratios holds the four most frequent attack-type labels as fractions of
    all detecting observations; the remainder is other labels.
    """

    label_count_cdf: tuple[tuple[int, float], ...]
    top_ratios: dict[DetailedLabel, float]
    n_urls: int

    def cdf_at(self, k: int) -> float:
        value = 0.0
        for count, cumulative in self.label_count_cdf:
            if count > k:
                break
            value = cumulative
        return value


def url_label_stats(series: SeriesMap, window: int | None = None) -> UrlLabelStats:
    """Distinct-label CDF over URLs plus top-4 label ratios over detections."""
    if not series:
        raise ValueError("empty series")
    distinct_by_url: dict[str, set[DetailedLabel]] = {}
    detecting_counts: Counter = Counter()
    for (_, url), ts in series.items():
        labels = distinct_by_url.setdefault(url, set())
        for dl in ts.detailed_sequence(window):
            if dl is DetailedLabel.Benign:
                continue
            detecting_counts[dl] += 1
            if dl.is_attack_type:
                labels.add(dl)

    n_urls = len(distinct_by_url)
    count_hist = Counter(len(labels) for labels in distinct_by_url.values())
    cdf = []
    cumulative = 0.0
    for count in sorted(count_hist):
        cumulative += count_hist[count] / n_urls
        cdf.append((count, cumulative))

    total_detections = sum(detecting_counts.values())
    ratios: dict[DetailedLabel, float] = {}
    if total_detections:
        attack_only = [
            (label, n) for label, n in detecting_counts.items() if label.is_attack_type
        ]
        attack_only.sort(key=lambda item: (-item[1], int(item[0])))
        ratios = {label: n / total_detections for label, n in attack_only[:4]}
    return UrlLabelStats(label_count_cdf=tuple(cdf), top_ratios=ratios, n_urls=n_urls)


def write_f1_csv(curves: dict[str, F1Curve], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scanner", "offset", "precision", "recall", "f1"])
        for scanner in sorted(curves):
            for offset, precision, recall, f1 in curves[scanner].points:
                writer.writerow([scanner, offset, f"{precision:.10g}", f"{recall:.10g}", f"{f1:.10g}"])


def write_certainty_csv(scores: dict[str, CertaintyScores], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scanner", "bl", "dl", "n_urls"])
        for scanner in sorted(scores):
            s = scores[scanner]
            writer.writerow([scanner, f"{s.bl_certainty:.10g}", f"{s.dl_certainty:.10g}", s.n_urls])


def write_label_hist_csv(hist: dict[str, dict[int, float]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scanner", "bin", "ratio"])
        for scanner in sorted(hist):
            for bucket in _HIST_BINS:
                writer.writerow([scanner, bucket, f"{hist[scanner][bucket]:.10g}"])


def write_url_label_cdf_csv(stats: UrlLabelStats, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label_count", "cumulative_fraction"])
        for count, cumulative in stats.label_count_cdf:
            writer.writerow([count, f"{cumulative:.10g}"])
