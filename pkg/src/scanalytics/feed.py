"""Scan-report feed model: record types, JSONL parsing, dedup, cohorts.

The feed is UTF-8 line-delimited JSON, one scan report per line:

    {"url": "...", "scan_date": "2021-03-01T00:00:00Z",
     "first_seen": "2021-03-01T00:00:00Z", "scan_id": "...",
     "positives": 2,
     "scans": {"ScannerName": {"detected": true, "result": "phishing site"}}}

Everything returned by this module is immutable after construction and safe
to share across threads.
"""

from __future__ import annotations

import csv
import enum
import json
import random
from bisect import bisect_right
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import IO, Iterable, Union

from .scanners import is_known_scanner

__all__ = [
    "DetailedLabel",
    "ScannerVerdict",
    "ScanReport",
    "GroundTruthLabel",
    "GroundTruthRecord",
    "FeedCohort",
    "ParseWarning",
    "FeedFormatError",
    "GroundTruthConflictError",
    "parse_feed",
    "parse_feed_file",
    "report_to_json",
    "write_feed",
    "dedup_by_scan_id",
    "extract_fresh",
    "filter_ever_detected",
    "stratified_sample",
    "normalize_url",
    "load_ground_truth",
    "write_ground_truth",
]


class FeedFormatError(ValueError):
    """A feed line (or the stream) violates the record schema."""


class GroundTruthConflictError(ValueError):
    """The same URL carries conflicting ground-truth labels."""


class DetailedLabel(enum.IntEnum):
    """Attack-type verdict of a single scanner.

    Benign is the only value with binary label 0. OtherMalicious is the
    catch-all for unrecognized non-empty result strings: it counts as a
    detection but carries no attack-type vote. Enumeration order is the
    deterministic tie-break order wherever label conflicts are resolved.
    """

    Benign = 0
    PhishingSite = 1
    MaliciousSite = 2
    MalwareSite = 3
    SuspiciousSite = 4
    SpamSite = 5
    MiningSite = 6
    NotRecommendedSite = 7
    OtherMalicious = 8

    @property
    def is_detection(self) -> bool:
        return self is not DetailedLabel.Benign

    @property
    def is_attack_type(self) -> bool:
        """True for the named attack types (excludes Benign and the catch-all)."""
        return self not in (DetailedLabel.Benign, DetailedLabel.OtherMalicious)


# Case-insensitive result-string mapping; singular and plural forms both occur
# in the wild.
_LABEL_STRINGS: dict[str, DetailedLabel] = {
    "": DetailedLabel.Benign,
    "clean site": DetailedLabel.Benign,
    "phishing site": DetailedLabel.PhishingSite,
    "phishing sites": DetailedLabel.PhishingSite,
    "malicious site": DetailedLabel.MaliciousSite,
    "malicious sites": DetailedLabel.MaliciousSite,
    "malware site": DetailedLabel.MalwareSite,
    "malware sites": DetailedLabel.MalwareSite,
    "suspicious site": DetailedLabel.SuspiciousSite,
    "suspicious sites": DetailedLabel.SuspiciousSite,
    "spam site": DetailedLabel.SpamSite,
    "spam sites": DetailedLabel.SpamSite,
    "mining site": DetailedLabel.MiningSite,
    "mining sites": DetailedLabel.MiningSite,
    "not recommended site": DetailedLabel.NotRecommendedSite,
    "not recommended sites": DetailedLabel.NotRecommendedSite,
}

_CANONICAL_LABEL_STRINGS: dict[DetailedLabel, str] = {
    DetailedLabel.Benign: "clean site",
    DetailedLabel.PhishingSite: "phishing site",
    DetailedLabel.MaliciousSite: "malicious site",
    DetailedLabel.MalwareSite: "malware site",
    DetailedLabel.SuspiciousSite: "suspicious site",
    DetailedLabel.SpamSite: "spam site",
    DetailedLabel.MiningSite: "mining site",
    DetailedLabel.NotRecommendedSite: "not recommended site",
    # Deliberately not in _LABEL_STRINGS so it round-trips to the catch-all.
    DetailedLabel.OtherMalicious: "other malicious site",
}


def parse_detailed_label(result: str) -> DetailedLabel:
    """Map a raw result string to a DetailedLabel (catch-all for unknowns)."""
    return _LABEL_STRINGS.get(result.strip().lower(), DetailedLabel.OtherMalicious)


def label_to_result_string(label: DetailedLabel) -> str:
    return _CANONICAL_LABEL_STRINGS[label]


@dataclass(frozen=True, slots=True)
class ScannerVerdict:
    """One scanner's verdict inside one scan report.

    Invariants: detected == False implies result is Benign, and
    detected == True implies result is not Benign.
    """

    scanner_name: str
    detected: bool
    result: DetailedLabel

    def __post_init__(self) -> None:
        if self.detected and self.result is DetailedLabel.Benign:
            raise ValueError("detected verdict cannot carry a Benign result")
        if not self.detected and self.result is not DetailedLabel.Benign:
            raise ValueError("non-detected verdict must carry a Benign result")

    @property
    def is_known(self) -> bool:
        """True if the scanner name is in the bundled registry."""
        return is_known_scanner(self.scanner_name)


@dataclass(frozen=True, slots=True)
class ScanReport:
    """One scanner-aggregated scan of one URL at one point in time.

    `positives` always equals the number of detecting verdicts (recomputed on
    ingest when the raw field disagrees). Timestamps are UTC.
    """

    url: str
    scan_date: datetime
    first_seen: datetime
    scan_id: str
    positives: int
    verdicts: tuple[ScannerVerdict, ...]

    def __post_init__(self) -> None:
        if self.first_seen > self.scan_date:
            raise ValueError("first_seen is after scan_date")
        n_detected = sum(1 for v in self.verdicts if v.detected)
        if self.positives != n_detected:
            raise ValueError("positives does not match detecting verdict count")

    @property
    def scan_day(self):
        return self.scan_date.date()

    @property
    def first_seen_day(self):
        return self.first_seen.date()


class GroundTruthLabel(enum.Enum):
    Benign = "benign"
    Phishing = "phishing"
    Malware = "malware"
    MaliciousUnspecified = "malicious"


@dataclass(frozen=True, slots=True)
class GroundTruthRecord:
    url: str
    label: GroundTruthLabel
    source: str
    labeled_at: datetime


@dataclass(frozen=True)
class FeedCohort:
    """A named URL set together with all of its reports.

    Reports are sorted by (url, scan_date, scan_id), contain no duplicate
    scan_id, and every report's URL is in `urls`.
    """

    name: str
    urls: frozenset[str]
    reports: tuple[ScanReport, ...]

    @classmethod
    def build(cls, name: str, urls: Iterable[str], reports: Iterable[ScanReport]) -> "FeedCohort":
        """Sort, restrict to `urls`, and validate scan_id uniqueness."""
        url_set = frozenset(urls)
        kept = [r for r in reports if r.url in url_set]
        kept.sort(key=lambda r: (r.url, r.scan_date, r.scan_id))
        seen: set[str] = set()
        for r in kept:
            if r.scan_id in seen:
                raise ValueError(f"duplicate scan_id in cohort: {r.scan_id!r}")
            seen.add(r.scan_id)
        return cls(name=name, urls=url_set, reports=tuple(kept))


@dataclass(frozen=True, slots=True)
class ParseWarning:
    line: int  # 1-based line number; 0 when not tied to a line
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}"


def normalize_url(url: str) -> str:
    """Lowercase scheme and host; preserve path/query bytes exactly.

    Port and userinfo are kept as-is (only the host portion of the authority
    is case-folded). URLs without "//" authority are returned with only the
    scheme lowercased.
    """
    scheme, sep, rest = url.partition("://")
    if not sep:
        return url
    authority, slash, tail = rest.partition("/")
    userinfo, at, hostport = authority.rpartition("@")
    host, colon, port = hostport.partition(":")
    normalized_authority = userinfo + at + host.lower() + colon + port
    return scheme.lower() + sep + normalized_authority + slash + tail


def _parse_ts(value: str, field_name: str) -> datetime:
    try:
        ts = datetime.fromisoformat(value.replace("Z", "+00:00"))
    except (ValueError, AttributeError, TypeError):
        raise FeedFormatError(f"bad {field_name} timestamp: {value!r}") from None
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def _parse_line(
    line: str,
    line_no: int,
    warnings: list[ParseWarning],
    unknown_seen: set[str],
) -> ScanReport:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise FeedFormatError(f"invalid JSON: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise FeedFormatError("record is not a JSON object")

    for key in ("url", "scan_date", "first_seen", "scan_id", "positives", "scans"):
        if key not in raw:
            raise FeedFormatError(f"missing field {key!r}")

    url = raw["url"]
    if not isinstance(url, str) or not url:
        raise FeedFormatError("url must be a non-empty string")
    url = normalize_url(url)

    scan_date = _parse_ts(raw["scan_date"], "scan_date")
    first_seen = _parse_ts(raw["first_seen"], "first_seen")
    if first_seen > scan_date:
        raise FeedFormatError("first_seen is after scan_date")

    scan_id = raw["scan_id"]
    if not isinstance(scan_id, str) or not scan_id:
        raise FeedFormatError("scan_id must be a non-empty string")

    scans = raw["scans"]
    if not isinstance(scans, dict):
        raise FeedFormatError("scans must be an object")

    verdicts: list[ScannerVerdict] = []
    for scanner_name, entry in scans.items():
        if not isinstance(entry, dict) or "detected" not in entry:
            raise FeedFormatError(f"bad scans entry for {scanner_name!r}")
        detected = bool(entry["detected"])
        result = parse_detailed_label(str(entry.get("result", "")))
        if detected and result is DetailedLabel.Benign:
            # A scanner that flags the URL but gives a clean/empty result
            # string still counts as a detection, just without a type vote.
            warnings.append(
                ParseWarning(line_no, f"{scanner_name}: detected with benign result, kept as catch-all")
            )
            result = DetailedLabel.OtherMalicious
        elif not detected:
            result = DetailedLabel.Benign
        verdicts.append(ScannerVerdict(scanner_name, detected, result))
        if scanner_name not in unknown_seen and not is_known_scanner(scanner_name):
            # Unknown names are accepted but tagged; warn once per name.
            unknown_seen.add(scanner_name)
            warnings.append(ParseWarning(line_no, f"unknown scanner name {scanner_name!r}"))

    n_detected = sum(1 for v in verdicts if v.detected)
    raw_positives = raw["positives"]
    if not isinstance(raw_positives, int) or isinstance(raw_positives, bool) or raw_positives < 0:
        raise FeedFormatError("positives must be a non-negative integer")
    if raw_positives != n_detected:
        warnings.append(
            ParseWarning(
                line_no,
                f"positives field says {raw_positives} but {n_detected} verdicts detect; recomputed",
            )
        )

    return ScanReport(
        url=url,
        scan_date=scan_date,
        first_seen=first_seen,
        scan_id=scan_id,
        positives=n_detected,
        verdicts=tuple(verdicts),
    )


def parse_feed(
    stream: Union[IO[str], IO[bytes], Iterable[str], Iterable[bytes]],
    strict: bool = False,
) -> tuple[list[ScanReport], list[ParseWarning]]:
    """Parse a line-delimited feed into reports, in stream order.

    In strict mode the first malformed line raises FeedFormatError; otherwise
    malformed lines are skipped and recorded as warnings. Blank lines are
    ignored. URLs are normalized (lowercased scheme and host).
    """
    reports: list[ScanReport] = []
    warnings: list[ParseWarning] = []
    unknown_seen: set[str] = set()
    for line_no, line in enumerate(stream, start=1):
        if isinstance(line, bytes):
            try:
                line = line.decode("utf-8")
            except UnicodeDecodeError:
                if strict:
                    raise FeedFormatError(f"line {line_no}: not valid UTF-8") from None
                warnings.append(ParseWarning(line_no, "not valid UTF-8, skipped"))
                continue
        line = line.strip()
        if not line:
            continue
        try:
            reports.append(_parse_line(line, line_no, warnings, unknown_seen))
        except FeedFormatError as exc:
            if strict:
                raise FeedFormatError(f"line {line_no}: {exc}") from None
            warnings.append(ParseWarning(line_no, f"{exc}; line skipped"))
    return reports, warnings


def parse_feed_file(path, strict: bool = False) -> tuple[list[ScanReport], list[ParseWarning]]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_feed(fh, strict=strict)


def _ts_to_string(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def report_to_json(report: ScanReport) -> str:
    """Serialize one report back to its single-line record form."""
    record = {
        "url": report.url,
        "scan_date": _ts_to_string(report.scan_date),
        "first_seen": _ts_to_string(report.first_seen),
        "scan_id": report.scan_id,
        "positives": report.positives,
        "scans": {
            v.scanner_name: {"detected": v.detected, "result": label_to_result_string(v.result)}
            for v in report.verdicts
        },
    }
    return json.dumps(record, separators=(",", ":"), sort_keys=False)


def write_feed(reports: Iterable[ScanReport], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for report in reports:
            fh.write(report_to_json(report))
            fh.write("\n")


def dedup_by_scan_id(reports: list[ScanReport]) -> list[ScanReport]:
    """Keep the first occurrence of each scan_id, preserving input order."""
    seen: set[str] = set()
    out: list[ScanReport] = []
    for report in reports:
        if report.scan_id in seen:
            continue
        seen.add(report.scan_id)
        out.append(report)
    return out


def extract_fresh(reports: list[ScanReport]) -> set[str]:
    """URLs first seen on the same UTC day as one of their scans.

    Day-granularity equality: a report makes its URL fresh when the UTC
    calendar day of first_seen equals the UTC calendar day of scan_date.
    """
    fresh: set[str] = set()
    for report in reports:
        if report.url not in fresh and report.first_seen_day == report.scan_day:
            fresh.add(report.url)
    return fresh


def filter_ever_detected(reports: list[ScanReport], name: str = "ever_detected") -> FeedCohort:
    """Cohort of URLs with at least one positive report, keeping all their reports."""
    detected_urls = {r.url for r in reports if r.positives >= 1}
    return FeedCohort.build(name, detected_urls, reports)


def stratified_sample(
    reports: list[ScanReport],
    strata: tuple[list[int], list[int]],
    per_cell: int,
    seed: int,
) -> set[str]:
    """Sample up to `per_cell` URLs uniformly from each 2-D stratum.

    A URL's cell is (bin of its report count, bin of its maximum positives),
    where each bin list [t1 < t2 < ...] partitions counts into
    [0,t1), [t1,t2), ..., [tk,inf). Deterministic for a fixed seed.
    """
    popularity_bins, positives_bins = strata
    for bins in (popularity_bins, positives_bins):
        if any(later <= earlier for earlier, later in zip(bins, bins[1:])):
            raise ValueError("bin thresholds must be strictly increasing")
    if per_cell < 1:
        raise ValueError("per_cell must be >= 1")

    n_reports: dict[str, int] = {}
    max_positives: dict[str, int] = {}
    for report in reports:
        n_reports[report.url] = n_reports.get(report.url, 0) + 1
        max_positives[report.url] = max(max_positives.get(report.url, 0), report.positives)

    cells: dict[tuple[int, int], list[str]] = {}
    for url in n_reports:
        cell = (
            bisect_right(popularity_bins, n_reports[url]),
            bisect_right(positives_bins, max_positives[url]),
        )
        cells.setdefault(cell, []).append(url)

    rng = random.Random(seed)
    sample: set[str] = set()
    for cell in sorted(cells):
        urls = sorted(cells[cell])
        if len(urls) <= per_cell:
            sample.update(urls)
        else:
            sample.update(rng.sample(urls, per_cell))
    return sample


_GT_LABELS = {label.value: label for label in GroundTruthLabel}


def load_ground_truth(path) -> list[GroundTruthRecord]:
    """Load ground-truth CSV (header: url,label,source,labeled_at).

    Exact duplicate rows collapse; a URL with more than one distinct label
    across sources raises GroundTruthConflictError listing every conflict.
    """
    records: dict[tuple[str, str], GroundTruthRecord] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        expected = {"url", "label", "source", "labeled_at"}
        if reader.fieldnames is None or not expected.issubset(reader.fieldnames):
            raise FeedFormatError(f"ground truth CSV must have columns {sorted(expected)}")
        for row_no, row in enumerate(reader, start=2):
            label_raw = row["label"].strip().lower()
            if label_raw not in _GT_LABELS:
                raise FeedFormatError(f"row {row_no}: unknown ground-truth label {row['label']!r}")
            record = GroundTruthRecord(
                url=normalize_url(row["url"].strip()),
                label=_GT_LABELS[label_raw],
                source=row["source"].strip(),
                labeled_at=_parse_ts(row["labeled_at"].strip(), "labeled_at"),
            )
            key = (record.url, record.source)
            if key in records and records[key].label is not record.label:
                raise GroundTruthConflictError(
                    f"conflicting labels for {record.url!r} from source {record.source!r}"
                )
            records[key] = record

    by_url: dict[str, set[GroundTruthLabel]] = {}
    for record in records.values():
        by_url.setdefault(record.url, set()).add(record.label)
    conflicts = sorted(url for url, labels in by_url.items() if len(labels) > 1)
    if conflicts:
        raise GroundTruthConflictError(
            "conflicting labels across sources for: " + ", ".join(conflicts)
        )
    return sorted(records.values(), key=lambda r: (r.url, r.source))


def write_ground_truth(records: Iterable[GroundTruthRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["url", "label", "source", "labeled_at"])
        for record in records:
            writer.writerow(
                [record.url, record.label.value, record.source, _ts_to_string(record.labeled_at)]
            )
