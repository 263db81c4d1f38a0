"""Daily series construction and alignment."""

from __future__ import annotations

import random

from hypothesis import given, settings
from hypothesis import strategies as st

from scanalytics.feed import DetailedLabel
from scanalytics.series import align_by_offset, build_series

from conftest import cohort, report, verdict


class TestBuildSeries:
    def test_same_day_highest_binary_label_wins(self):
        rs = [
            report("http://u.test/", 0, "r1", [verdict("S", None)], hour=2),
            report("http://u.test/", 0, "r2", [verdict("S", DetailedLabel.PhishingSite)], hour=20),
        ]
        series = build_series(cohort(rs))
        points = series[("S", "http://u.test/")].points
        assert len(points) == 1
        assert (points[0].day_offset, points[0].bl, points[0].dl) == (0, 1, DetailedLabel.PhishingSite)

    def test_single_benign_report_on_day0(self):
        rs = [report("http://u.test/", 0, "r1", [verdict("S", None)])]
        points = build_series(cohort(rs))[("S", "http://u.test/")].points
        assert [(p.day_offset, p.bl, p.dl) for p in points] == [(0, 0, DetailedLabel.Benign)]

    def test_gap_days_absent(self):
        rs = [
            report("http://u.test/", 0, "r0", [verdict("S", None)]),
            report("http://u.test/", 1, "r1", [verdict("S", DetailedLabel.MalwareSite)]),
            report("http://u.test/", 4, "r4", [verdict("S", None)]),
        ]
        ts = build_series(cohort(rs))[("S", "http://u.test/")]
        assert [p.day_offset for p in ts.points] == [0, 1, 4]
        assert [p.bl for p in ts.points] == [0, 1, 0]
        assert ts.observed_days == {0, 1, 4}

    def test_intra_day_label_conflict_plurality_then_enum_order(self):
        rs = [
            report("http://u.test/", 0, "a", [verdict("S", DetailedLabel.MalwareSite)], hour=1),
            report("http://u.test/", 0, "b", [verdict("S", DetailedLabel.MalwareSite)], hour=2),
            report("http://u.test/", 0, "c", [verdict("S", DetailedLabel.PhishingSite)], hour=3),
        ]
        ts = build_series(cohort(rs))
        assert ts[("S", "http://u.test/")].points[0].dl is DetailedLabel.MalwareSite

        tie = [
            report("http://v.test/", 0, "d", [verdict("S", DetailedLabel.MalwareSite)], hour=1),
            report("http://v.test/", 0, "e", [verdict("S", DetailedLabel.PhishingSite)], hour=2),
        ]
        ts = build_series(cohort(tie))
        # Equal counts: PhishingSite(1) precedes MalwareSite(3) in enum order.
        assert ts[("S", "http://v.test/")].points[0].dl is DetailedLabel.PhishingSite

    def test_order_invariance(self):
        rng = random.Random(5)
        rs = []
        for i in range(30):
            for d in range(5):
                label = DetailedLabel.PhishingSite if rng.random() < 0.4 else None
                rs.append(report(f"http://u{i}.test/", d, f"{i}-{d}", [verdict("S", label)]))
        forward = build_series(cohort(rs))
        shuffled = rs[:]
        rng.shuffle(shuffled)
        assert build_series(cohort(shuffled)) == forward

    def test_bl_dl_consistency(self):
        rng = random.Random(11)
        labels = [None, DetailedLabel.PhishingSite, DetailedLabel.MalwareSite, DetailedLabel.SpamSite]
        rs = []
        for i in range(40):
            for d in range(6):
                rs.append(
                    report(f"http://u{i}.test/", d, f"{i}-{d}", [verdict("S", rng.choice(labels))])
                )
        for ts in build_series(cohort(rs)).values():
            for p in ts.points:
                assert (p.bl == 1) == (p.dl is not DetailedLabel.Benign)
            offsets = [p.day_offset for p in ts.points]
            assert offsets == sorted(offsets)
            assert len(set(offsets)) == len(offsets)


def _rebucket_oracle(reports):
    """Independent (day, bl) bucketing straight from raw reports."""
    day0 = {}
    for r in reports:
        d = r.first_seen.date()
        if r.url not in day0 or d < day0[r.url]:
            day0[r.url] = d
    out = {}
    for r in reports:
        offset = (r.scan_date.date() - day0[r.url]).days
        for v in r.verdicts:
            key = (v.scanner_name, r.url)
            days = out.setdefault(key, {})
            days[offset] = max(days.get(offset, 0), int(v.detected))
    return out


class TestRebucketOracle:
    @settings(max_examples=30, deadline=None)
    @given(data=st.data())
    def test_matches_oracle(self, data):
        n_urls = data.draw(st.integers(min_value=1, max_value=6))
        n_days = data.draw(st.integers(min_value=1, max_value=8))
        seed = data.draw(st.integers(min_value=0, max_value=10_000))
        rng = random.Random(seed)
        rs = []
        for i in range(n_urls):
            for d in range(n_days):
                if rng.random() < 0.3:
                    continue  # missing day
                for k in range(rng.choice([1, 1, 2])):  # occasional same-day rescan
                    vs = [
                        verdict("A", DetailedLabel.MalwareSite if rng.random() < 0.5 else None),
                        verdict("B", DetailedLabel.PhishingSite if rng.random() < 0.3 else None),
                    ]
                    rs.append(report(f"http://u{i}.test/", d, f"{i}-{d}-{k}", vs))
        if not rs:
            return
        series = build_series(cohort(rs))
        oracle = _rebucket_oracle(rs)
        assert set(series) == set(oracle)
        for key, ts in series.items():
            assert {p.day_offset: p.bl for p in ts.points} == oracle[key]


class TestAlignByOffset:
    def _series(self):
        rs = [
            report("http://a.test/", 0, "a0", [verdict("S", DetailedLabel.PhishingSite), verdict("T", None)]),
            report("http://a.test/", 2, "a2", [verdict("S", None), verdict("T", DetailedLabel.MalwareSite)]),
            report("http://b.test/", 0, "b0", [verdict("S", None), verdict("T", None)]),
            report("http://b.test/", 1, "b1", [verdict("S", DetailedLabel.SpamSite), verdict("T", None)]),
        ]
        return build_series(cohort(rs))

    def test_day0_membership(self):
        aligned = align_by_offset(self._series(), 0)
        assert set(aligned) == {
            ("S", "http://a.test/"),
            ("T", "http://a.test/"),
            ("S", "http://b.test/"),
            ("T", "http://b.test/"),
        }
        assert aligned[("S", "http://a.test/")] == (1, DetailedLabel.PhishingSite)

    def test_offset_past_series_empty(self):
        assert align_by_offset(self._series(), 99) == {}

    def test_partial_membership(self):
        aligned = align_by_offset(self._series(), 1)
        assert set(aligned) == {("S", "http://b.test/"), ("T", "http://b.test/")}
        aligned2 = align_by_offset(self._series(), 2)
        assert set(aligned2) == {("S", "http://a.test/"), ("T", "http://a.test/")}
        assert aligned2[("T", "http://a.test/")] == (1, DetailedLabel.MalwareSite)


class TestDayZeroPositivesIdentity:
    def test_sum_of_day0_bl_equals_report_positives(self):
        # One report per URL on day 0 containing every scanner exactly once:
        # summing the scanners' day-0 binary labels recovers positives.
        rs = []
        for i in range(10):
            vs = [
                verdict("A", DetailedLabel.PhishingSite if i % 2 else None),
                verdict("B", DetailedLabel.MalwareSite if i % 3 else None),
                verdict("C", None),
            ]
            rs.append(report(f"http://u{i}.test/", 0, f"r{i}", vs))
        series = build_series(cohort(rs))
        for r in rs:
            total = sum(
                series[(v.scanner_name, r.url)].at(0).bl for v in r.verdicts
            )
            assert total == r.positives

    def test_negative_offset_rejected(self):
        import pytest

        with pytest.raises(ValueError):
            align_by_offset({}, -1)
