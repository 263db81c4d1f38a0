"""Scanner metrics: certainty scores, F-1 trends, label distributions."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scanalytics.feed import DetailedLabel
from scanalytics.metrics import (
    bl_certainty,
    certainty_scores,
    dl_certainty,
    f1_by_offset,
    label_count_distribution,
    url_label_stats,
)
from scanalytics.series import build_series

from conftest import cohort, report, verdict

P = DetailedLabel.PhishingSite
M = DetailedLabel.MalwareSite


def series_from_labels(url_labels: dict[str, list[DetailedLabel | None]], scanner="S"):
    """Build one scanner's series from per-URL daily label lists (None = benign)."""
    rs = []
    for url, labels in url_labels.items():
        for d, label in enumerate(labels):
            rs.append(report(url, d, f"{url}-{d}", [verdict(scanner, label)]))
    full = build_series(cohort(rs))
    return [ts for (name, _), ts in full.items() if name == scanner]


class TestCertaintyWorkedExamples:
    def test_bl_certainty_mean_0625(self):
        series = series_from_labels(
            {
                "http://u1.test/": [None, M, M, None],
                "http://u2.test/": [None, M, M, M],
            }
        )
        per_url = sorted(sum(p.bl for p in ts.points) / len(ts.points) for ts in series)
        assert per_url == [0.5, 0.75]
        assert bl_certainty(series, window=30) == 0.625

    def test_dl_certainty_half(self):
        series = series_from_labels({"http://u2.test/": [None, P, M, M]})
        assert dl_certainty(series, window=30) == 0.5

    def test_constant_label_dl_equals_bl(self):
        series = series_from_labels(
            {
                "http://u1.test/": [M, M, None, M],
                "http://u2.test/": [None, M, M, M],
            }
        )
        assert dl_certainty(series, window=30) == bl_certainty(series, window=30)

    def test_all_zero_sequences(self):
        series = series_from_labels({"http://u.test/": [None, None, None]})
        assert bl_certainty(series, window=30) == 0.0
        assert dl_certainty(series, window=30) == 0.0

    def test_flipper_alternating_is_half(self):
        labels = [P if d % 2 == 0 else M for d in range(10)]
        series = series_from_labels({"http://u.test/": labels})
        assert dl_certainty(series, window=30) == 0.5
        assert bl_certainty(series, window=30) == 1.0

    def test_brute_force_recount(self):
        rng = random.Random(77)
        url_labels = {}
        for i in range(50):
            flip = rng.random()
            url_labels[f"http://u{i}.test/"] = [
                (P if rng.random() < flip else None) for _ in range(12)
            ]
        series = series_from_labels(url_labels)
        got = bl_certainty(series, window=30)
        expected = sum(
            sum(p.bl for p in ts.points) / len(ts.points) for ts in series
        ) / len(series)
        assert abs(got - expected) < 1e-12

    def test_window_restricts_observed_days(self):
        series = series_from_labels({"http://u.test/": [M, None, None, M, M, M]})
        assert bl_certainty(series, window=3) == pytest.approx(1 / 3)

    def test_empty_window_errors(self):
        series = series_from_labels({"http://u.test/": [M, M]})
        with pytest.raises(ValueError):
            bl_certainty([], window=30)
        with pytest.raises(ValueError):
            bl_certainty(series, window=0)

    @settings(max_examples=50, deadline=None)
    @given(
        rows=st.lists(
            st.lists(st.sampled_from([None, P, M, DetailedLabel.SpamSite]), min_size=1, max_size=10),
            min_size=1,
            max_size=5,
        )
    )
    def test_dl_never_exceeds_bl(self, rows):
        url_labels = {f"http://u{i}.test/": labels for i, labels in enumerate(rows)}
        series = series_from_labels(url_labels)
        dl = dl_certainty(series, window=30)
        bl = bl_certainty(series, window=30)
        assert 0.0 <= dl <= bl <= 1.0

    def test_certainty_scores_aggregator(self):
        rs = []
        for d, label in enumerate([None, M, M, None]):
            rs.append(report("http://u1.test/", d, f"a{d}", [verdict("S", label), verdict("T", P)]))
        for d, label in enumerate([None, M, M, M]):
            rs.append(report("http://u2.test/", d, f"b{d}", [verdict("S", label), verdict("T", None)]))
        scores = certainty_scores(build_series(cohort(rs)), window=30)
        assert scores["S"].bl_certainty == 0.625
        assert scores["S"].n_urls == 2
        assert scores["T"].bl_certainty == 0.5  # URL1 always, URL2 never


class TestF1ByOffset:
    def _two_class_series(self, detect_positive: bool, detect_benign: bool, days=4):
        rs = []
        for i in range(6):
            for d in range(days):
                rs.append(
                    report(
                        f"http://pos{i}.test/", d, f"p{i}-{d}",
                        [verdict("S", M if detect_positive else None)],
                    )
                )
        for i in range(4):
            for d in range(days):
                rs.append(
                    report(
                        f"http://ben{i}.test/", d, f"b{i}-{d}",
                        [verdict("S", M if detect_benign else None)],
                    )
                )
        positive = {f"http://pos{i}.test/" for i in range(6)}
        benign = {f"http://ben{i}.test/" for i in range(4)}
        return build_series(cohort(rs)), positive, benign

    def test_perfect_scanner_f1_one(self):
        series, positive, benign = self._two_class_series(True, False)
        curves = f1_by_offset(series, positive, benign, max_offset=10)
        assert all(f1 == 1.0 for _, _, _, f1 in curves["S"].points)
        assert len(curves["S"].points) == 4

    def test_never_detecting_scanner_f1_zero(self):
        series, positive, benign = self._two_class_series(False, False)
        curves = f1_by_offset(series, positive, benign, max_offset=10)
        assert all(f1 == 0.0 for _, _, _, f1 in curves["S"].points)
        assert all(p == 0.0 and r == 0.0 for _, p, r, _ in curves["S"].points)

    def test_support_counts_match_observations(self):
        series, positive, benign = self._two_class_series(True, True)
        curves = f1_by_offset(series, positive, benign, max_offset=10)
        assert curves["S"].support == tuple((d, 6, 4) for d in range(4))

    def test_missing_class_errors(self):
        series, positive, benign = self._two_class_series(True, False)
        with pytest.raises(ValueError):
            f1_by_offset(series, positive, set(), max_offset=10)
        with pytest.raises(ValueError):
            f1_by_offset(series, set(), benign, max_offset=10)

    def test_truncation_at_max_offset(self):
        series, positive, benign = self._two_class_series(True, False, days=8)
        curves = f1_by_offset(series, positive, benign, max_offset=3)
        assert max(d for d, _, _, _ in curves["S"].points) == 3

    def test_planted_specialist_matches_recount_oracle(self):
        # 400 phishing + 300 benign; specialist with planted 90% recall and a
        # false-positive rate tuned for ~95% precision.
        rng = random.Random(1234)
        rs = []
        positive, benign = set(), set()
        fp_rate = 0.9 * 400 * 0.05 / (0.95 * 300)
        for i in range(400):
            url = f"http://pos{i}.test/"
            positive.add(url)
            hit = rng.random() < 0.9
            for d in range(7):
                rs.append(report(url, d, f"p{i}-{d}", [verdict("S", P if hit else None)]))
        for i in range(300):
            url = f"http://ben{i}.test/"
            benign.add(url)
            hit = rng.random() < fp_rate
            for d in range(7):
                rs.append(report(url, d, f"b{i}-{d}", [verdict("S", P if hit else None)]))
        series = build_series(cohort(rs))
        curves = f1_by_offset(series, positive, benign, max_offset=6)

        # Independent confusion recount at offset 5.
        tp = sum(
            1 for (s, u), ts in series.items()
            if s == "S" and u in positive and ts.at(5) and ts.at(5).bl == 1
        )
        fp = sum(
            1 for (s, u), ts in series.items()
            if s == "S" and u in benign and ts.at(5) and ts.at(5).bl == 1
        )
        fn = sum(
            1 for (s, u), ts in series.items()
            if s == "S" and u in positive and ts.at(5) and ts.at(5).bl == 0
        )
        precision = tp / (tp + fp)
        recall = tp / (tp + fn)
        expected_f1 = 2 * precision * recall / (precision + recall)
        got = curves["S"].at(5)
        assert got is not None
        assert got == (precision, recall, expected_f1)
        # Planted rates put F1 near the closed-form 0.9243 target.
        assert abs(got[2] - 0.9243) < 0.04


class TestLabelCountDistribution:
    def test_single_label_scanner(self):
        series = build_series(
            cohort(
                [
                    report(f"http://u{i}.test/", d, f"{i}-{d}", [verdict("S", M)])
                    for i in range(5)
                    for d in range(3)
                ]
            )
        )
        hist = label_count_distribution(series, window=30)
        assert hist["S"] == {1: 1.0, 2: 0.0, 3: 0.0, 4: 0.0}

    def test_two_distinct_labels_counted_once(self):
        rs = [
            report("http://u.test/", 0, "a", [verdict("S", P)]),
            report("http://u.test/", 1, "b", [verdict("S", M)]),
            report("http://u.test/", 2, "c", [verdict("S", P)]),
        ]
        hist = label_count_distribution(build_series(cohort(rs)), window=30)
        assert hist["S"][2] == 1.0

    def test_planted_four_label_rate(self):
        # 3.9% of URLs get 4 distinct labels, the rest get 1.
        rs = []
        four = [DetailedLabel.PhishingSite, DetailedLabel.MalwareSite,
                DetailedLabel.SpamSite, DetailedLabel.MiningSite]
        for i in range(1000):
            url = f"http://u{i}.test/"
            if i < 39:
                for d, lab in enumerate(four):
                    rs.append(report(url, d, f"{i}-{d}", [verdict("S", lab)]))
            else:
                rs.append(report(url, 0, f"{i}-0", [verdict("S", M)]))
        hist = label_count_distribution(build_series(cohort(rs)), window=30)
        assert hist["S"][4] == pytest.approx(0.039)

    def test_catchall_and_benign_ignored(self):
        rs = [
            report("http://u.test/", 0, "a", [verdict("S", DetailedLabel.OtherMalicious)]),
            report("http://u.test/", 1, "b", [verdict("S", M)]),
        ]
        hist = label_count_distribution(build_series(cohort(rs)), window=30)
        assert hist["S"][1] == 1.0


class TestUrlLabelStats:
    def test_uniform_malware_cohort(self):
        rs = [
            report(f"http://u{i}.test/", 0, f"{i}", [verdict("A", M), verdict("B", M)])
            for i in range(10)
        ]
        stats = url_label_stats(build_series(cohort(rs)))
        assert stats.cdf_at(1) == 1.0
        assert stats.top_ratios[M] == 1.0

    def test_planted_multilabel_cdf(self):
        rs = []
        for i in range(100):
            url = f"http://u{i}.test/"
            if i < 75:  # three distinct labels
                rs.append(report(url, 0, f"{i}-a", [verdict("A", P), verdict("B", M)]))
                rs.append(report(url, 1, f"{i}-b", [verdict("A", DetailedLabel.SpamSite)]))
            else:  # one label
                rs.append(report(url, 0, f"{i}-a", [verdict("A", P), verdict("B", P)]))
        stats = url_label_stats(build_series(cohort(rs)))
        assert stats.cdf_at(2) <= 0.25

    def test_planted_top_ratio(self):
        rng = random.Random(9)
        rs = []
        n_results = 0
        n_malware = 0
        for i in range(2000):
            lab = M if rng.random() < 0.785 else P
            n_results += 1
            n_malware += lab is M
            rs.append(report(f"http://u{i}.test/", 0, f"{i}", [verdict("A", lab)]))
        stats = url_label_stats(build_series(cohort(rs)))
        assert stats.top_ratios[M] == pytest.approx(n_malware / n_results)
        assert abs(stats.top_ratios[M] - 0.785) < 0.02

    def test_ratios_sum_to_at_most_one(self):
        rng = random.Random(31)
        labels = [P, M, DetailedLabel.SpamSite, DetailedLabel.MiningSite,
                  DetailedLabel.SuspiciousSite, DetailedLabel.NotRecommendedSite]
        rs = [
            report(f"http://u{i}.test/", 0, f"{i}", [verdict("A", rng.choice(labels))])
            for i in range(500)
        ]
        stats = url_label_stats(build_series(cohort(rs)))
        assert len(stats.top_ratios) == 4
        assert sum(stats.top_ratios.values()) <= 1.0 + 1e-12
        assert all(0.0 <= v <= 1.0 for v in stats.top_ratios.values())


class TestPreconditionErrors:
    def test_url_label_stats_empty_series(self):
        with pytest.raises(ValueError, match="empty"):
            url_label_stats({})

    def test_stratified_per_cell_validation(self):
        from scanalytics.feed import stratified_sample

        with pytest.raises(ValueError, match="per_cell"):
            stratified_sample([], ([1], [1]), per_cell=0, seed=0)
