"""CLI subcommands: artifacts, exit codes, determinism."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import pytest

from scanalytics.cli import main

SEED = 202


def run_cli(*argv) -> int:
    return main([str(a) for a in argv])


def hash_dir(path: Path) -> dict[str, str]:
    return {
        p.name: hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(path.iterdir())
        if p.is_file()
    }


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("synth")
    assert run_cli("synth", "--preset", "specialists", "--seed", SEED, "--out", out) == 0
    return out


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("corpus")
    scenario = out / "scenario.json"
    scenario.write_text(
        json.dumps({"kind": "classifier", "n_phishing": 250, "n_malware": 250, "seed": SEED})
    )
    assert run_cli("synth", "--scenario", scenario, "--seed", SEED, "--out", out / "data") == 0
    return out / "data"


class TestSynth:
    def test_outputs_exist(self, synth_dir):
        for name in ("feed.jsonl", "truth.csv", "planted.json", "run_manifest.json"):
            assert (synth_dir / name).exists()

    def test_manifest_hashes_match_files(self, synth_dir):
        manifest = json.loads((synth_dir / "run_manifest.json").read_text())
        for name, digest in manifest["artifacts"].items():
            actual = hashlib.sha256((synth_dir / name).read_bytes()).hexdigest()
            assert actual == digest

    def test_rerun_byte_identical(self, synth_dir, tmp_path):
        again = tmp_path / "again"
        assert run_cli("synth", "--preset", "specialists", "--seed", SEED, "--out", again) == 0
        assert hash_dir(again) == hash_dir(synth_dir)

    def test_preset_and_scenario_mutually_exclusive(self, tmp_path):
        assert run_cli("synth", "--out", tmp_path / "x") == 4

    def test_unknown_preset_is_config_error(self, tmp_path):
        assert run_cli("synth", "--preset", "nope", "--seed", 1, "--out", tmp_path / "x") == 4


class TestIngest:
    def test_summary_counts(self, synth_dir, tmp_path):
        out = tmp_path / "ingest"
        assert run_cli("ingest", "--feed", synth_dir / "feed.jsonl", "--out", out) == 0
        summary = json.loads((out / "summary.json").read_text())
        planted = json.loads((synth_dir / "planted.json").read_text())
        assert summary["reports_parsed"] == planted["n_reports"]
        assert summary["reports_after_dedup"] == planted["n_reports"]
        assert summary["urls"] == len(planted["classes"])
        assert summary["fresh_urls"] == len(planted["fresh_urls"])

    def test_missing_feed_is_input_error(self, tmp_path):
        assert run_cli("ingest", "--feed", tmp_path / "nope.jsonl", "--out", tmp_path / "o") == 2

    def test_empty_feed_is_input_error(self, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        assert run_cli("ingest", "--feed", empty, "--out", tmp_path / "o") == 2

    def test_duplicates_reported(self, synth_dir, tmp_path):
        feed = synth_dir / "feed.jsonl"
        doubled = tmp_path / "doubled.jsonl"
        text = feed.read_text()
        doubled.write_text(text + text)
        out = tmp_path / "ingest2"
        assert run_cli("ingest", "--feed", doubled, "--out", out) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["duplicates_dropped"] == summary["reports_after_dedup"]


class TestMetrics:
    def test_artifacts(self, synth_dir, tmp_path):
        out = tmp_path / "metrics"
        code = run_cli(
            "metrics", "--feed", synth_dir / "feed.jsonl",
            "--ground-truth", synth_dir / "truth.csv", "--out", out,
        )
        assert code == 0
        for name in ("f1_curves.csv", "certainty.csv", "label_hist.csv", "url_label_cdf.csv"):
            assert (out / name).exists()
        with open(out / "f1_curves.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert rows and {"scanner", "offset", "precision", "recall", "f1"} <= set(rows[0])

    def test_json_format(self, synth_dir, tmp_path):
        out = tmp_path / "metrics_json"
        code = run_cli(
            "metrics", "--feed", synth_dir / "feed.jsonl",
            "--ground-truth", synth_dir / "truth.csv", "--out", out, "--format", "json",
        )
        assert code == 0
        assert not list(out.glob("*.csv"))
        payload = json.loads((out / "certainty.json").read_text())
        assert isinstance(payload, list) and payload


class TestCorrelateAndLeadlag:
    def test_correlate_recovers_planted_groups(self, tmp_path):
        synth_out = tmp_path / "groups"
        assert run_cli("synth", "--preset", "three-groups", "--seed", 7, "--out", synth_out) == 0
        out = tmp_path / "corr"
        code = run_cli(
            "correlate", "--feed", synth_out / "feed.jsonl",
            "--planted", synth_out / "planted.json",
            "--window", 12, "--out", out,
        )
        assert code == 0
        clusters = json.loads((out / "clusters.json").read_text())
        assert clusters["planted_ari"] == 1.0

    def test_leadlag_artifacts(self, tmp_path):
        # leader-copier plants a specialist that never fires, so the matrix
        # has undefined pairs and the CSV must show the xxx sentinel.
        synth_out = tmp_path / "lc"
        assert run_cli("synth", "--preset", "leader-copier", "--seed", 11, "--out", synth_out) == 0
        out = tmp_path / "ll"
        assert run_cli("leadlag", "--feed", synth_out / "feed.jsonl", "--out", out) == 0
        with open(out / "early_ratio.csv") as fh:
            rows = {(r["scanner_a"], r["scanner_b"]): r["value"] for r in csv.DictReader(fh)}
        assert rows[("Pacer", "Shadow")] == "1"
        assert rows[("MalSpec", "Pacer")] == "xxx"
        assert (out / "leader_ranking.csv").exists()

    def test_heatmap_emitted(self, synth_dir, tmp_path):
        out = tmp_path / "corrsvg"
        code = run_cli(
            "correlate", "--feed", synth_dir / "feed.jsonl", "--out", out, "--heatmaps",
        )
        assert code == 0
        assert (out / "jaccard_binary.svg").read_text().startswith("<svg")


class TestClassify:
    def test_train_predict_trend(self, corpus_dir, tmp_path):
        train_out = tmp_path / "train"
        code = run_cli(
            "classify", "train",
            "--feed", corpus_dir / "feed.jsonl",
            "--ground-truth", corpus_dir / "truth.csv",
            "--hosting-cache", corpus_dir / "hosting_cache.csv",
            "--whois-cache", corpus_dir / "whois_cache.csv",
            "--clusters", 8, "--trees", 30, "--seed", SEED, "--out", train_out,
        )
        assert code == 0
        with open(train_out / "eval.csv") as fh:
            rows = {(r["model"], r["class"]): r for r in csv.DictReader(fh)}
        forest_acc = float(rows[("forest", "phishing")]["accuracy"])
        majority_acc = float(rows[("majority_vote", "phishing")]["accuracy"])
        assert forest_acc > majority_acc

        predict_out = tmp_path / "pred"
        code = run_cli(
            "classify", "predict",
            "--feed", corpus_dir / "feed.jsonl",
            "--model", train_out / "model.json",
            "--hosting-cache", corpus_dir / "hosting_cache.csv",
            "--whois-cache", corpus_dir / "whois_cache.csv",
            "--out", predict_out,
        )
        assert code == 0
        with open(predict_out / "predictions.csv") as fh:
            predictions = list(csv.DictReader(fh))
        assert len(predictions) == 500
        assert set(p["predicted"] for p in predictions) <= {"phishing", "malware"}

        trend_out = tmp_path / "trend"
        code = run_cli(
            "classify", "trend",
            "--feed", corpus_dir / "feed.jsonl",
            "--model", train_out / "model.json",
            "--hosting-cache", corpus_dir / "hosting_cache.csv",
            "--whois-cache", corpus_dir / "whois_cache.csv",
            "--out", trend_out,
        )
        assert code == 0
        with open(trend_out / "weekly_trend.csv") as fh:
            weeks = list(csv.DictReader(fh))
        assert weeks
        for row in weeks:
            total = float(row["phishing_fraction"]) + float(row["malware_fraction"])
            assert abs(total - 1.0) < 1e-9

    def test_missing_whois_cache_still_trains(self, corpus_dir, tmp_path, capsys):
        out = tmp_path / "nowhois"
        code = run_cli(
            "classify", "train",
            "--feed", corpus_dir / "feed.jsonl",
            "--ground-truth", corpus_dir / "truth.csv",
            "--hosting-cache", corpus_dir / "hosting_cache.csv",
            "--clusters", 8, "--trees", 10, "--seed", SEED, "--out", out,
        )
        assert code == 0
        assert "warning: no whois cache" in capsys.readouterr().out
        assert (out / "model.json").exists()

    def test_bad_model_file_is_input_error(self, corpus_dir, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{}")
        code = run_cli(
            "classify", "predict", "--feed", corpus_dir / "feed.jsonl",
            "--model", bad, "--out", tmp_path / "o",
        )
        assert code == 2

    def test_unsatisfiable_clusters_is_compute_error(self, corpus_dir, tmp_path):
        code = run_cli(
            "classify", "train",
            "--feed", corpus_dir / "feed.jsonl",
            "--ground-truth", corpus_dir / "truth.csv",
            "--clusters", 40, "--trees", 4, "--seed", SEED, "--out", tmp_path / "o",
        )
        assert code == 3


class TestDeterminism:
    @pytest.mark.parametrize("threads", [1, 3])
    def test_full_pipeline_rerun_identical(self, tmp_path, threads):
        base = tmp_path / f"t{threads}"
        synth_out = base / "synth"
        assert run_cli("synth", "--preset", "leader-copier", "--seed", 31, "--out", synth_out) == 0

        results = []
        for attempt in ("one", "two"):
            out = base / attempt
            for args in (
                ["metrics", "--feed", synth_out / "feed.jsonl",
                 "--ground-truth", synth_out / "truth.csv",
                 "--threads", threads, "--out", out / "metrics"],
                ["correlate", "--feed", synth_out / "feed.jsonl",
                 "--threads", threads, "--out", out / "correlate"],
                ["leadlag", "--feed", synth_out / "feed.jsonl",
                 "--threads", threads, "--out", out / "leadlag"],
            ):
                assert run_cli(*args) == 0
            results.append(
                {
                    sub: hash_dir(out / sub)
                    for sub in ("metrics", "correlate", "leadlag")
                }
            )
        assert results[0] == results[1]

    def test_thread_counts_agree(self, tmp_path):
        synth_out = tmp_path / "synth"
        assert run_cli("synth", "--preset", "decay", "--seed", 13, "--out", synth_out) == 0
        hashes = []
        for threads in (1, 4):
            out = tmp_path / f"corr{threads}"
            assert run_cli(
                "correlate", "--feed", synth_out / "feed.jsonl",
                "--threads", threads, "--out", out,
            ) == 0
            hashes.append(hash_dir(out))
        assert hashes[0] == hashes[1]


class TestConfigValidation:
    def test_unknown_feature_group_is_config_error(self, corpus_dir, tmp_path):
        code = run_cli(
            "classify", "train",
            "--feed", corpus_dir / "feed.jsonl",
            "--ground-truth", corpus_dir / "truth.csv",
            "--groups", "vt_cluster", "nonsense",
            "--trees", 4, "--seed", 1, "--out", tmp_path / "o",
        )
        assert code == 4

    def test_bad_flag_is_config_error(self, tmp_path):
        assert run_cli("ingest", "--no-such-flag") == 4
