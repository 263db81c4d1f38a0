"""Command-line front end.

Subcommands: ingest, metrics, correlate, leadlag, classify (train / predict /
ablate / trend), synth. Every run writes its artifacts plus a run manifest
(input and artifact content hashes, seed, version) into the output directory;
reruns with identical inputs produce byte-identical artifacts at any thread
count.

Exit codes: 0 success, 2 input error, 3 computation error, 4 config error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import random
import sys
from pathlib import Path

from . import __version__
from .classify import (
    ABLATION_ROWS,
    HostingCache,
    ModelFormatError,
    WhoisCache,
    ablation,
    build_cluster_model,
    evaluate_predictions,
    extract_features,
    feature_matrix,
    load_forest,
    majority_vote_class,
    save_forest,
    train_forest,
    weekly_trend,
    write_eval_csv,
)
from .classify.evaluate import CLASS_NAMES, encode_labels, groups_from_manifest, split_train_test
from .classify.evaluate import write_trend_csv as write_weekly_trend_csv
from .classify.features import ALL_GROUPS
from .correlate import (
    adjusted_rand_index,
    frobenius_trend,
    hierarchical_cluster,
    jaccard_binary,
    jaccard_detailed,
    scanner_dtw_matrix,
    write_heatmap_svg,
    write_matrix_csv,
    write_trend_csv,
)
from .feed import (
    FeedCohort,
    FeedFormatError,
    GroundTruthConflictError,
    GroundTruthLabel,
    dedup_by_scan_id,
    extract_fresh,
    filter_ever_detected,
    load_ground_truth,
    parse_feed_file,
    write_feed,
    write_ground_truth,
)
from .leadlag import early_detection_matrix, first_detection_index, leader_ranking, write_ranking_csv
from .metrics import (
    certainty_scores,
    f1_by_offset,
    label_count_distribution,
    url_label_stats,
    write_certainty_csv,
    write_f1_csv,
    write_label_hist_csv,
    write_url_label_cdf_csv,
)
from .series import build_series, write_series_csv
from .synth import (
    ClassifierCorpusConfig,
    ScannerArchetype,
    ScenarioConfig,
    generate,
    generate_classifier_corpus,
    preset_config,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_COMPUTE = 3
EXIT_CONFIG = 4

FACTOR_SAMPLE_SIZE = 20_000


class _ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit 4 on bad flags, not 2
        raise _ConfigError(message)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


class _Run:
    """Collects artifacts and writes the run manifest."""

    def __init__(self, command: str, out_dir: Path, seed: int | None, params: dict, fmt: str = "csv"):
        self.command = command
        self.out_dir = out_dir
        self.seed = seed
        self.params = params
        self.fmt = fmt
        self.inputs: dict[str, str] = {}
        self.artifacts: dict[str, str] = {}
        out_dir.mkdir(parents=True, exist_ok=True)

    def add_input(self, path) -> Path:
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"input file not found: {path}")
        self.inputs[path.name] = _sha256(path)
        return path

    def artifact(self, name: str) -> Path:
        return self.out_dir / name

    def _convert_csv_to_json(self) -> None:
        for path in sorted(self.out_dir.glob("*.csv")):
            with open(path, "r", encoding="utf-8", newline="") as fh:
                rows = list(csv.DictReader(fh))
            _write_json(rows, path.with_suffix(".json"))
            path.unlink()

    def seal(self) -> Path:
        if self.fmt == "json":
            self._convert_csv_to_json()
        for path in sorted(self.out_dir.iterdir()):
            if path.is_file() and path.name != "run_manifest.json":
                self.artifacts[path.name] = _sha256(path)
        manifest = {
            "command": self.command,
            "version": __version__,
            "seed": self.seed,
            "params": self.params,
            "inputs": self.inputs,
            "artifacts": self.artifacts,
        }
        target = self.out_dir / "run_manifest.json"
        with open(target, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=2)
            fh.write("\n")
        return target


def _write_json(payload, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _load_feed(run: _Run, path, strict: bool = False):
    feed_path = run.add_input(path)
    reports, warnings = parse_feed_file(feed_path, strict=strict)
    return dedup_by_scan_id(reports), warnings, len(reports)


def _split_gt(records) -> tuple[set[str], set[str]]:
    positive = {r.url for r in records if r.label is not GroundTruthLabel.Benign}
    benign = {r.url for r in records if r.label is GroundTruthLabel.Benign}
    return positive, benign


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_ingest(args) -> int:
    run = _Run("ingest", Path(args.out), None, {"strict": args.strict}, args.format)
    reports, warnings, n_raw = _load_feed(run, args.feed, strict=args.strict)
    if n_raw == 0:
        raise FeedFormatError(f"feed {args.feed} contains no parseable reports")
    cohort = filter_ever_detected(reports)
    summary = {
        "reports_parsed": n_raw,
        "reports_after_dedup": len(reports),
        "duplicates_dropped": n_raw - len(reports),
        "parse_warnings": len(warnings),
        "urls": len({r.url for r in reports}),
        "fresh_urls": len(extract_fresh(reports)),
        "ever_detected_urls": len(cohort.urls),
    }
    _write_json(summary, run.artifact("summary.json"))
    if warnings:
        with open(run.artifact("warnings.txt"), "w", encoding="utf-8") as fh:
            for warning in warnings:
                fh.write(f"{warning}\n")
    run.seal()
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def _cmd_metrics(args) -> int:
    params = {"window": args.window, "max_offset": args.max_offset}
    run = _Run("metrics", Path(args.out), None, params, args.format)
    reports, _, _ = _load_feed(run, args.feed)
    truth = load_ground_truth(run.add_input(args.ground_truth))

    # F-1 must see ground-truth URLs even when no scanner ever detects them
    # (they are false negatives); the other metrics follow the detected cohort.
    full_cohort = FeedCohort.build("all", {r.url for r in reports}, reports)
    full_series = build_series(full_cohort)
    if not full_series:
        raise ValueError("empty feed; nothing to measure")
    positive, benign = _split_gt(truth)
    curves = f1_by_offset(full_series, positive, benign, max_offset=args.max_offset)
    write_f1_csv(curves, run.artifact("f1_curves.csv"))

    series = build_series(filter_ever_detected(reports))
    if not series:
        raise ValueError("no detected URLs in feed; nothing to measure")
    scores = certainty_scores(series, window=args.window)
    write_certainty_csv(scores, run.artifact("certainty.csv"))

    hist = label_count_distribution(series, window=args.window)
    write_label_hist_csv(hist, run.artifact("label_hist.csv"))

    stats = url_label_stats(series, window=args.window)
    write_url_label_cdf_csv(stats, run.artifact("url_label_cdf.csv"))
    _write_json(
        {label.name: ratio for label, ratio in stats.top_ratios.items()},
        run.artifact("url_label_top_ratios.json"),
    )
    if args.export_series:
        write_series_csv(series, run.artifact("series.csv"))
    run.seal()
    print(f"metrics written to {run.out_dir}")
    return EXIT_OK


def _cmd_correlate(args) -> int:
    params = {
        "window": args.window,
        "max_offset": args.max_offset,
        "k": args.k,
        "cut_height": args.cut_height,
    }
    run = _Run("correlate", Path(args.out), None, params, args.format)
    reports, _, _ = _load_feed(run, args.feed)
    cohort = filter_ever_detected(reports)
    series = build_series(cohort)
    if not series:
        raise ValueError("no detected URLs in feed; nothing to correlate")
    universe = set(cohort.urls)

    jb = jaccard_binary(series, universe, window=args.window)
    write_matrix_csv(jb, run.artifact("jaccard_binary.csv"))
    jd = jaccard_detailed(series, universe, window=args.window)
    write_matrix_csv(jd, run.artifact("jaccard_detailed.csv"))
    trend = frobenius_trend(series, universe, range(0, args.max_offset + 1))
    write_trend_csv(trend, run.artifact("frobenius_trend.csv"))
    dtw = scanner_dtw_matrix(series, window=args.window)
    write_matrix_csv(dtw, run.artifact("dtw_matrix.csv"))
    if args.heatmaps:
        write_heatmap_svg(jb, run.artifact("jaccard_binary.svg"))
        write_heatmap_svg(dtw, run.artifact("dtw_matrix.svg"))

    planted_groups: dict[str, str] = {}
    if args.planted:
        with open(run.add_input(args.planted), "r", encoding="utf-8") as fh:
            planted_groups = json.load(fh).get("groups", {})

    k = args.k
    if k is None and planted_groups:
        k = len(set(planted_groups.values()))

    cluster_payload = None
    if k is not None or args.cut_height is not None:
        result = hierarchical_cluster(dtw, cut_height=args.cut_height, k=k)
        cluster_payload = {
            "assignment": dict(sorted(result.assignment.items())),
            "excluded": list(result.excluded),
            "merges": [
                {"a": a, "b": b, "height": height} for a, b, height in result.dendrogram.merges
            ],
            "leaves": list(result.dendrogram.leaves),
        }
        if planted_groups:
            tagged = [s for s in planted_groups if s in result.assignment]
            planted_ids: dict[str, int] = {}
            id_of: dict[str, int] = {}
            for scanner in sorted(tagged):
                group = planted_groups[scanner]
                id_of.setdefault(group, len(id_of))
                planted_ids[scanner] = id_of[group]
            recovered = {s: result.assignment[s] for s in tagged}
            cluster_payload["planted_ari"] = adjusted_rand_index(planted_ids, recovered)
        _write_json(cluster_payload, run.artifact("clusters.json"))

    run.seal()
    if cluster_payload and "planted_ari" in cluster_payload:
        print(f"correlate done; planted ARI = {cluster_payload['planted_ari']:.6f}")
    else:
        print(f"correlate written to {run.out_dir}")
    return EXIT_OK


def _cmd_leadlag(args) -> int:
    run = _Run("leadlag", Path(args.out), None, {"window": args.window}, args.format)
    reports, _, _ = _load_feed(run, args.feed)
    cohort = filter_ever_detected(reports)
    series = build_series(cohort)
    if not series:
        raise ValueError("no detected URLs in feed; nothing to rank")
    scanners = tuple(sorted({scanner for scanner, _ in series}))
    index = first_detection_index(series, window=args.window)
    matrix = early_detection_matrix(index, scanners=scanners)
    write_matrix_csv(matrix, run.artifact("early_ratio.csv"))
    ranking = leader_ranking(matrix)
    write_ranking_csv(ranking, run.artifact("leader_ranking.csv"))
    run.seal()
    print(f"leadlag written to {run.out_dir}")
    return EXIT_OK


def _prepare_classifier_inputs(run: _Run, args):
    """Shared train/ablate setup: features + labels + cluster model."""
    # Validate every input path up front, before any computation.
    hosting_path = run.add_input(args.hosting_cache) if args.hosting_cache else None
    whois_path = run.add_input(args.whois_cache) if args.whois_cache else None
    reports, _, _ = _load_feed(run, args.feed)
    truth = load_ground_truth(run.add_input(args.ground_truth))
    label_by_url = {
        r.url: r.label for r in truth if r.label in (GroundTruthLabel.Phishing, GroundTruthLabel.Malware)
    }
    if not label_by_url:
        raise ValueError("ground truth has no phishing/malware URLs")

    # One report per URL: the latest (most scanner-informed) one.
    latest = {}
    for report in reports:
        prev = latest.get(report.url)
        if prev is None or (report.scan_date, report.scan_id) > (prev.scan_date, prev.scan_id):
            latest[report.url] = report

    fit_pool = [r for r in reports if r.positives >= 2]
    if len(fit_pool) > FACTOR_SAMPLE_SIZE:
        rng = random.Random(args.seed)
        fit_pool = rng.sample(fit_pool, FACTOR_SAMPLE_SIZE)
    cluster_model = build_cluster_model(fit_pool, k=args.clusters, seed=args.seed)

    hosting = HostingCache.from_csv(hosting_path) if hosting_path else None
    whois = WhoisCache.from_csv(whois_path) if whois_path else None
    missing = [
        name
        for name, provider in (("hosting", hosting), ("whois", whois))
        if provider is None
    ]
    if missing:
        print(f"warning: no {'/'.join(missing)} cache provided; those groups are marked missing")

    vectors = []
    labels = []
    items = []
    for url in sorted(label_by_url):
        report = latest.get(url)
        if report is None or report.positives == 0:
            continue
        vector = extract_features(report, cluster_model, hosting=hosting, whois=whois)
        vectors.append(vector)
        labels.append(label_by_url[url])
        items.append(report)
    if not vectors:
        raise ValueError("no labeled URLs with detecting reports in feed")
    return vectors, labels, items, cluster_model


def _cmd_classify_train(args) -> int:
    unknown_groups = set(args.groups) - set(ALL_GROUPS)
    if unknown_groups:
        raise _ConfigError(f"unknown feature groups: {sorted(unknown_groups)}")
    params = {"groups": list(args.groups), "split": args.split, "clusters": args.clusters}
    run = _Run("classify-train", Path(args.out), args.seed, params, args.format)
    vectors, labels, items, cluster_model = _prepare_classifier_inputs(run, args)
    model, report = train_forest(
        vectors,
        labels,
        groups=tuple(args.groups),
        split=args.split,
        seed=args.seed,
        cluster_model=cluster_model,
        threads=args.threads,
        n_estimators=args.trees,
    )
    save_forest(model, run.artifact("model.json"))

    y = encode_labels(labels)
    _, test_idx = split_train_test(y, args.split, args.seed)
    baseline_pred = [majority_vote_class(items[i]) for i in test_idx]
    baseline = evaluate_predictions(y[test_idx], baseline_pred)
    write_eval_csv({"majority_vote": baseline, "forest": report}, run.artifact("eval.csv"))

    roc_rows = [
        {"class": class_name, "threshold": thr, "fpr": fpr, "tpr": tpr}
        for class_name, points in report.roc.items()
        for thr, fpr, tpr in points
    ]
    _write_json(roc_rows, run.artifact("roc.json"))
    run.seal()
    print(
        f"forest accuracy {report.accuracy:.4f} vs majority vote {baseline.accuracy:.4f} "
        f"on {report.n_test} test URLs"
    )
    return EXIT_OK


def _cmd_classify_predict(args) -> int:
    run = _Run("classify-predict", Path(args.out), None, {}, args.format)
    model = load_forest(run.add_input(args.model))
    if model.cluster_model is None:
        raise ModelFormatError("model file lacks a scanner cluster model")
    reports, _, _ = _load_feed(run, args.feed)
    hosting = HostingCache.from_csv(run.add_input(args.hosting_cache)) if args.hosting_cache else None
    whois = WhoisCache.from_csv(run.add_input(args.whois_cache)) if args.whois_cache else None

    groups = groups_from_manifest(model.feature_names)
    rows = []
    vectors = []
    for report in reports:
        if report.positives == 0:
            continue
        vectors.append(extract_features(report, model.cluster_model, hosting=hosting, whois=whois))
        rows.append(report)
    if not vectors:
        raise ValueError("no reports with detections to classify")
    scores = model.predict_proba(feature_matrix(vectors, groups))
    with open(run.artifact("predictions.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["url", "scan_id", "predicted", "phishing_score"])
        for report, score in zip(rows, scores):
            predicted = CLASS_NAMES[1] if score > 0.5 else CLASS_NAMES[0]
            writer.writerow([report.url, report.scan_id, predicted, f"{score:.10g}"])
    run.seal()
    print(f"{len(rows)} predictions written to {run.out_dir}")
    return EXIT_OK


def _cmd_classify_ablate(args) -> int:
    params = {"split": args.split, "clusters": args.clusters}
    run = _Run("classify-ablate", Path(args.out), args.seed, params, args.format)
    vectors, labels, _, cluster_model = _prepare_classifier_inputs(run, args)
    reports = ablation(
        vectors,
        labels,
        seed=args.seed,
        split=args.split,
        cluster_model=cluster_model,
        threads=args.threads,
        n_estimators=args.trees,
    )
    write_eval_csv(reports, run.artifact("ablation.csv"))
    run.seal()
    for name, _ in ABLATION_ROWS:
        print(f"{name}: accuracy {reports[name].accuracy:.4f}")
    return EXIT_OK


def _cmd_classify_trend(args) -> int:
    run = _Run("classify-trend", Path(args.out), None, {}, args.format)
    model = load_forest(run.add_input(args.model))
    if model.cluster_model is None:
        raise ModelFormatError("model file lacks a scanner cluster model")
    reports, _, _ = _load_feed(run, args.feed)
    hosting = HostingCache.from_csv(run.add_input(args.hosting_cache)) if args.hosting_cache else None
    whois = WhoisCache.from_csv(run.add_input(args.whois_cache)) if args.whois_cache else None
    items = []
    for report in reports:
        if report.positives == 0:
            continue
        items.append(
            (report, extract_features(report, model.cluster_model, hosting=hosting, whois=whois))
        )
    if not items:
        raise ValueError("no reports with detections")
    trend = weekly_trend(model, items)
    write_weekly_trend_csv(trend, run.artifact("weekly_trend.csv"))
    run.seal()
    print(f"{len(trend)} weeks written to {run.out_dir}")
    return EXIT_OK


def _archetype_from_dict(raw: dict) -> ScannerArchetype:
    known = {
        "name", "kind", "group", "label", "labels", "period_days", "copies",
        "lag_days", "attack", "recall", "precision", "onset_min", "onset_max",
        "duration_days", "dropout_hazard",
    }
    unknown = set(raw) - known
    if unknown:
        raise _ConfigError(f"unknown archetype fields: {sorted(unknown)}")
    if "labels" in raw:
        raw = dict(raw, labels=tuple(raw["labels"]))
    return ScannerArchetype(**raw)


def _scenario_from_file(path: Path, seed_override: int | None) -> ScenarioConfig | ClassifierCorpusConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    seed = seed_override if seed_override is not None else raw.get("seed", 0)
    if "preset" in raw:
        return preset_config(raw["preset"], seed)
    if raw.get("kind") == "classifier":
        fields = {k: v for k, v in raw.items() if k not in ("kind", "seed")}
        return ClassifierCorpusConfig(seed=seed, **fields)
    try:
        return ScenarioConfig(
            name=raw["name"],
            n_urls={str(k): int(v) for k, v in raw["n_urls"].items()},
            horizon_days=int(raw["horizon_days"]),
            archetypes=tuple(_archetype_from_dict(a) for a in raw["archetypes"]),
            seed=seed,
            noise=float(raw.get("noise", 0.0)),
            stale_fraction=float(raw.get("stale_fraction", 0.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise _ConfigError(f"bad scenario file {path}: {exc}") from None


def _cmd_synth(args) -> int:
    if bool(args.preset) == bool(args.scenario):
        raise _ConfigError("specify exactly one of --preset or --scenario")
    if args.preset:
        try:
            config = preset_config(args.preset, args.seed)
        except ValueError as exc:
            raise _ConfigError(str(exc)) from None
        params = {"preset": args.preset}
    else:
        config = _scenario_from_file(Path(args.scenario), args.seed)
        params = {"scenario": Path(args.scenario).name}
    run = _Run("synth", Path(args.out), args.seed, params, args.format)
    if args.scenario:
        run.add_input(args.scenario)

    if isinstance(config, ClassifierCorpusConfig):
        corpus = generate_classifier_corpus(config)
        write_feed(corpus.reports, run.artifact("feed.jsonl"))
        write_ground_truth(corpus.truth, run.artifact("truth.csv"))
        with open(run.artifact("hosting_cache.csv"), "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["url", "ip_count", "asn_count", "asn", "country"])
            writer.writeheader()
            writer.writerows(corpus.hosting_rows)
        with open(run.artifact("whois_cache.csv"), "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["domain", "created", "expires", "registrar"])
            writer.writeheader()
            writer.writerows(corpus.whois_rows)
        manifest = corpus.manifest
        n_reports = len(corpus.reports)
    else:
        generated = generate(config)
        write_feed(generated.reports, run.artifact("feed.jsonl"))
        write_ground_truth(generated.truth, run.artifact("truth.csv"))
        manifest = generated.manifest
        n_reports = len(generated.reports)

    _write_json(manifest, run.artifact("planted.json"))
    run.seal()
    print(f"{n_reports} reports written to {run.out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument wiring
# ---------------------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="scanalytics", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, feed=True, seed=False):
        if feed:
            p.add_argument("--feed", required=True, help="line-delimited scan-report feed")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        if seed:
            p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("ingest", help="parse, dedup, and summarize a feed")
    common(p)
    p.add_argument("--strict", action="store_true", help="fail on the first malformed line")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("metrics", help="F-1 trends, certainty, label statistics")
    common(p)
    p.add_argument("--ground-truth", required=True)
    p.add_argument("--window", type=int, default=30)
    p.add_argument("--max-offset", type=int, default=30)
    p.add_argument("--export-series", action="store_true")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("correlate", help="Jaccard/DTW matrices and clustering")
    common(p)
    p.add_argument("--window", type=int, default=30)
    p.add_argument("--max-offset", type=int, default=30)
    p.add_argument("--k", type=int, default=None, help="cut dendrogram into k clusters")
    p.add_argument("--cut-height", type=float, default=None)
    p.add_argument("--planted", default=None, help="planted manifest for recovery scoring")
    p.add_argument("--heatmaps", action="store_true", help="also emit SVG heatmaps")
    p.set_defaults(func=_cmd_correlate)

    p = sub.add_parser("leadlag", help="early-detection matrix and leader ranking")
    common(p)
    p.add_argument("--window", type=int, default=None)
    p.set_defaults(func=_cmd_leadlag)

    p = sub.add_parser("classify", help="attack-type classifier")
    verbs = p.add_subparsers(dest="verb", required=True)

    pt = verbs.add_parser("train")
    common(pt, seed=True)
    pt.add_argument("--ground-truth", required=True)
    pt.add_argument("--hosting-cache", default=None)
    pt.add_argument("--whois-cache", default=None)
    pt.add_argument("--split", type=float, default=0.8)
    pt.add_argument("--clusters", type=int, default=15)
    pt.add_argument("--trees", type=int, default=200)
    pt.add_argument("--groups", nargs="+", default=list(ALL_GROUPS))
    pt.set_defaults(func=_cmd_classify_train)

    pp = verbs.add_parser("predict")
    common(pp)
    pp.add_argument("--model", required=True)
    pp.add_argument("--hosting-cache", default=None)
    pp.add_argument("--whois-cache", default=None)
    pp.set_defaults(func=_cmd_classify_predict)

    pa = verbs.add_parser("ablate")
    common(pa, seed=True)
    pa.add_argument("--ground-truth", required=True)
    pa.add_argument("--hosting-cache", default=None)
    pa.add_argument("--whois-cache", default=None)
    pa.add_argument("--split", type=float, default=0.8)
    pa.add_argument("--clusters", type=int, default=15)
    pa.add_argument("--trees", type=int, default=200)
    pa.set_defaults(func=_cmd_classify_ablate)

    pr = verbs.add_parser("trend")
    common(pr)
    pr.add_argument("--model", required=True)
    pr.add_argument("--hosting-cache", default=None)
    pr.add_argument("--whois-cache", default=None)
    pr.set_defaults(func=_cmd_classify_trend)

    p = sub.add_parser("synth", help="generate a synthetic feed")
    common(p, feed=False, seed=True)
    p.add_argument("--preset", default=None)
    p.add_argument("--scenario", default=None, help="scenario config JSON")
    p.set_defaults(func=_cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _ConfigError as exc:
        print(f'ERROR code={EXIT_CONFIG} kind=config msg="{exc}"', file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except _ConfigError as exc:
        print(f'ERROR code={EXIT_CONFIG} kind=config msg="{exc}"', file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, FeedFormatError, GroundTruthConflictError, ModelFormatError) as exc:
        print(f'ERROR code={EXIT_INPUT} kind=input msg="{exc}"', file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, ArithmeticError) as exc:
        print(f'ERROR code={EXIT_COMPUTE} kind=compute msg="{exc}"', file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
