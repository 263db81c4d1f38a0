"""Bagged decision forest for binary attack-type classification.

Trees use axis-aligned splits chosen by Gini impurity over candidate
thresholds at midpoints of adjacent distinct feature values. Tree t draws its
bootstrap sample and split-feature subsets from a generator seeded with
(seed + t), so training is reproducible at any parallelism level. Prediction
is the majority over tree votes; the score is the vote fraction for class 1.

Models persist to a versioned JSON file carrying hyperparameters, the
feature-name manifest, the scanner cluster model, and every tree; loading
with a mismatched feature manifest is a fatal error.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .factors import ScannerClusterModel

__all__ = [
    "DecisionTree",
    "ForestModel",
    "ModelFormatError",
    "train_forest_model",
    "save_forest",
    "load_forest",
    "DEFAULT_HYPERPARAMETERS",
]

DEFAULT_HYPERPARAMETERS = {"n_estimators": 200, "max_depth": 250, "max_features": 55}

MODEL_FORMAT = "scanalytics-forest"
MODEL_FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Model file is unreadable or does not match the expected manifest."""


@dataclass(frozen=True)
class DecisionTree:
    feature: np.ndarray  # int32; -1 marks a leaf
    threshold: np.ndarray  # float64; split sends x <= threshold left
    left: np.ndarray  # int32 child ids
    right: np.ndarray
    value: np.ndarray  # int8 majority class per node

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int32)
        pending = np.flatnonzero(self.feature[node] >= 0)
        while pending.size:
            f = self.feature[node[pending]]
            go_left = X[pending, f] <= self.threshold[node[pending]]
            node[pending] = np.where(
                go_left, self.left[node[pending]], self.right[node[pending]]
            )
            pending = pending[self.feature[node[pending]] >= 0]
        return self.value[node]


def _gini(counts: np.ndarray, total: int) -> float:
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - np.sum(p * p))


def _build_tree(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: int,
    max_features: int,
    rng: np.random.Generator,
) -> DecisionTree:
    n_features = X.shape[1]
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[int] = []

    def new_node(majority: int) -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(majority)
        return len(feature) - 1

    def majority_class(labels: np.ndarray) -> int:
        ones = int(labels.sum())
        zeros = len(labels) - ones
        return 1 if ones > zeros else 0

    root = new_node(majority_class(y))
    stack: list[tuple[np.ndarray, int, int]] = [(np.arange(len(y)), 0, root)]
    while stack:
        idx, depth, node_id = stack.pop()
        labels = y[idx]
        n = len(idx)
        ones = int(labels.sum())
        if n < 2 or ones == 0 or ones == n or depth >= max_depth:
            continue
        node_gini = _gini(np.array([n - ones, ones]), n)

        if max_features < n_features:
            candidates = np.sort(rng.choice(n_features, size=max_features, replace=False))
        else:
            candidates = np.arange(n_features)
        Xc = X[np.ix_(idx, candidates)]

        order = np.argsort(Xc, axis=0, kind="stable")
        x_sorted = np.take_along_axis(Xc, order, axis=0)
        y_sorted = labels[order]
        pos_prefix = np.cumsum(y_sorted, axis=0)
        total_pos = pos_prefix[-1]

        left_n = np.arange(1, n, dtype=float)[:, None]
        right_n = n - left_n
        left_pos = pos_prefix[:-1]
        right_pos = total_pos[None, :] - left_pos
        left_p = left_pos / left_n
        right_p = right_pos / right_n
        gini_left = 1.0 - left_p**2 - (1.0 - left_p) ** 2
        gini_right = 1.0 - right_p**2 - (1.0 - right_p) ** 2
        weighted = (left_n * gini_left + right_n * gini_right) / n
        valid = x_sorted[1:] > x_sorted[:-1]
        weighted = np.where(valid, weighted, np.inf)

        flat = int(np.argmin(weighted))
        best = weighted.flat[flat]
        if not np.isfinite(best) or best >= node_gini - 1e-12:
            continue
        split_row, feat_col = divmod(flat, weighted.shape[1])
        x_lo = x_sorted[split_row, feat_col]
        x_hi = x_sorted[split_row + 1, feat_col]
        thr = (x_lo + x_hi) / 2.0
        if thr >= x_hi:  # midpoint rounded up between adjacent floats
            thr = x_lo
        feat = int(candidates[feat_col])

        go_left = X[idx, feat] <= thr
        left_idx = idx[go_left]
        right_idx = idx[~go_left]

        feature[node_id] = feat
        threshold[node_id] = float(thr)
        left_id = new_node(majority_class(y[left_idx]))
        right_id = new_node(majority_class(y[right_idx]))
        left[node_id] = left_id
        right[node_id] = right_id
        stack.append((left_idx, depth + 1, left_id))
        stack.append((right_idx, depth + 1, right_id))

    return DecisionTree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        value=np.asarray(value, dtype=np.int8),
    )


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[DecisionTree, ...]
    n_estimators: int
    max_depth: int
    max_features: int
    seed: int
    feature_names: tuple[str, ...]
    classes: tuple[str, str]
    cluster_model: ScannerClusterModel | None = None

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Fraction of trees voting class 1, in multiples of 1/n_estimators."""
        X = np.asarray(X, dtype=float)
        if X.shape[1] != len(self.feature_names):
            raise ModelFormatError(
                f"feature count mismatch: model has {len(self.feature_names)}, input has {X.shape[1]}"
            )
        votes = np.zeros(len(X))
        for tree in self.trees:
            votes += tree.predict(X)
        return votes / len(self.trees)

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Majority vote; exact ties fall to class 0."""
        return (self.predict_proba(X) > 0.5).astype(np.int8)


def train_forest_model(
    X: np.ndarray,
    y: np.ndarray,
    feature_names: Sequence[str],
    seed: int,
    n_estimators: int = DEFAULT_HYPERPARAMETERS["n_estimators"],
    max_depth: int = DEFAULT_HYPERPARAMETERS["max_depth"],
    max_features: int = DEFAULT_HYPERPARAMETERS["max_features"],
    classes: tuple[str, str] = ("malware", "phishing"),
    cluster_model: ScannerClusterModel | None = None,
    threads: int = 1,
) -> ForestModel:
    """Train bagged Gini trees. Output is identical for any `threads` value."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int8)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be 2-D with one label per row")
    if set(np.unique(y)) - {0, 1}:
        raise ValueError("labels must be 0/1")
    if len(feature_names) != X.shape[1]:
        raise ValueError("feature_names length must match X columns")
    effective_features = min(max_features, X.shape[1])

    def train_one(t: int) -> DecisionTree:
        rng = np.random.default_rng(seed + t)
        boot = rng.integers(0, len(y), len(y))
        return _build_tree(X[boot], y[boot], max_depth, effective_features, rng)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trees = tuple(pool.map(train_one, range(n_estimators)))
    else:
        trees = tuple(train_one(t) for t in range(n_estimators))

    return ForestModel(
        trees=trees,
        n_estimators=n_estimators,
        max_depth=max_depth,
        max_features=max_features,
        seed=seed,
        feature_names=tuple(feature_names),
        classes=classes,
        cluster_model=cluster_model,
    )


def save_forest(model: ForestModel, path) -> None:
    payload = {
        "format": MODEL_FORMAT,
        "format_version": MODEL_FORMAT_VERSION,
        "hyperparameters": {
            "n_estimators": model.n_estimators,
            "max_depth": model.max_depth,
            "max_features": model.max_features,
        },
        "seed": model.seed,
        "classes": list(model.classes),
        "feature_names": list(model.feature_names),
        "cluster_model": model.cluster_model.to_dict() if model.cluster_model else None,
        "trees": [
            {
                "feature": tree.feature.tolist(),
                "threshold": tree.threshold.tolist(),
                "left": tree.left.tolist(),
                "right": tree.right.tolist(),
                "value": tree.value.tolist(),
            }
            for tree in model.trees
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)


def load_forest(path, expect_features: Sequence[str] | None = None) -> ForestModel:
    """Load a saved model; a feature-manifest mismatch is fatal."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != MODEL_FORMAT or payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"unrecognized model file format in {path}")
    feature_names = tuple(payload["feature_names"])
    if expect_features is not None and tuple(expect_features) != feature_names:
        raise ModelFormatError(
            "feature manifest mismatch: model was trained with "
            f"{len(feature_names)} features, expected {len(tuple(expect_features))}"
        )
    trees = tuple(
        DecisionTree(
            feature=np.asarray(raw["feature"], dtype=np.int32),
            threshold=np.asarray(raw["threshold"], dtype=np.float64),
            left=np.asarray(raw["left"], dtype=np.int32),
            right=np.asarray(raw["right"], dtype=np.int32),
            value=np.asarray(raw["value"], dtype=np.int8),
        )
        for raw in payload["trees"]
    )
    hp = payload["hyperparameters"]
    cluster_raw = payload.get("cluster_model")
    return ForestModel(
        trees=trees,
        n_estimators=int(hp["n_estimators"]),
        max_depth=int(hp["max_depth"]),
        max_features=int(hp["max_features"]),
        seed=int(payload["seed"]),
        feature_names=feature_names,
        classes=tuple(payload["classes"]),
        cluster_model=ScannerClusterModel.from_dict(cluster_raw) if cluster_raw else None,
    )
