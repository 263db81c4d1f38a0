"""Pairwise scanner correlation: Jaccard matrices, DTW distance, clustering.

Matrix conventions: values are dense numpy arrays indexed by the scanner
order stored on the matrix; undefined pairs hold NaN and are written out with
the "xxx" sentinel. Jaccard matrices are symmetric with a special-cased
diagonal of 1 for scanners that detected at least one URL. DTW matrices are
symmetric with zero diagonal. All reductions run in a fixed order, so results
are identical regardless of parallelism.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

from .feed import DetailedLabel
from .series import LabelTimeSeries, SeriesMap

__all__ = [
    "MatrixKind",
    "SimilarityMatrix",
    "Dendrogram",
    "ClusterResult",
    "jaccard_binary",
    "jaccard_detailed",
    "frobenius_norm",
    "frobenius_trend",
    "dtw_distance",
    "scanner_dtw_matrix",
    "hierarchical_cluster",
    "adjusted_rand_index",
    "write_matrix_csv",
    "write_trend_csv",
    "write_heatmap_svg",
]

MatrixKind = Literal["jaccard_binary", "jaccard_detailed", "dtw_distance", "early_ratio"]

MISSING_MARK = "xxx"


@dataclass(frozen=True)
class SimilarityMatrix:
    scanners: tuple[str, ...]
    values: np.ndarray  # square, NaN marks undefined pairs
    kind: MatrixKind

    def __post_init__(self) -> None:
        n = len(self.scanners)
        if self.values.shape != (n, n):
            raise ValueError("matrix shape does not match scanner list")
        self.values.setflags(write=False)

    def index(self, scanner: str) -> int:
        return self.scanners.index(scanner)

    def value(self, a: str, b: str) -> float:
        return float(self.values[self.index(a), self.index(b)])


def _scanner_order(series: SeriesMap, scanners: Sequence[str] | None) -> tuple[str, ...]:
    if scanners is not None:
        return tuple(scanners)
    return tuple(sorted({scanner for scanner, _ in series}))


def _detected_urls(
    series: SeriesMap, universe: set[str], window: int | None, offset: int | None
) -> dict[str, set[str]]:
    """URLs each scanner detected, pooled over the window or at one offset."""
    detected: dict[str, set[str]] = {}
    for (scanner, url), ts in series.items():
        if url not in universe:
            continue
        if offset is not None:
            point = ts.at(offset)
            hit = point is not None and point.bl == 1
        else:
            hit = any(
                p.bl == 1 and (window is None or p.day_offset < window) for p in ts.points
            )
        if hit:
            detected.setdefault(scanner, set()).add(url)
    return detected


def jaccard_binary(
    series: SeriesMap,
    universe: set[str],
    window: int | None = None,
    offset: int | None = None,
    scanners: Sequence[str] | None = None,
) -> SimilarityMatrix:
    """Co-detection similarity: |detected_i ∩ detected_j| / |universe|.

    Pooled over the window by default; pass `offset` for the single-day
    variant. The diagonal is 1 for scanners with at least one detection.
    """
    if not universe:
        raise ValueError("universe must be non-empty")
    order = _scanner_order(series, scanners)
    detected = _detected_urls(series, universe, window, offset)
    n = len(order)
    values = np.zeros((n, n))
    total = len(universe)
    for i, a in enumerate(order):
        da = detected.get(a, set())
        values[i, i] = 1.0 if da else 0.0
        for j in range(i + 1, n):
            db = detected.get(order[j], set())
            v = len(da & db) / total
            values[i, j] = v
            values[j, i] = v
    return SimilarityMatrix(scanners=order, values=values, kind="jaccard_binary")


def _modal_detecting_label(ts, window: int | None) -> DetailedLabel | None:
    """The scanner's most common detecting label for the URL in the window."""
    counts: dict[DetailedLabel, int] = {}
    for p in ts.points:
        if window is not None and p.day_offset >= window:
            continue
        if p.bl == 1:
            counts[p.dl] = counts.get(p.dl, 0) + 1
    if not counts:
        return None
    return min(counts, key=lambda lab: (-counts[lab], int(lab)))


def jaccard_detailed(
    series: SeriesMap,
    universe: set[str],
    window: int | None = None,
    offset: int | None = None,
    scanners: Sequence[str] | None = None,
) -> SimilarityMatrix:
    """Label-agreement similarity: co-detected URLs with equal modal labels
    over |universe|. The single-day variant compares that day's labels."""
    if not universe:
        raise ValueError("universe must be non-empty")
    order = _scanner_order(series, scanners)

    labels: dict[str, dict[str, DetailedLabel]] = {}
    for (scanner, url), ts in series.items():
        if url not in universe:
            continue
        if offset is not None:
            point = ts.at(offset)
            label = point.dl if point is not None and point.bl == 1 else None
        else:
            label = _modal_detecting_label(ts, window)
        if label is not None:
            labels.setdefault(scanner, {})[url] = label

    n = len(order)
    values = np.zeros((n, n))
    total = len(universe)
    for i, a in enumerate(order):
        la = labels.get(a, {})
        values[i, i] = 1.0 if la else 0.0
        for j in range(i + 1, n):
            lb = labels.get(order[j], {})
            same = sum(1 for url, lab in la.items() if lb.get(url) is lab)
            v = same / total
            values[i, j] = v
            values[j, i] = v
    return SimilarityMatrix(scanners=order, values=values, kind="jaccard_detailed")


def frobenius_norm(matrix: SimilarityMatrix) -> float:
    """Square root of the sum of squared off-diagonal entries (NaN-safe)."""
    values = matrix.values.copy()
    np.fill_diagonal(values, 0.0)
    finite = np.nan_to_num(values, nan=0.0)
    return float(math.sqrt(np.sum(finite * finite)))


def frobenius_trend(
    series: SeriesMap,
    universe: set[str],
    offsets: Iterable[int],
    detailed: bool = False,
    scanners: Sequence[str] | None = None,
) -> list[tuple[int, float]]:
    """Per-day matrix norm over a range of offsets; diagonal excluded."""
    build = jaccard_detailed if detailed else jaccard_binary
    out = []
    for offset in offsets:
        matrix = build(series, universe, offset=offset, scanners=scanners)
        out.append((offset, frobenius_norm(matrix)))
    return out


def dtw_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """Dynamic-time-warping distance with absolute-difference local cost.

    Full |a|x|b| grid, no band constraint, no path-length normalization.
    """
    if not len(a) or not len(b):
        raise ValueError("dtw_distance requires non-empty sequences")
    n, m = len(a), len(b)
    inf = math.inf
    prev = [inf] * (m + 1)
    prev[0] = 0.0
    for i in range(1, n + 1):
        ai = a[i - 1]
        cur = [inf] * (m + 1)
        for j in range(1, m + 1):
            cost = abs(ai - b[j - 1])
            best = prev[j - 1]
            if prev[j] < best:
                best = prev[j]
            if cur[j - 1] < best:
                best = cur[j - 1]
            cur[j] = cost + best
        prev = cur
    return prev[m]


def _aligned_pair(ts_a, ts_b, window: int | None) -> tuple[list[int], list[int]]:
    """Both scanners' binary labels over the union of their observed days.

    Absent days take the scanner's last observed value; days before its
    first observation take 0.
    """
    def observed(ts):
        return [
            (p.day_offset, p.bl)
            for p in ts.points
            if window is None or p.day_offset < window
        ]

    obs_a = observed(ts_a)
    obs_b = observed(ts_b)
    days = sorted({d for d, _ in obs_a} | {d for d, _ in obs_b})

    def fill(obs):
        values = []
        idx = 0
        last = 0
        for day in days:
            while idx < len(obs) and obs[idx][0] <= day:
                last = obs[idx][1]
                idx += 1
            values.append(last)
        return values

    return fill(obs_a), fill(obs_b)


def scanner_dtw_matrix(
    series: SeriesMap,
    window: int | None = None,
    scanners: Sequence[str] | None = None,
) -> SimilarityMatrix:
    """Mean DTW distance between two scanners' label trends on co-detected URLs.

    A URL counts for a pair when both scanners detect it inside the window;
    pairs with no co-detected URL get NaN. URLs where both aligned sequences
    are all-zero are skipped.
    """
    order = _scanner_order(series, scanners)
    by_scanner: dict[str, dict[str, LabelTimeSeries]] = {}
    detects: dict[str, set[str]] = {}
    for (scanner, url), ts in series.items():
        by_scanner.setdefault(scanner, {})[url] = ts
        if any(p.bl == 1 and (window is None or p.day_offset < window) for p in ts.points):
            detects.setdefault(scanner, set()).add(url)

    n = len(order)
    values = np.full((n, n), np.nan)
    np.fill_diagonal(values, 0.0)
    for i in range(n):
        for j in range(i + 1, n):
            a, b = order[i], order[j]
            shared = detects.get(a, set()) & detects.get(b, set())
            total = 0.0
            count = 0
            for url in sorted(shared):
                seq_a, seq_b = _aligned_pair(by_scanner[a][url], by_scanner[b][url], window)
                if not seq_a or (not any(seq_a) and not any(seq_b)):
                    continue
                total += dtw_distance(seq_a, seq_b)
                count += 1
            if count:
                values[i, j] = values[j, i] = total / count
    return SimilarityMatrix(scanners=order, values=values, kind="dtw_distance")


@dataclass(frozen=True)
class Dendrogram:
    """Agglomerative merge tree. Leaves are numbered 0..n-1 in `leaves` order;
    merge k creates cluster id n+k. Heights are non-decreasing."""

    leaves: tuple[str, ...]
    merges: tuple[tuple[int, int, float], ...]


@dataclass(frozen=True)
class ClusterResult:
    dendrogram: Dendrogram
    assignment: dict[str, int]
    excluded: tuple[str, ...]


def hierarchical_cluster(
    matrix: SimilarityMatrix,
    cut_height: float | None = None,
    k: int | None = None,
) -> ClusterResult:
    """Average-linkage agglomerative clustering of a distance matrix.

    Scanners whose rows are entirely NaN (no finite off-diagonal entry) are
    excluded and reported. Remaining NaN pairs act as a distance strictly
    above the finite maximum, so never-co-detecting scanners merge last.
    Merge ties break lexicographically on member names. Cutting at height h
    applies merges with height < h; cutting at k applies the first n-k merges.
    """
    if (cut_height is None) == (k is None):
        raise ValueError("specify exactly one of cut_height or k")

    names = matrix.scanners
    raw = matrix.values
    n_all = len(names)
    keep = []
    excluded = []
    for i in range(n_all):
        off_diag = [raw[i, j] for j in range(n_all) if j != i]
        if any(math.isfinite(v) for v in off_diag):
            keep.append(i)
        else:
            excluded.append(names[i])
    if len(keep) < 2:
        raise ValueError("fewer than 2 clusterable scanners")

    leaves = tuple(names[i] for i in keep)
    n = len(leaves)
    sub = raw[np.ix_(keep, keep)].astype(float)
    finite_max = float(np.nanmax(np.where(np.eye(n, dtype=bool), np.nan, sub))) if n > 1 else 0.0
    if not math.isfinite(finite_max):
        finite_max = 0.0
    fill_value = finite_max + 1.0
    sub = np.where(np.isnan(sub), fill_value, sub)

    if k is not None and not (1 <= k <= n):
        raise ValueError(f"k must be in [1, {n}]")

    # Active clusters: id -> (member leaf indices, sorted member names key).
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    keys: dict[int, tuple[str, ...]] = {i: (leaves[i],) for i in range(n)}
    dist: dict[tuple[int, int], float] = {}
    for i in range(n):
        for j in range(i + 1, n):
            dist[(i, j)] = float(sub[i, j])

    merges: list[tuple[int, int, float]] = []
    next_id = n
    active = set(range(n))
    while len(active) > 1:
        best = None
        for (i, j), d in dist.items():
            pair_key = tuple(sorted((keys[i], keys[j])))
            cand = (d, pair_key, i, j)
            if best is None or cand < best:
                best = cand
        d, _, i, j = best
        a, b = (i, j) if keys[i] <= keys[j] else (j, i)
        merges.append((a, b, d))
        new_id = next_id
        next_id += 1
        members[new_id] = members[a] + members[b]
        keys[new_id] = tuple(sorted(keys[a] + keys[b]))
        size_a, size_b = len(members[a]), len(members[b])
        active.discard(a)
        active.discard(b)
        for other in list(active):
            da = dist.pop((min(a, other), max(a, other)))
            db = dist.pop((min(b, other), max(b, other)))
            dist[(min(new_id, other), max(new_id, other))] = (
                size_a * da + size_b * db
            ) / (size_a + size_b)
        dist = {key: v for key, v in dist.items() if a not in key and b not in key}
        active.add(new_id)

    dendrogram = Dendrogram(leaves=leaves, merges=tuple(merges))

    if k is not None:
        n_applied = n - k
    else:
        n_applied = sum(1 for _, _, h in merges if h < cut_height)

    # Replay the first n_applied merges to get flat clusters.
    parent: dict[int, int] = {}
    for idx, (a, b, _) in enumerate(merges[:n_applied]):
        parent[a] = parent[b] = n + idx

    def root(node: int) -> int:
        while node in parent:
            node = parent[node]
        return node

    groups: dict[int, list[str]] = {}
    for leaf_idx, name in enumerate(leaves):
        groups.setdefault(root(leaf_idx), []).append(name)
    ordered = sorted(groups.values(), key=lambda g: min(g))
    assignment = {name: cid for cid, group in enumerate(ordered) for name in group}
    return ClusterResult(dendrogram=dendrogram, assignment=assignment, excluded=tuple(excluded))


def adjusted_rand_index(a: dict[str, int], b: dict[str, int]) -> float:
    """Chance-corrected agreement between two labelings of the same keys."""
    if set(a) != set(b):
        raise ValueError("labelings must cover the same keys")
    keys = sorted(a)
    pairs: dict[tuple[int, int], int] = {}
    count_a: dict[int, int] = {}
    count_b: dict[int, int] = {}
    for key in keys:
        pairs[(a[key], b[key])] = pairs.get((a[key], b[key]), 0) + 1
        count_a[a[key]] = count_a.get(a[key], 0) + 1
        count_b[b[key]] = count_b.get(b[key], 0) + 1

    def comb2(x: int) -> int:
        return x * (x - 1) // 2

    n = len(keys)
    sum_pairs = sum(comb2(v) for v in pairs.values())
    sum_a = sum(comb2(v) for v in count_a.values())
    sum_b = sum(comb2(v) for v in count_b.values())
    expected = sum_a * sum_b / comb2(n) if comb2(n) else 0.0
    max_index = (sum_a + sum_b) / 2
    if max_index == expected:
        return 1.0
    return (sum_pairs - expected) / (max_index - expected)


def write_matrix_csv(matrix: SimilarityMatrix, path) -> None:
    """Long-format emitter: scanner_a,scanner_b,value,kind with xxx for NaN."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scanner_a", "scanner_b", "value", "kind"])
        for i, a in enumerate(matrix.scanners):
            for j, b in enumerate(matrix.scanners):
                v = matrix.values[i, j]
                text = MISSING_MARK if math.isnan(v) else f"{v:.10g}"
                writer.writerow([a, b, text, matrix.kind])


def write_trend_csv(trend: list[tuple[int, float]], path, kind: str = "jaccard_binary") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["offset", "norm", "kind"])
        for offset, norm in trend:
            writer.writerow([offset, f"{norm:.10g}", kind])


def write_heatmap_svg(matrix: SimilarityMatrix, path, cell: int = 14) -> None:
    """Minimal grayscale heatmap; NaN cells are hatched light gray."""
    n = len(matrix.scanners)
    finite = matrix.values[np.isfinite(matrix.values)]
    vmax = float(finite.max()) if finite.size else 1.0
    vmax = vmax if vmax > 0 else 1.0
    margin = 4
    size = n * cell + 2 * margin
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">',
        f'<title>{matrix.kind}</title>',
    ]
    for i in range(n):
        for j in range(n):
            x = margin + j * cell
            y = margin + i * cell
            v = matrix.values[i, j]
            if math.isnan(v):
                fill = "#dddddd"
            else:
                shade = int(round(255 * (1 - min(v / vmax, 1.0))))
                fill = f"#{shade:02x}{shade:02x}ff"
            parts.append(
                f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{fill}">'
                f"<title>{matrix.scanners[i]} / {matrix.scanners[j]}</title></rect>"
            )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts))
