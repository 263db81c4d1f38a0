"""Lead/lag analysis: who detects co-detected URLs first.

First-detection times come from the daily series (day granularity), so
same-day detections cannot be ordered and credit neither scanner.
"""

from __future__ import annotations

import csv
import math
from typing import Sequence

import numpy as np

from .correlate import MISSING_MARK, SimilarityMatrix
from .series import SeriesMap

__all__ = [
    "first_detection_index",
    "early_detection_matrix",
    "leader_ranking",
    "write_ranking_csv",
]


def first_detection_index(
    series: SeriesMap, window: int | None = None
) -> dict[tuple[str, str], int]:
    """Map (scanner, url) to the first day offset with a detection.

    Pairs with no detecting day inside the window are absent.
    """
    index: dict[tuple[str, str], int] = {}
    for key, ts in series.items():
        for point in ts.points:
            if window is not None and point.day_offset >= window:
                break
            if point.bl == 1:
                index[key] = point.day_offset
                break
    return index


def early_detection_matrix(
    index: dict[tuple[str, str], int],
    scanners: Sequence[str] | None = None,
) -> SimilarityMatrix:
    """value(i, j) = fraction of co-detected URLs that i detected strictly
    before j. Same-day first detections count for neither direction; pairs
    with no co-detected URL are NaN. The diagonal is 0 by convention.
    """
    by_scanner: dict[str, dict[str, int]] = {}
    for (scanner, url), day in index.items():
        by_scanner.setdefault(scanner, {})[url] = day
    order = tuple(scanners) if scanners is not None else tuple(sorted(by_scanner))

    n = len(order)
    values = np.full((n, n), np.nan)
    np.fill_diagonal(values, 0.0)
    for i, a in enumerate(order):
        fa = by_scanner.get(a, {})
        for j in range(i + 1, n):
            fb = by_scanner.get(order[j], {})
            shared = fa.keys() & fb.keys()
            if not shared:
                continue
            a_first = sum(1 for url in shared if fa[url] < fb[url])
            b_first = sum(1 for url in shared if fb[url] < fa[url])
            values[i, j] = a_first / len(shared)
            values[j, i] = b_first / len(shared)
    return SimilarityMatrix(scanners=order, values=values, kind="early_ratio")


def leader_ranking(matrix: SimilarityMatrix) -> list[tuple[str, float]]:
    """Scanners ordered by mean finite off-diagonal row value, descending.

    Scanners whose row is entirely NaN rank last (reported as NaN); ties
    break by name.
    """
    if matrix.kind != "early_ratio":
        raise ValueError("leader_ranking expects an early_ratio matrix")
    rows: list[tuple[str, float]] = []
    n = len(matrix.scanners)
    for i, scanner in enumerate(matrix.scanners):
        finite = [matrix.values[i, j] for j in range(n) if j != i and math.isfinite(matrix.values[i, j])]
        mean = sum(finite) / len(finite) if finite else math.nan
        rows.append((scanner, mean))
    return sorted(rows, key=lambda item: (math.isnan(item[1]), -(item[1] if not math.isnan(item[1]) else 0.0), item[0]))


def write_ranking_csv(ranking: list[tuple[str, float]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "scanner", "mean_early_ratio"])
        for rank, (scanner, mean) in enumerate(ranking, start=1):
            text = MISSING_MARK if math.isnan(mean) else f"{mean:.10g}"
            writer.writerow([rank, scanner, text])
