"""Accuracy indicator, median/IQR aggregation and the rank-sum test."""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

ACC_FLOOR = 1e-6
EXACT_LIMIT = 12


def accuracy(value: float, optimum: float) -> float:
    """|value - optimum| floored at 1e-6; NaN when no optimum is known."""
    if math.isnan(value):
        raise ValueError("accuracy of NaN")
    if math.isnan(optimum):
        return float("nan")
    return max(abs(value - optimum), ACC_FLOOR)


def aggregate(values) -> tuple[float, float]:
    """Median and interquartile range with linearly interpolated quartiles."""
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        raise ValueError("aggregate of an empty list")
    q1, med, q3 = np.percentile(arr, [25, 50, 75], method="linear")
    return float(med), float(q3 - q1)


def _midranks(pooled: np.ndarray) -> np.ndarray:
    order = np.argsort(pooled, kind="mergesort")
    ranks = np.empty(len(pooled))
    sorted_vals = pooled[order]
    i = 0
    while i < len(pooled):
        j = i
        while j + 1 < len(pooled) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def rank_sum_test(a, b) -> float:
    """Two-sided Wilcoxon rank-sum (Mann-Whitney) p-value, unpaired.

    Exact permutation distribution of the rank sum when the pooled size is
    at most 12 (midranks for ties), normal approximation with tie
    correction otherwise.
    """
    a = np.asarray(list(a), dtype=float)
    b = np.asarray(list(b), dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("rank-sum test needs two non-empty samples")
    na, nb = a.size, b.size
    n = na + nb
    ranks = _midranks(np.concatenate([a, b]))
    observed = ranks[:na].sum()
    expected = na * (n + 1) / 2

    if n <= EXACT_LIMIT:
        dev = abs(observed - expected)
        hits = total = 0
        for combo in combinations(range(n), na):
            total += 1
            if abs(ranks[list(combo)].sum() - expected) >= dev - 1e-9:
                hits += 1
        return min(1.0, hits / total)

    _, counts = np.unique(ranks, return_counts=True)
    tie_term = np.sum(counts**3 - counts) / (n * (n - 1))
    var = na * nb / 12 * ((n + 1) - tie_term)
    if var <= 0:
        return 1.0
    z = (abs(observed - expected) - 0.5) / math.sqrt(var)
    z = max(z, 0.0)
    return min(1.0, math.erfc(z / math.sqrt(2)))
