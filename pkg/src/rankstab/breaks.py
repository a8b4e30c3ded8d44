"""Jenks natural-breaks clustering of one-dimensional values.

Exact O(k n^2) dynamic programming over contiguous partitions of the
sorted values, minimizing the within-cluster sum of squares (WSS). At the
scales this library clusters (tens of model AUCs per period) exactness is
cheap, and it makes the optimizer directly testable against exhaustive
search.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class BreaksResult:
    k: int
    boundaries: list = field(default_factory=list)  # k-1 ascending cut values
    assignment: list = field(default_factory=list)  # cluster index per input value
    wss: float = 0.0


def _prefix_sums(sorted_values: np.ndarray):
    c1 = np.concatenate([[0.0], np.cumsum(sorted_values)])
    c2 = np.concatenate([[0.0], np.cumsum(sorted_values * sorted_values)])
    return c1, c2


def _segment_wss(c1, c2, a, b):
    """WSS of the half-open sorted slice [a, b); a may be an array."""
    count = b - a
    s1 = c1[b] - c1[a]
    s2 = c2[b] - c2[a]
    return np.maximum(0.0, s2 - s1 * s1 / count)


def _dp_tables(sorted_values: np.ndarray, k_max: int):
    """cost[c][i]: optimal WSS of the first i values in c clusters; cut[c][i]: last cut."""
    n = sorted_values.size
    c1, c2 = _prefix_sums(sorted_values)
    cost = np.full((k_max + 1, n + 1), np.inf)
    cut = np.zeros((k_max + 1, n + 1), dtype=np.int64)
    ends = np.arange(n + 1)
    cost[1][1:] = _segment_wss(c1, c2, 0, ends[1:])
    for c in range(2, k_max + 1):
        for i in range(c, n + 1):
            starts = np.arange(c - 1, i)
            candidates = cost[c - 1][starts] + _segment_wss(c1, c2, starts, i)
            # ties prefer the latest cut: boundary-tied values join the lower cluster
            best = len(candidates) - 1 - int(np.argmin(candidates[::-1]))
            cost[c][i] = candidates[best]
            cut[c][i] = starts[best]
    return cost, cut


def jenks_breaks(values, k: int) -> BreaksResult:
    """Optimal contiguous partition of the sorted values into k clusters.

    Boundaries are the maxima of the lower k-1 clusters. The assignment
    vector is indexed like the input. Among WSS-equal cuts the one
    putting more values into the lower cluster wins, so values tied with
    a boundary land in the lower cluster.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    if k < 1 or k > n:
        raise ValueError(f"k must be in 1..{n}, got {k}")
    order = np.argsort(values, kind="stable")
    sorted_values = values[order]
    cost, cut = _dp_tables(sorted_values, k)

    edges = [n]
    for c in range(k, 1, -1):
        edges.append(int(cut[c][edges[-1]]))
    edges.append(0)
    edges.reverse()

    sorted_assignment = np.empty(n, dtype=np.int64)
    for cluster, (a, b) in enumerate(zip(edges, edges[1:])):
        sorted_assignment[a:b] = cluster
    assignment = np.empty(n, dtype=np.int64)
    assignment[order] = sorted_assignment

    boundaries = [float(sorted_values[e - 1]) for e in edges[1:-1]]
    return BreaksResult(
        k=k,
        boundaries=boundaries,
        assignment=assignment.tolist(),
        wss=float(cost[k][n]),
    )


def wss(values, assignment) -> float:
    """Within-cluster sum of squared deviations from each cluster mean."""
    values = np.asarray(values, dtype=float)
    assignment = np.asarray(assignment)
    if values.shape != assignment.shape:
        raise ValueError("values and assignment must have the same length")
    if assignment.size and assignment.min() < 0:
        raise ValueError("cluster index out of range")
    total = 0.0
    for cluster in np.unique(assignment):
        members = values[assignment == cluster]
        total += float(((members - members.mean()) ** 2).sum())
    return total


def elbow_scan(values, k_max: int) -> list:
    """(k, optimal WSS) for k = 1..k_max, for plotting an elbow curve."""
    values = np.asarray(values, dtype=float)
    n = values.size
    if k_max < 1 or k_max > n:
        raise ValueError(f"k_max must be in 1..{n}, got {k_max}")
    sorted_values = np.sort(values)
    cost, _ = _dp_tables(sorted_values, k_max)
    return [(k, float(cost[k][n])) for k in range(1, k_max + 1)]


def rank_clusters_by_performance(breaks: BreaksResult, values) -> list:
    """1-based rank per cluster index, ordered by descending cluster median."""
    values = np.asarray(values, dtype=float)
    assignment = np.asarray(breaks.assignment)
    medians = [
        float(np.median(values[assignment == cluster])) for cluster in range(breaks.k)
    ]
    by_median = sorted(range(breaks.k), key=lambda c: (-medians[c], c))
    ranks = [0] * breaks.k
    for position, cluster in enumerate(by_median):
        ranks[cluster] = position + 1
    return ranks
