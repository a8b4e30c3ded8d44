"""Scoring (AUC, MSE) and rank-agreement measures.

The agreement measures operate on feature rankings (1 = most important,
fractional average ranks on ties) and importance-score vectors. Kendall's
W is evaluated in exact rational arithmetic whenever the ranks are
half-integral (always true for average ranks), so identical rankings give
W == 1.0 exactly rather than within a few ulps.
"""

from __future__ import annotations

import enum
import math
from fractions import Fraction

import numpy as np


class AgreementLabel(enum.Enum):
    """Interpretation schema for agreement values: Weak <= 0.3 < Moderate <= 0.6 < Strong."""

    WEAK = "Weak"
    MODERATE = "Moderate"
    STRONG = "Strong"

    def __str__(self) -> str:
        return self.value


def agreement_label(value: float) -> AgreementLabel:
    """Classify an agreement value; negative values count as Weak."""
    if value <= 0.3:
        return AgreementLabel.WEAK
    if value <= 0.6:
        return AgreementLabel.MODERATE
    return AgreementLabel.STRONG


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with tied values receiving the average of their positions."""
    values = np.asarray(values)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=float)
    pos = 0
    while pos < len(order):
        end = pos
        while end < len(order) and values[order[end]] == values[order[pos]]:
            end += 1
        ranks[order[pos:end]] = (pos + 1 + end) / 2.0
        pos = end
    return ranks


def auc(labels, scores) -> float:
    """Area under the ROC curve by pair counting.

    Equals the probability that a uniformly random positive instance
    receives a higher score than a uniformly random negative one, with
    tied scores counting one half.
    """
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=float)
    if labels.shape != scores.shape:
        raise ValueError("labels and scores must have the same length")
    if labels.size and not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be binary (0/1)")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one instance of each class")
    ranks = _average_ranks(scores)
    rank_sum = float(ranks[labels == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def mse(probabilities, labels) -> float:
    """Mean squared error between predicted probabilities and 0/1 outcomes."""
    probabilities = np.asarray(probabilities, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if probabilities.shape != labels.shape:
        raise ValueError("probabilities and labels must have the same length")
    diff = probabilities - labels
    return float(np.mean(diff * diff)) if diff.size else 0.0


def _as_rank_vector(ranking) -> np.ndarray:
    return np.asarray(getattr(ranking, "rank", ranking), dtype=float)


def kendalls_tau(rank_a, rank_b) -> tuple[float, AgreementLabel]:
    """Tie-adjusted Kendall tau-b between two rankings, with its agreement label.

    Returns 0.0 when either ranking is fully tied (no orderable pairs).
    """
    a = _as_rank_vector(rank_a)
    b = _as_rank_vector(rank_b)
    if a.shape != b.shape:
        raise ValueError("rankings must have the same length")
    n = a.size
    if n < 2:
        raise ValueError("rankings must have length >= 2")
    iu, ju = np.triu_indices(n, 1)
    da = a[iu] - a[ju]
    db = b[iu] - b[ju]
    concordant = int(np.count_nonzero((da * db) > 0))
    discordant = int(np.count_nonzero((da * db) < 0))
    tied_a = int(np.count_nonzero(da == 0))
    tied_b = int(np.count_nonzero(db == 0))
    n0 = n * (n - 1) // 2
    denom = math.sqrt((n0 - tied_a) * (n0 - tied_b))
    tau = 0.0 if denom == 0 else (concordant - discordant) / denom
    return tau, agreement_label(tau)


def kendalls_w(rankings) -> float:
    """Tie-corrected Kendall coefficient of concordance among m >= 2 rankings.

    W = 12 S / (m^2 (n^3 - n) - m * sum(T)) where S is the squared
    deviation of per-feature rank sums and T the per-ranking tie term
    sum(t^3 - t). Computed exactly (rational arithmetic) when all ranks
    are half-integral. The fully degenerate case where every ranking ties
    every feature is defined as 1.0 (all rankings identical).
    """
    vectors = [_as_rank_vector(r) for r in rankings]
    if len(vectors) < 2:
        raise ValueError("kendalls_w needs at least 2 rankings")
    n = vectors[0].size
    if any(v.size != n for v in vectors):
        raise ValueError("rankings must all have the same length")
    if n < 2:
        raise ValueError("rankings must have length >= 2")
    m = len(vectors)

    doubled = [np.rint(2.0 * v) for v in vectors]
    exact = all(
        np.max(np.abs(2.0 * v - d)) <= 1e-9 for v, d in zip(vectors, doubled)
    )

    def tie_term(values) -> int:
        total = 0
        ordered = np.sort(values)
        pos = 0
        while pos < len(ordered):
            end = pos
            while end < len(ordered) and ordered[end] == ordered[pos]:
                end += 1
            t = end - pos
            total += t**3 - t
            pos = end
        return total

    ties = sum(tie_term(v) for v in vectors)
    denom_int = m * m * (n**3 - n) - m * ties
    if denom_int == 0:
        return 1.0

    if exact:
        # doubled ranks are integers; S over doubled sums is 4 * S
        sums = [int(sum(int(d[j]) for d in doubled)) for j in range(n)]
        mean = Fraction(sum(sums), n)
        s4 = sum((Fraction(r) - mean) ** 2 for r in sums)
        return float(12 * s4 / (4 * denom_int))

    sums = np.sum(np.stack(vectors), axis=0)
    s = float(np.sum((sums - sums.mean()) ** 2))
    return 12.0 * s / denom_int


def _top_k_indices(values: np.ndarray, k: int, negligible: float) -> frozenset:
    """Indices of the k largest values at or above the negligible threshold.

    Ties among equal values resolve to the lower feature index. May
    return fewer than k indices when too few features clear the
    threshold.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    eligible = [j for j in range(values.size) if values[j] >= negligible]
    eligible.sort(key=lambda j: (-values[j], j))
    return frozenset(eligible[:k])


def top_k_overlap(score_sets, k: int, negligible: float) -> float:
    """Intersection-over-union of top-K feature sets across score vectors.

    An empty union (no model considers any feature non-negligible)
    counts as full agreement: 1.0.
    """
    vectors = [np.asarray(getattr(s, "values", s), dtype=float) for s in score_sets]
    if len(vectors) < 2:
        raise ValueError("top_k_overlap needs at least 2 score sets")
    if any(v.size != vectors[0].size for v in vectors):
        raise ValueError("score sets must cover the same feature space")
    sets = [_top_k_indices(v, k, negligible) for v in vectors]
    union = frozenset().union(*sets)
    if not union:
        return 1.0
    intersection = sets[0].intersection(*sets[1:])
    return len(intersection) / len(union)
