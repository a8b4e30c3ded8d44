"""Oracle tests for Jenks natural-breaks clustering.

jenks_breaks is compared against exhaustive enumeration of every
contiguous partition of the sorted values for all |values| <= 12, k <= 4.
"""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rankstab.breaks import (
    elbow_scan,
    jenks_breaks,
    rank_clusters_by_performance,
    wss,
)


def segment_wss(values):
    mean = sum(values) / len(values)
    return sum((v - mean) ** 2 for v in values)


def exhaustive_best_wss(sorted_values, k):
    """Minimum WSS over every contiguous partition into k non-empty runs."""
    n = len(sorted_values)
    best = None
    for cuts in itertools.combinations(range(1, n), k - 1):
        edges = [0, *cuts, n]
        total = sum(
            segment_wss(sorted_values[a:b]) for a, b in zip(edges, edges[1:])
        )
        if best is None or total < best:
            best = total
    return best


def test_frozen_two_cluster_example():
    result = jenks_breaks([1, 2, 3, 10, 11, 12], k=2)
    assert list(result.assignment) == [0, 0, 0, 1, 1, 1]
    assert result.wss == pytest.approx(4.0, abs=1e-12)  # 2 + 2
    assert len(result.boundaries) == 1
    assert 3 <= result.boundaries[0] < 10


def test_k_equals_n_gives_singletons():
    values = [5.0, 1.0, 3.0]
    result = jenks_breaks(values, k=3)
    assert result.wss == 0.0
    assert sorted(result.assignment) == [0, 1, 2]
    # contiguity in sorted order: 1.0 -> 0, 3.0 -> 1, 5.0 -> 2
    assert list(result.assignment) == [2, 0, 1]


def test_k_one_single_cluster():
    values = [0.0, 2.0]
    result = jenks_breaks(values, k=1)
    assert list(result.assignment) == [0, 0]
    assert result.wss == pytest.approx(2.0, abs=1e-15)
    assert result.boundaries == []


def test_rejects_k_larger_than_n():
    with pytest.raises(ValueError):
        jenks_breaks([1.0, 2.0], k=3)
    with pytest.raises(ValueError):
        jenks_breaks([1.0, 2.0], k=0)


def test_matches_exhaustive_search():
    rng = np.random.default_rng(23)
    for _ in range(120):
        n = int(rng.integers(2, 13))
        values = np.round(rng.uniform(0, 1, size=n), 2)
        for k in range(1, min(4, n) + 1):
            result = jenks_breaks(values, k=k)
            expected = exhaustive_best_wss(np.sort(values).tolist(), k)
            assert result.wss == pytest.approx(expected, abs=1e-12)
            # the assignment must actually realize the reported WSS
            assert wss(values, result.assignment) == pytest.approx(
                result.wss, abs=1e-12
            )


def test_clusters_contiguous_in_sorted_order():
    rng = np.random.default_rng(29)
    for _ in range(60):
        values = rng.uniform(0, 1, size=int(rng.integers(4, 13)))
        k = int(rng.integers(2, 5))
        if k > len(values):
            continue
        result = jenks_breaks(values, k=k)
        order = np.argsort(values, kind="stable")
        labels = np.asarray(result.assignment)[order]
        assert (np.diff(labels) >= 0).all()
        assert set(labels.tolist()) == set(range(k))


def test_boundary_ties_fall_to_lower_cluster():
    # with equal optimal cuts, the tied value joins the lower cluster
    result = jenks_breaks([1.0, 2.0, 2.0, 3.0], k=2)
    realized = wss([1.0, 2.0, 2.0, 3.0], result.assignment)
    assert realized == pytest.approx(result.wss, abs=1e-12)
    labels = list(result.assignment)
    # both 2.0 values must live in the same (lower) cluster as each other
    assert labels[1] == labels[2]


def test_wss_singleton_clusters():
    assert wss([1.0, 9.0], [0, 1]) == 0.0


def test_wss_frozen_example():
    assert wss([0.0, 2.0], [0, 0]) == pytest.approx(2.0, abs=1e-15)


def test_wss_rejects_bad_assignment():
    with pytest.raises(ValueError):
        wss([1.0, 2.0], [0])
    with pytest.raises(ValueError):
        wss([1.0, 2.0], [0, -1])


def test_elbow_scan_monotone_and_ends_at_zero():
    rng = np.random.default_rng(31)
    values = rng.uniform(0, 1, size=10)
    curve = elbow_scan(values, k_max=len(values))
    assert [k for k, _ in curve] == list(range(1, 11))
    wss_values = [w for _, w in curve]
    assert all(a >= b - 1e-12 for a, b in zip(wss_values, wss_values[1:]))
    assert wss_values[-1] == pytest.approx(0.0, abs=1e-12)


def test_elbow_scan_rejects_bad_k_max():
    with pytest.raises(ValueError):
        elbow_scan([1.0, 2.0], k_max=3)


def test_elbow_scan_agrees_with_jenks():
    values = [0.1, 0.4, 0.42, 0.8, 0.82, 0.83]
    for k, w in elbow_scan(values, k_max=4):
        assert w == pytest.approx(jenks_breaks(values, k).wss, abs=1e-12)


def test_rank_clusters_by_descending_median():
    result = jenks_breaks([0.9, 0.88, 0.6, 0.59], k=2)
    ranks = rank_clusters_by_performance(result, [0.9, 0.88, 0.6, 0.59])
    # cluster holding {0.88, 0.9} is rank 1
    high_cluster = result.assignment[0]
    low_cluster = result.assignment[2]
    assert ranks[high_cluster] == 1
    assert ranks[low_cluster] == 2


def test_rank_clusters_single_cluster():
    result = jenks_breaks([0.5, 0.6], k=1)
    assert rank_clusters_by_performance(result, [0.5, 0.6]) == [1]


def test_rank_clusters_permutation_invariant():
    values = [0.2, 0.9, 0.85, 0.25, 0.5]
    result = jenks_breaks(values, k=3)
    ranks = rank_clusters_by_performance(result, values)
    perm = [values[i] for i in (4, 2, 0, 1, 3)]
    result_p = jenks_breaks(perm, k=3)
    ranks_p = rank_clusters_by_performance(result_p, perm)
    assert ranks == ranks_p


@given(
    st.lists(st.floats(0, 1, allow_nan=False), min_size=2, max_size=12),
    st.integers(min_value=1, max_value=4),
)
@settings(max_examples=150)
def test_property_wss_monotone_in_k(values, k):
    if k + 1 > len(values):
        return
    a = jenks_breaks(values, k=k).wss
    b = jenks_breaks(values, k=k + 1).wss
    assert b <= a + 1e-12
