"""Numba-jitted tree kernels, bit-identical to the numpy reference path.

Every algorithmic decision (SplitMix64 draw order, integer-count split
scores, sequential float accumulation, stable partitions, stack
discipline) mirrors _kernels_numpy.py exactly; tests pin the outputs of
the two paths against each other.
"""

from __future__ import annotations

import numpy as np
from numba import njit

BACKEND = "numba"

MASK = (1 << 64) - 1

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)

UNLIMITED_DEPTH = 1 << 30


@njit(cache=True)
def _mix(state):
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return state, z ^ (z >> _S31)


@njit(cache=True)
def _grow_gini_tree(x, y, max_depth, min_leaf, m_try, bootstrap, seed):
    n, n_features = x.shape
    state = seed
    depth_cap = max_depth if max_depth > 0 else UNLIMITED_DEPTH

    idx = np.empty(n, dtype=np.int64)
    if bootstrap:
        for i in range(n):
            state, z = _mix(state)
            idx[i] = np.int64(z % np.uint64(n))
    else:
        for i in range(n):
            idx[i] = i

    capacity = 2 * n + 1
    feature = np.full(capacity, -1, dtype=np.int64)
    threshold = np.zeros(capacity, dtype=np.float64)
    left = np.full(capacity, -1, dtype=np.int64)
    right = np.full(capacity, -1, dtype=np.int64)
    value = np.zeros(capacity, dtype=np.float64)

    stack_node = np.empty(capacity, dtype=np.int64)
    stack_start = np.empty(capacity, dtype=np.int64)
    stack_end = np.empty(capacity, dtype=np.int64)
    stack_depth = np.empty(capacity, dtype=np.int64)
    sp = 0
    stack_node[sp] = 0
    stack_start[sp] = 0
    stack_end[sp] = n
    stack_depth[sp] = 0
    sp += 1
    n_nodes = 1

    feats = np.empty(n_features, dtype=np.int64)
    while sp > 0:
        sp -= 1
        node = stack_node[sp]
        start = stack_start[sp]
        end = stack_end[sp]
        depth = stack_depth[sp]
        total = end - start

        pos = 0
        for i in range(start, end):
            pos += y[idx[i]]
        if (
            depth >= depth_cap
            or total < 2 * min_leaf
            or pos == 0
            or pos == total
        ):
            value[node] = pos / total
            continue

        for i in range(n_features):
            feats[i] = i
        if m_try < n_features:
            for t in range(m_try):
                state, z = _mix(state)
                j = t + np.int64(z % np.uint64(n_features - t))
                tmp = feats[t]
                feats[t] = feats[j]
                feats[j] = tmp
            feats_used = m_try
        else:
            feats_used = n_features

        parent_score = (pos * (total - pos)) / total
        best_score = np.inf
        tie_count = 0
        vals = np.empty(total, dtype=np.float64)
        ys = np.empty(total, dtype=np.int64)
        for fi in range(feats_used):
            f = feats[fi]
            for i in range(total):
                vals[i] = x[idx[start + i], f]
            order = np.argsort(vals, kind="mergesort")
            pos_left = 0
            prev = vals[order[0]]
            for i in range(1, total):
                pos_left += y[idx[start + order[i - 1]]]
                cur = vals[order[i]]
                if cur != prev and i >= min_leaf and total - i >= min_leaf:
                    neg_left = i - pos_left
                    pos_right = pos - pos_left
                    neg_right = (total - i) - pos_right
                    score = (pos_left * neg_left) / i + (pos_right * neg_right) / (
                        total - i
                    )
                    if score < best_score:
                        best_score = score
                        tie_count = 1
                    elif score == best_score:
                        tie_count += 1
                prev = cur

        if tie_count == 0 or not best_score < parent_score:
            value[node] = pos / total
            continue

        state, z = _mix(state)
        pick = np.int64(z % np.uint64(tie_count))
        best_feature = -1
        best_threshold = 0.0
        seen = 0
        for fi in range(feats_used):
            if best_feature >= 0:
                break
            f = feats[fi]
            for i in range(total):
                vals[i] = x[idx[start + i], f]
            order = np.argsort(vals, kind="mergesort")
            pos_left = 0
            prev = vals[order[0]]
            for i in range(1, total):
                pos_left += y[idx[start + order[i - 1]]]
                cur = vals[order[i]]
                if cur != prev and i >= min_leaf and total - i >= min_leaf:
                    neg_left = i - pos_left
                    pos_right = pos - pos_left
                    neg_right = (total - i) - pos_right
                    score = (pos_left * neg_left) / i + (pos_right * neg_right) / (
                        total - i
                    )
                    if score == best_score:
                        if seen == pick:
                            best_feature = f
                            best_threshold = (prev + cur) / 2.0
                            break
                        seen += 1
                prev = cur

        left_buf = np.empty(total, dtype=np.int64)
        right_buf = np.empty(total, dtype=np.int64)
        n_left = 0
        n_right = 0
        for i in range(total):
            r = idx[start + i]
            if x[r, best_feature] <= best_threshold:
                left_buf[n_left] = r
                n_left += 1
            else:
                right_buf[n_right] = r
                n_right += 1
        for i in range(n_left):
            idx[start + i] = left_buf[i]
        for i in range(n_right):
            idx[start + n_left + i] = right_buf[i]

        left_id = n_nodes
        right_id = n_nodes + 1
        n_nodes += 2
        feature[node] = best_feature
        threshold[node] = best_threshold
        left[node] = left_id
        right[node] = right_id
        stack_node[sp] = right_id
        stack_start[sp] = start + n_left
        stack_end[sp] = end
        stack_depth[sp] = depth + 1
        sp += 1
        stack_node[sp] = left_id
        stack_start[sp] = start
        stack_end[sp] = start + n_left
        stack_depth[sp] = depth + 1
        sp += 1

    return (
        feature[:n_nodes],
        threshold[:n_nodes],
        left[:n_nodes],
        right[:n_nodes],
        value[:n_nodes],
    )


@njit(cache=True)
def _grow_mse_tree(x, grad, hess, max_depth, min_leaf):
    n, n_features = x.shape
    depth_cap = max_depth if max_depth > 0 else UNLIMITED_DEPTH
    idx = np.empty(n, dtype=np.int64)
    for i in range(n):
        idx[i] = i

    capacity = 2 * n + 1
    feature = np.full(capacity, -1, dtype=np.int64)
    threshold = np.zeros(capacity, dtype=np.float64)
    left = np.full(capacity, -1, dtype=np.int64)
    right = np.full(capacity, -1, dtype=np.int64)
    value = np.zeros(capacity, dtype=np.float64)

    stack_node = np.empty(capacity, dtype=np.int64)
    stack_start = np.empty(capacity, dtype=np.int64)
    stack_end = np.empty(capacity, dtype=np.int64)
    stack_depth = np.empty(capacity, dtype=np.int64)
    sp = 0
    stack_node[sp] = 0
    stack_start[sp] = 0
    stack_end[sp] = n
    stack_depth[sp] = 0
    sp += 1
    n_nodes = 1

    while sp > 0:
        sp -= 1
        node = stack_node[sp]
        start = stack_start[sp]
        end = stack_end[sp]
        depth = stack_depth[sp]
        total = end - start

        g_total = 0.0
        h_total = 0.0
        for i in range(start, end):
            g_total += grad[idx[i]]
            h_total += hess[idx[i]]
        if depth >= depth_cap or total < 2 * min_leaf:
            value[node] = -g_total / h_total
            continue

        parent_gain = g_total * g_total / h_total
        best_gain = parent_gain
        best_feature = -1
        best_threshold = 0.0
        vals = np.empty(total, dtype=np.float64)
        for f in range(n_features):
            for i in range(total):
                vals[i] = x[idx[start + i], f]
            order = np.argsort(vals, kind="mergesort")
            g_left = 0.0
            h_left = 0.0
            prev = vals[order[0]]
            for i in range(1, total):
                r = idx[start + order[i - 1]]
                g_left += grad[r]
                h_left += hess[r]
                cur = vals[order[i]]
                if cur != prev and i >= min_leaf and total - i >= min_leaf:
                    g_right = g_total - g_left
                    h_right = h_total - h_left
                    gain = (g_left * g_left) / h_left + (g_right * g_right) / h_right
                    if gain > best_gain:
                        best_gain = gain
                        best_feature = f
                        best_threshold = (prev + cur) / 2.0
                prev = cur

        if best_feature < 0:
            value[node] = -g_total / h_total
            continue

        left_buf = np.empty(total, dtype=np.int64)
        right_buf = np.empty(total, dtype=np.int64)
        n_left = 0
        n_right = 0
        for i in range(total):
            r = idx[start + i]
            if x[r, best_feature] <= best_threshold:
                left_buf[n_left] = r
                n_left += 1
            else:
                right_buf[n_right] = r
                n_right += 1
        for i in range(n_left):
            idx[start + i] = left_buf[i]
        for i in range(n_right):
            idx[start + n_left + i] = right_buf[i]

        left_id = n_nodes
        right_id = n_nodes + 1
        n_nodes += 2
        feature[node] = best_feature
        threshold[node] = best_threshold
        left[node] = left_id
        right[node] = right_id
        stack_node[sp] = right_id
        stack_start[sp] = start + n_left
        stack_end[sp] = end
        stack_depth[sp] = depth + 1
        sp += 1
        stack_node[sp] = left_id
        stack_start[sp] = start
        stack_end[sp] = start + n_left
        stack_depth[sp] = depth + 1
        sp += 1

    return (
        feature[:n_nodes],
        threshold[:n_nodes],
        left[:n_nodes],
        right[:n_nodes],
        value[:n_nodes],
    )


@njit(cache=True)
def _predict_tree(feature, threshold, left, right, value, x):
    n = x.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if x[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out


def grow_gini_tree(x, y, max_depth, min_leaf, m_try, bootstrap, seed):
    """See _kernels_numpy.grow_gini_tree; jitted, identical outputs."""
    return _grow_gini_tree(
        np.ascontiguousarray(x, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.int64),
        np.int64(max_depth),
        np.int64(min_leaf),
        np.int64(m_try),
        bool(bootstrap),
        np.uint64(int(seed) & MASK),
    )


def grow_mse_tree(x, grad, hess, max_depth, min_leaf):
    """See _kernels_numpy.grow_mse_tree; jitted, identical outputs."""
    return _grow_mse_tree(
        np.ascontiguousarray(x, dtype=np.float64),
        np.ascontiguousarray(grad, dtype=np.float64),
        np.ascontiguousarray(hess, dtype=np.float64),
        np.int64(max_depth),
        np.int64(min_leaf),
    )


def predict_tree(feature, threshold, left, right, value, x):
    """See _kernels_numpy.predict_tree; jitted, identical outputs."""
    return _predict_tree(
        np.ascontiguousarray(feature, dtype=np.int64),
        np.ascontiguousarray(threshold, dtype=np.float64),
        np.ascontiguousarray(left, dtype=np.int64),
        np.ascontiguousarray(right, dtype=np.int64),
        np.ascontiguousarray(value, dtype=np.float64),
        np.ascontiguousarray(x, dtype=np.float64),
    )
