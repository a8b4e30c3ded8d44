"""Pure-numpy reference implementations of the hot tree kernels.

Selected by RANKSTAB_KERNELS=numpy (or automatically when numba is not
importable). The numba path in _kernels_numba.py implements the same
algorithms step for step and must produce bit-identical outputs; the
equivalence is pinned by tests.

Determinism notes shared by both paths:
- All randomness (bootstrap rows, per-node feature subsets, tie-breaking
  among equal-gain splits) comes from an inline SplitMix64 stream, so the
  draw sequence is identical across paths.
- Split scores are computed from integer label counts through one fixed
  closed-form expression, so exact score ties are detected identically.
- Floating-point accumulations (gradient prefix sums) are strictly
  sequential in both paths: np.cumsum here, a running loop in numba.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB

UNLIMITED_DEPTH = 1 << 30


def _mix(state: int):
    """One SplitMix64 step: returns (new_state, 64-bit output)."""
    state = (state + GOLDEN) & MASK
    z = state
    z = ((z ^ (z >> 30)) * MIX1) & MASK
    z = ((z ^ (z >> 27)) * MIX2) & MASK
    return state, z ^ (z >> 31)


def _seq_sum(values: np.ndarray) -> float:
    """Strictly left-to-right float sum (matches a scalar accumulation loop)."""
    if values.size == 0:
        return 0.0
    return float(np.cumsum(values)[-1])


def grow_gini_tree(x, y, max_depth, min_leaf, m_try, bootstrap, seed):
    """Grow a binary classification tree minimizing weighted child Gini.

    Candidate splits fall between strictly different consecutive sorted
    feature values. Among candidates with exactly the best score, one is
    drawn uniformly (a single SplitMix64 draw per split node). Leaves
    store the positive-class fraction.

    Returns (feature, threshold, left, right, value) arrays; feature is
    -1 at leaves.
    """
    n, n_features = x.shape
    state = int(seed) & MASK
    depth_cap = max_depth if max_depth > 0 else UNLIMITED_DEPTH

    if bootstrap:
        idx = np.empty(n, dtype=np.int64)
        for i in range(n):
            state, z = _mix(state)
            idx[i] = z % n
    else:
        idx = np.arange(n, dtype=np.int64)

    capacity = 2 * n + 1
    feature = np.full(capacity, -1, dtype=np.int64)
    threshold = np.zeros(capacity, dtype=np.float64)
    left = np.full(capacity, -1, dtype=np.int64)
    right = np.full(capacity, -1, dtype=np.int64)
    value = np.zeros(capacity, dtype=np.float64)

    stack = [(0, 0, n, 0)]
    n_nodes = 1
    while stack:
        node, start, end, depth = stack.pop()
        rows = idx[start:end]
        total = end - start
        ys = y[rows]
        pos = int(ys.sum())
        if (
            depth >= depth_cap
            or total < 2 * min_leaf
            or pos == 0
            or pos == total
        ):
            value[node] = pos / total
            continue

        if m_try < n_features:
            feats = np.arange(n_features, dtype=np.int64)
            for t in range(m_try):
                state, z = _mix(state)
                j = t + int(z % (n_features - t))
                feats[t], feats[j] = feats[j], feats[t]
            feats = feats[:m_try]
        else:
            feats = np.arange(n_features, dtype=np.int64)

        parent_score = (pos * (total - pos)) / total
        positions = np.arange(1, total, dtype=np.int64)
        best_score = np.inf
        tie_count = 0
        for f in feats:
            vals = x[rows, f]
            order = np.argsort(vals, kind="mergesort")
            vs = vals[order]
            cum = np.cumsum(ys[order])
            valid = (
                (vs[1:] != vs[:-1])
                & (positions >= min_leaf)
                & (total - positions >= min_leaf)
            )
            if not valid.any():
                continue
            pos_left = cum[: total - 1]
            neg_left = positions - pos_left
            pos_right = pos - pos_left
            neg_right = (total - positions) - pos_right
            score = (pos_left * neg_left) / positions + (pos_right * neg_right) / (
                total - positions
            )
            masked = score[valid]
            local_best = masked.min()
            if local_best < best_score:
                best_score = local_best
                tie_count = int((masked == local_best).sum())
            elif local_best == best_score:
                tie_count += int((masked == local_best).sum())

        if tie_count == 0 or not best_score < parent_score:
            value[node] = pos / total
            continue

        state, z = _mix(state)
        pick = int(z % tie_count)
        best_feature = -1
        best_threshold = 0.0
        seen = 0
        for f in feats:
            vals = x[rows, f]
            order = np.argsort(vals, kind="mergesort")
            vs = vals[order]
            cum = np.cumsum(ys[order])
            valid = (
                (vs[1:] != vs[:-1])
                & (positions >= min_leaf)
                & (total - positions >= min_leaf)
            )
            pos_left = cum[: total - 1]
            neg_left = positions - pos_left
            pos_right = pos - pos_left
            neg_right = (total - positions) - pos_right
            score = (pos_left * neg_left) / positions + (pos_right * neg_right) / (
                total - positions
            )
            hits = positions[valid & (score == best_score)]
            if pick < seen + hits.size:
                i_split = int(hits[pick - seen])
                best_feature = int(f)
                best_threshold = (vs[i_split - 1] + vs[i_split]) / 2.0
                break
            seen += hits.size

        vals = x[rows, best_feature]
        go_left = vals <= best_threshold
        left_rows = rows[go_left]
        right_rows = rows[~go_left]
        n_left = left_rows.size
        idx[start : start + n_left] = left_rows
        idx[start + n_left : end] = right_rows

        left_id = n_nodes
        right_id = n_nodes + 1
        n_nodes += 2
        feature[node] = best_feature
        threshold[node] = best_threshold
        left[node] = left_id
        right[node] = right_id
        stack.append((right_id, start + n_left, end, depth + 1))
        stack.append((left_id, start, start + n_left, depth + 1))

    return (
        feature[:n_nodes],
        threshold[:n_nodes],
        left[:n_nodes],
        right[:n_nodes],
        value[:n_nodes],
    )


def grow_mse_tree(x, grad, hess, max_depth, min_leaf):
    """Grow a regression tree on (gradient, hessian) pairs, Newton leaves.

    Deterministic: the first strictly-better candidate in (feature,
    position) order wins; no randomness is consumed. Split gain is
    G_L^2/H_L + G_R^2/H_R, leaves store -G/H.
    """
    n, n_features = x.shape
    depth_cap = max_depth if max_depth > 0 else UNLIMITED_DEPTH
    idx = np.arange(n, dtype=np.int64)

    capacity = 2 * n + 1
    feature = np.full(capacity, -1, dtype=np.int64)
    threshold = np.zeros(capacity, dtype=np.float64)
    left = np.full(capacity, -1, dtype=np.int64)
    right = np.full(capacity, -1, dtype=np.int64)
    value = np.zeros(capacity, dtype=np.float64)

    stack = [(0, 0, n, 0)]
    n_nodes = 1
    while stack:
        node, start, end, depth = stack.pop()
        rows = idx[start:end]
        total = end - start
        g_total = _seq_sum(grad[rows])
        h_total = _seq_sum(hess[rows])
        if depth >= depth_cap or total < 2 * min_leaf:
            value[node] = -g_total / h_total
            continue

        parent_gain = g_total * g_total / h_total
        positions = np.arange(1, total, dtype=np.int64)
        best_gain = parent_gain
        best_feature = -1
        best_threshold = 0.0
        for f in range(n_features):
            vals = x[rows, f]
            order = np.argsort(vals, kind="mergesort")
            vs = vals[order]
            cum_g = np.cumsum(grad[rows][order])
            cum_h = np.cumsum(hess[rows][order])
            valid = (
                (vs[1:] != vs[:-1])
                & (positions >= min_leaf)
                & (total - positions >= min_leaf)
            )
            if not valid.any():
                continue
            g_left = cum_g[: total - 1]
            h_left = cum_h[: total - 1]
            g_right = g_total - g_left
            h_right = h_total - h_left
            gain = (g_left * g_left) / h_left + (g_right * g_right) / h_right
            masked = gain[valid]
            local_best = masked.max()
            # earliest position achieving the max == what a left-to-right
            # strictly-greater scan would keep
            if local_best > best_gain:
                best_gain = local_best
                i_split = int(positions[valid][int(np.argmax(masked))])
                best_feature = int(f)
                best_threshold = (vs[i_split - 1] + vs[i_split]) / 2.0

        if best_feature < 0:
            value[node] = -g_total / h_total
            continue

        vals = x[rows, best_feature]
        go_left = vals <= best_threshold
        left_rows = rows[go_left]
        right_rows = rows[~go_left]
        n_left = left_rows.size
        idx[start : start + n_left] = left_rows
        idx[start + n_left : end] = right_rows

        left_id = n_nodes
        right_id = n_nodes + 1
        n_nodes += 2
        feature[node] = best_feature
        threshold[node] = best_threshold
        left[node] = left_id
        right[node] = right_id
        stack.append((right_id, start + n_left, end, depth + 1))
        stack.append((left_id, start, start + n_left, depth + 1))

    return (
        feature[:n_nodes],
        threshold[:n_nodes],
        left[:n_nodes],
        right[:n_nodes],
        value[:n_nodes],
    )


def predict_tree(feature, threshold, left, right, value, x):
    """Leaf value per row of x (vectorized level-by-level descent)."""
    n = x.shape[0]
    node = np.zeros(n, dtype=np.int64)
    active = feature[node] >= 0
    while active.any():
        rows = np.nonzero(active)[0]
        current = node[rows]
        f = feature[current]
        go_left = x[rows, f] <= threshold[current]
        node[rows] = np.where(go_left, left[current], right[current])
        active[rows] = feature[node[rows]] >= 0
    return value[node]
