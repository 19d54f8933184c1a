"""Pure-numpy best-split search (fallback for the Cython kernel)."""

import numpy as np


def best_split(X, y, sample_idx, features, min_leaf):
    """Exhaustive best split of one tree node by squared-error reduction.

    X: (n, p) float64, y: (n,) float64, sample_idx: rows in this node,
    features: candidate feature indices (ascending for deterministic
    tie-breaking), min_leaf: minimum samples on each side.

    Returns (feature, threshold, gain); feature is -1 when no valid split
    exists. Ties are broken by lowest feature index, then lowest threshold.
    """
    t_all = y[sample_idx]
    m = t_all.shape[0]
    if m < 2 * min_leaf:
        return -1, 0.0, 0.0
    best_f = -1
    best_thr = 0.0
    best_gain = 0.0
    base = None
    for j in features:
        v = X[sample_idx, j]
        order = np.argsort(v, kind="stable")
        vs = v[order]
        ts = t_all[order]
        prefix = np.cumsum(ts)
        total = prefix[-1]
        if base is None:
            base = total * total / m
        # split after position i: left = [0..i], right = [i+1..m-1]
        i = np.arange(m - 1)
        valid = (vs[:-1] < vs[1:]) & (i + 1 >= min_leaf) & (m - i - 1 >= min_leaf)
        if not valid.any():
            continue
        s = prefix[:-1]
        gain = np.full(m - 1, -np.inf)
        nl = (i + 1).astype(float)
        nr = (m - i - 1).astype(float)
        gain[valid] = (s[valid] ** 2 / nl[valid]) + ((total - s[valid]) ** 2 / nr[valid]) - base
        k = int(np.argmax(gain))
        if gain[k] > best_gain:
            best_gain = float(gain[k])
            best_f = int(j)
            best_thr = float((vs[k] + vs[k + 1]) / 2.0)
    return best_f, best_thr, best_gain
