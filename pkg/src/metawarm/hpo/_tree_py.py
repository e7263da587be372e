"""Pure numpy tree kernels; reference for, and fallback to, ``_tree_ext``.

Both implementations must return identical results: rows are ordered by
(value, row index), gradient sums accumulate sequentially in that order, and
a split replaces the incumbent only on a strictly larger gain.
"""
import numpy as np


def best_split(X, g, h, rows, features, G, H, min_child_weight, reg_lambda):
    """Best threshold split of ``rows`` over ``features``.

    Returns ``(feature, threshold, gain)``; feature is -1 when no split has
    positive gain with both children's hessian sums >= ``min_child_weight``.
    """
    best_f, best_thr, best_gain = -1, 0.0, 0.0
    if len(rows) < 2:
        return best_f, best_thr, best_gain
    parent = G * G / (H + reg_lambda)
    g_rows = g[rows]
    h_rows = h[rows]
    for f in features:
        x = X[rows, f]
        order = np.lexsort((rows, x))
        xs = x[order]
        GL = np.cumsum(g_rows[order])[:-1]
        HL = np.cumsum(h_rows[order])[:-1]
        GR = G - GL
        HR = H - HL
        valid = (xs[1:] != xs[:-1]) & (HL >= min_child_weight) & (HR >= min_child_weight)
        if not valid.any():
            continue
        gain = GL * GL / (HL + reg_lambda) + GR * GR / (HR + reg_lambda) - parent
        gain = np.where(valid, gain, -np.inf)
        k = int(np.argmax(gain))
        if gain[k] > best_gain:
            best_f, best_gain = int(f), float(gain[k])
            best_thr = 0.5 * (xs[k] + xs[k + 1])
    return best_f, best_thr, best_gain


def predict_tree(X, feature, threshold, left, right, value):
    n = X.shape[0]
    node = np.zeros(n, dtype=np.intp)
    ar = np.arange(n)
    while True:
        f = feature[node]
        active = f >= 0
        if not active.any():
            break
        go_left = X[ar, np.maximum(f, 0)] < threshold[node]
        node = np.where(active, np.where(go_left, left[node], right[node]), node)
    return value[node]
