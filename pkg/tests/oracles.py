"""Independent reference implementations used as test oracles."""
import itertools

import numpy as np


def brute_force_root_split(X, y, min_leaf=1):
    """Weighted child SSE minimum over every (feature, midpoint) candidate.

    Returns ``(best_sse, [(feature, threshold), ...])`` listing every
    candidate achieving the minimum.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    best, winners = np.inf, []
    for f in range(X.shape[1]):
        vals = np.unique(X[:, f])
        for a, b in zip(vals[:-1], vals[1:]):
            t = a + (b - a) / 2.0
            left = X[:, f] <= t
            if left.sum() < min_leaf or (~left).sum() < min_leaf:
                continue
            sse = ((y[left] - y[left].mean()) ** 2).sum() + ((y[~left] - y[~left].mean()) ** 2).sum()
            if sse < best - 1e-12:
                best, winners = sse, [(f, t)]
            elif abs(sse - best) <= 1e-12:
                winners.append((f, t))
    return best, winners


def gini_brute(labels):
    labels = list(labels)
    n = len(labels)
    return sum((labels.count(c) / n) * (1 - labels.count(c) / n) for c in set(labels))


def pairwise_auc(labels, scores):
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l == 0]
    total = 0.0
    for p, q in itertools.product(pos, neg):
        total += 1.0 if p > q else 0.5 if p == q else 0.0
    return total / (len(pos) * len(neg))


def central_difference(f, x, h=1e-4):
    """First and second central differences in extended precision."""
    x = np.longdouble(x)
    h = np.longdouble(h)
    fp, f0, fm = f(x + h), f(x), f(x - h)
    return (fp - fm) / (2 * h), (fp - 2 * f0 + fm) / (h * h)


def tanh_mlp_longdouble(weights, biases, x):
    """Forward pass of a tanh MLP in extended precision (identity output)."""
    a = np.asarray(x, dtype=np.longdouble)
    for k, (w, b) in enumerate(zip(weights, biases)):
        a = a @ np.asarray(w, dtype=np.longdouble) + np.asarray(b, dtype=np.longdouble)
        if k < len(weights) - 1:
            a = np.tanh(a)
    return a


def rel_err(a, b):
    """``|a - b| / max(|b|, 1)``: relative for large values, absolute near 0."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.abs(a - b) / np.maximum(np.abs(b), 1.0)
