"""Gradient boosting on squared error and log loss.

* :func:`fit_gradient_boosting_regressor` fits leaf-mean trees to residuals;
  ``subsample < 1`` gives stochastic gradient boosting.
* :func:`fit_second_order_boosting` grows trees on gradient/hessian sums
  with L2 leaf shrinkage ``lambda_l2`` and split penalty ``gamma``.
* :func:`fit_ordered_boosting` uses oblivious trees and ordered residuals:
  a sample's residual comes only from samples preceding it in a random
  permutation.  This is a compact version of the ordered scheme, not a
  clone of any particular library.
* :func:`fit_gradient_boosting_classifier` is binomial-deviance boosting
  with Newton leaf values.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ._split_py import TIE_RTOL
from .errors import EmptyInputError, InvalidParameterError
from .models import FittedModel, as_matrix, register
from .rng import stream
from .tree import Tree, TreeBuilder, TreeModelMixin, check_labels, regression_builder


@dataclass(frozen=True)
class BoostConfig:
    n_stages: int = 100
    learning_rate: float = 0.1
    max_depth: int | None = 3
    min_samples_leaf: int = 1
    subsample: float = 1.0
    lambda_l2: float = 1.0
    gamma: float = 0.0
    n_permutations: int = 4
    seed: int = 0

    def validate(self):
        if self.n_stages < 1:
            raise InvalidParameterError("n_stages must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise InvalidParameterError("learning_rate must lie in (0, 1]")
        if not 0.0 < self.subsample <= 1.0:
            raise InvalidParameterError("subsample must lie in (0, 1]")
        if self.lambda_l2 < 0 or self.gamma < 0:
            raise InvalidParameterError("lambda_l2 and gamma must be >= 0")
        if self.max_depth is not None and self.max_depth < 0:
            raise InvalidParameterError("max_depth must be >= 0")
        if self.min_samples_leaf < 1:
            raise InvalidParameterError("min_samples_leaf must be >= 1")
        if self.n_permutations < 1:
            raise InvalidParameterError("n_permutations must be >= 1")


def _xy(X, y):
    X = np.ascontiguousarray(as_matrix(X))
    y = np.asarray(y, dtype=float)
    if X.shape[0] == 0:
        raise EmptyInputError("empty training data")
    if y.shape != (X.shape[0],):
        raise InvalidParameterError("X and y have different lengths")
    return X, y


def _stage_rows(cfg: BoostConfig, n: int, stage: int):
    if cfg.subsample >= 1.0:
        return np.arange(n)
    size = max(1, int(np.floor(cfg.subsample * n + 0.5)))
    return np.sort(stream(cfg.seed, "boost-subsample", stage).choice(n, size=size, replace=False))


@register
class BoostedTreesRegressor(TreeModelMixin, FittedModel):
    kind = "boosted_trees_regressor"

    def __init__(self, init, learning_rate, trees, n_features, feature_names=None, history=None,
                 variant="gradient", config=None):
        self.init = float(init)
        self.learning_rate = float(learning_rate)
        self.trees = list(trees)
        self.n_features = n_features
        self.feature_names = feature_names
        self.history = list(history or [])
        self.variant = variant
        self.config = config or {}

    def staged_predict(self, X):
        X = as_matrix(X)
        F = np.full(X.shape[0], self.init)
        yield F.copy()
        for t in self.trees:
            F = F + self.learning_rate * t.predict_value(X)[:, 0]
            yield F.copy()

    def predict(self, X):
        X = as_matrix(X)
        F = np.full(X.shape[0], self.init)
        for t in self.trees:
            F = F + self.learning_rate * t.predict_value(X)[:, 0]
        return F

    def to_dict(self):
        return {"kind": self.kind, "variant": self.variant, "init": self.init,
                "learning_rate": self.learning_rate, "n_features": self.n_features,
                "feature_names": self.feature_names, "config": self.config, "history": self.history,
                "trees": [t.to_dict(self.feature_names) for t in self.trees]}

    @classmethod
    def from_dict(cls, d):
        return cls(d["init"], d["learning_rate"], [Tree.from_dict(t) for t in d["trees"]], d["n_features"],
                   d.get("feature_names"), d.get("history"), d.get("variant", "gradient"), d.get("config"))


def fit_gradient_boosting_regressor(X, y, config: BoostConfig = BoostConfig(), feature_names=None):
    """Squared-error boosting; ``history[m]`` is the training MSE after m stages."""
    config.validate()
    X, y = _xy(X, y)
    n = len(y)
    init = float(np.mean(y))
    F = np.full(n, init)
    history = [float(np.mean((y - F) ** 2))]
    trees = []
    for m in range(config.n_stages):
        rows = _stage_rows(config, n, m)
        tree = regression_builder(y - F, max_depth=config.max_depth,
                                  min_samples_leaf=config.min_samples_leaf).build(X, rows)
        F = F + config.learning_rate * tree.predict_value(X)[:, 0]
        trees.append(tree)
        history.append(float(np.mean((y - F) ** 2)))
    variant = "stochastic" if config.subsample < 1.0 else "gradient"
    return BoostedTreesRegressor(init, config.learning_rate, trees, X.shape[1], feature_names, history,
                                 variant, asdict(config))


def second_order_builder(grad, hess, config: BoostConfig) -> TreeBuilder:
    """Tree on gradient/hessian sums.

    Split gain ``0.5 * [GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)] - gamma``;
    leaf weight ``-G / (H + l)``.  Splits with gain <= 0 are rejected.
    """
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    lam = config.lambda_l2

    def leaf(rows):
        return -np.sum(grad[rows]) / (np.sum(hess[rows]) + lam)

    def impurity(rows):
        g = grad[rows]
        return 0.0 if np.all(g == g[0]) else float(np.var(g))

    return TreeBuilder(grad, hess, leaf, impurity, max_depth=config.max_depth,
                       min_samples_leaf=config.min_samples_leaf, lam=lam, gamma=config.gamma,
                       score_scale=0.5)


def fit_second_order_boosting(X, y, config: BoostConfig = BoostConfig(), feature_names=None):
    """Regularised second-order boosting for squared loss (g = F - y, h = 1)."""
    config.validate()
    X, y = _xy(X, y)
    n = len(y)
    init = float(np.mean(y))
    F = np.full(n, init)
    history = [float(np.mean((y - F) ** 2))]
    trees = []
    hess = np.ones(n)
    for m in range(config.n_stages):
        rows = _stage_rows(config, n, m)
        tree = second_order_builder(F - y, hess, config).build(X, rows)
        F = F + config.learning_rate * tree.predict_value(X)[:, 0]
        trees.append(tree)
        history.append(float(np.mean((y - F) ** 2)))
    return BoostedTreesRegressor(init, config.learning_rate, trees, X.shape[1], feature_names, history,
                                 "second_order", asdict(config))


class ObliviousTree:
    """One ``(feature, threshold)`` per level; ``2**depth`` leaves.

    Leaf index bits are the level outcomes, first level most significant,
    1 meaning ``x > threshold``.
    """

    def __init__(self, features, thresholds, leaf_values, leaf_counts=None, node_gains=None):
        self.features = [int(f) for f in features]
        self.thresholds = [float(t) for t in thresholds]
        self.leaf_values = np.asarray(leaf_values, dtype=float)
        d = len(self.features)
        self.leaf_counts = np.zeros(2**d, dtype=np.int64) if leaf_counts is None else np.asarray(leaf_counts)
        self.node_gains = [np.asarray(g, dtype=float) for g in (node_gains or [np.zeros(2**l) for l in range(d)])]

    @property
    def depth(self):
        return len(self.features)

    def leaf_index(self, X):
        X = as_matrix(X)
        idx = np.zeros(X.shape[0], dtype=np.int64)
        for f, t in zip(self.features, self.thresholds):
            idx = 2 * idx + (X[:, f] > t)
        return idx

    def predict_value(self, X):
        return self.leaf_values[self.leaf_index(X)]

    def to_tree(self) -> Tree:
        """Expand into an ordinary binary tree (pre-order numbering)."""
        d = self.depth
        cols = {k: [] for k in ("f", "t", "l", "r", "v", "n", "dec")}

        def visit(level, prefix):
            i = len(cols["f"])
            lo = prefix << (d - level)
            hi = (prefix + 1) << (d - level)
            n = int(self.leaf_counts[lo:hi].sum())
            for k, v in zip(("f", "t", "l", "r", "n", "dec"), (-1, 0.0, -1, -1, n, 0.0)):
                cols[k].append(v)
            if level == d:
                cols["v"].append([float(self.leaf_values[prefix])])
                return i
            counts = self.leaf_counts[lo:hi]
            vals = self.leaf_values[lo:hi]
            cols["v"].append([float(np.average(vals, weights=counts)) if counts.sum() else 0.0])
            cols["f"][i] = self.features[level]
            cols["t"][i] = self.thresholds[level]
            cols["dec"][i] = float(self.node_gains[level][prefix])
            cols["l"][i] = visit(level + 1, 2 * prefix)
            cols["r"][i] = visit(level + 1, 2 * prefix + 1)
            return i

        visit(0, 0)
        return Tree(cols["f"], cols["t"], cols["l"], cols["r"], cols["v"], cols["n"],
                    np.zeros(len(cols["f"])), cols["dec"])

    def to_dict(self):
        return {"features": self.features, "thresholds": self.thresholds,
                "leaf_values": self.leaf_values.tolist(), "leaf_counts": self.leaf_counts.tolist(),
                "node_gains": [g.tolist() for g in self.node_gains]}

    @classmethod
    def from_dict(cls, d):
        return cls(d["features"], d["thresholds"], d["leaf_values"], d.get("leaf_counts"), d.get("node_gains"))


def fit_oblivious_structure(X, r, depth, lam=0.0):
    """Greedy level-wise choice of one shared split per level.

    Returns ``(features, thresholds, node_gains, leaf_index)``.  A level is
    added only if its total gain is positive.
    """
    X = as_matrix(X)
    r = np.asarray(r, dtype=float)
    n, p = X.shape
    leaf = np.zeros(n, dtype=np.int64)
    features, thresholds, gains = [], [], []
    for level in range(depth):
        n_leaves = 2**level
        onehot = np.zeros((n, n_leaves))
        onehot[np.arange(n), leaf] = 1.0
        G = onehot.T @ r
        N = onehot.sum(axis=0)
        parent = np.where(N + lam > 0, G * G / np.where(N + lam > 0, N + lam, 1.0), 0.0)
        candidates = []
        for f in range(p):
            vals = np.unique(X[:, f])
            if vals.size < 2:
                continue
            thr = vals[:-1] + (vals[1:] - vals[:-1]) / 2.0
            thr = np.where(thr >= vals[1:], vals[:-1], thr)
            left = (X[:, f][:, None] <= thr[None, :]).astype(float)
            GL = onehot.T @ (r[:, None] * left)
            NL = onehot.T @ left
            GR = G[:, None] - GL
            NR = N[:, None] - NL
            with np.errstate(divide="ignore", invalid="ignore"):
                sl = np.where(NL + lam > 0, GL * GL / (NL + lam), 0.0)
                sr = np.where(NR + lam > 0, GR * GR / (NR + lam), 0.0)
            candidates.append((f, thr, sl + sr))
        if not candidates:
            break
        # same tie rule as the CART scan: first candidate within TIE_RTOL of the best
        top = max(float(per_node.sum(axis=0).max()) for _, _, per_node in candidates)
        cut = top - TIE_RTOL * abs(top)
        f, thr, per_node = next(c for c in candidates if c[2].sum(axis=0).max() >= cut)
        k = int(np.flatnonzero(per_node.sum(axis=0) >= cut)[0])
        if not top - parent.sum() > 0.0:
            break
        t, node_gain = float(thr[k]), per_node[:, k] - parent
        features.append(f)
        thresholds.append(t)
        gains.append(np.maximum(node_gain, 0.0))
        leaf = 2 * leaf + (X[:, f] > t)
    return features, thresholds, gains, leaf


@register
class OrderedBoostingRegressor(TreeModelMixin, FittedModel):
    kind = "ordered_boosting_regressor"

    def __init__(self, init, learning_rate, trees, n_features, feature_names=None, history=None, config=None,
                 ordered_predictions=None):
        self.init = float(init)
        self.learning_rate = float(learning_rate)
        self.oblivious_trees = list(trees)
        self.n_features = n_features
        self.feature_names = feature_names
        self.history = list(history or [])
        self.config = config or {}
        self.ordered_predictions = ordered_predictions

    @property
    def trees(self):
        return [t.to_tree() for t in self.oblivious_trees]

    def predict(self, X):
        X = as_matrix(X)
        F = np.full(X.shape[0], self.init)
        for t in self.oblivious_trees:
            F = F + self.learning_rate * t.predict_value(X)
        return F

    def feature_importances(self):
        total = np.zeros(self.n_features)
        for t in self.oblivious_trees:
            for f, g in zip(t.features, t.node_gains):
                total[f] += g.sum()
        s = total.sum()
        return total / s if s > 0 else total

    def _all_trees(self):
        return self.trees

    def to_dict(self):
        return {"kind": self.kind, "init": self.init, "learning_rate": self.learning_rate,
                "n_features": self.n_features, "feature_names": self.feature_names, "config": self.config,
                "history": self.history, "trees": [t.to_dict() for t in self.oblivious_trees]}

    @classmethod
    def from_dict(cls, d):
        return cls(d["init"], d["learning_rate"], [ObliviousTree.from_dict(t) for t in d["trees"]],
                   d["n_features"], d.get("feature_names"), d.get("history"), d.get("config"))


def fit_ordered_boosting(X, y, config: BoostConfig = BoostConfig(max_depth=4), feature_names=None,
                         permutations=None):
    """Ordered boosting with oblivious trees.

    For each of ``config.n_permutations`` random permutations an ordered
    prediction ``S_q`` is kept per training sample.  It only ever absorbs
    leaf means of residuals from samples *earlier* in that permutation, so
    a sample's residual ``y_i - S_q(i)`` never depends on ``y_i``.  Stage
    ``m`` grows its tree structure on the ordered residuals of permutation
    ``m mod P``.  Leaf values stored in the model are leaf means of the
    full-data residuals ``y - F``, as in the reference scheme; the ordered
    predictions only steer the structure search.
    """
    config.validate()
    X, y = _xy(X, y)
    n = len(y)
    depth = config.max_depth if config.max_depth is not None else 6
    if permutations is None:
        permutations = [stream(config.seed, "ordered-permutation", q).permutation(n)
                        for q in range(config.n_permutations)]
    permutations = [np.asarray(p, dtype=np.int64) for p in permutations]
    P = len(permutations)
    init = float(np.mean(y))
    S = np.full((P, n), init)
    F = np.full(n, init)
    lr = config.learning_rate
    history = [float(np.mean((y - F) ** 2))]
    trees = []
    for m in range(config.n_stages):
        R = y[None, :] - S  # ordered residuals, one row per permutation
        feats, thrs, gains, leaf = fit_oblivious_structure(X, R[m % P], depth, config.lambda_l2)
        n_leaves = 2 ** len(feats)
        for q, perm in enumerate(permutations):
            sums = np.zeros(n_leaves)
            counts = np.zeros(n_leaves)
            delta = np.zeros(n)
            for i in perm:
                L = leaf[i]
                if counts[L] > 0:
                    delta[i] = sums[L] / counts[L]
                sums[L] += R[q, i]
                counts[L] += 1
            S[q] += lr * delta
        counts = np.bincount(leaf, minlength=n_leaves)
        totals = np.bincount(leaf, weights=y - F, minlength=n_leaves)
        values = np.divide(totals, counts, out=np.zeros(n_leaves), where=counts > 0)
        tree = ObliviousTree(feats, thrs, values, counts, gains)
        trees.append(tree)
        F = F + lr * values[leaf]
        history.append(float(np.mean((y - F) ** 2)))
    return OrderedBoostingRegressor(init, lr, trees, X.shape[1], feature_names, history, asdict(config), S)


def sigmoid(z):
    """Logistic function, evaluated without overflow for large ``|z|``."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@register
class GradientBoostingClassifier(TreeModelMixin, FittedModel):
    kind = "gradient_boosting_classifier"
    is_classifier = True

    def __init__(self, init, learning_rate, trees, n_features, feature_names=None, history=None,
                 variant="gradient", config=None):
        self.init = float(init)
        self.learning_rate = float(learning_rate)
        self.trees = list(trees)
        self.n_features = n_features
        self.feature_names = feature_names
        self.history = list(history or [])
        self.variant = variant
        self.config = config or {}

    def raw_score(self, X):
        X = as_matrix(X)
        F = np.full(X.shape[0], self.init)
        for t in self.trees:
            F = F + self.learning_rate * t.predict_value(X)[:, 0]
        return F

    def decision_score(self, X):
        return sigmoid(self.raw_score(X))

    def predict(self, X):
        return (self.raw_score(X) >= 0).astype(np.int64)

    def to_dict(self):
        return {"kind": self.kind, "variant": self.variant, "init": self.init,
                "learning_rate": self.learning_rate, "n_features": self.n_features,
                "feature_names": self.feature_names, "config": self.config, "history": self.history,
                "trees": [t.to_dict(self.feature_names) for t in self.trees]}

    @classmethod
    def from_dict(cls, d):
        return cls(d["init"], d["learning_rate"], [Tree.from_dict(t) for t in d["trees"]], d["n_features"],
                   d.get("feature_names"), d.get("history"), d.get("variant", "gradient"), d.get("config"))


def _log_loss(y, F):
    # log(1 + e^F) - y F, stable
    return float(np.mean(np.logaddexp(0.0, F) - y * F))


def fit_gradient_boosting_classifier(X, labels, config: BoostConfig = BoostConfig(), feature_names=None):
    """Binomial-deviance boosting; leaf values are one Newton step."""
    config.validate()
    X = np.ascontiguousarray(as_matrix(X))
    y = check_labels(labels).astype(float)
    if X.shape[0] == 0:
        raise EmptyInputError("empty training data")
    n = len(y)
    p = float(np.clip(y.mean(), 1e-6, 1 - 1e-6))
    init = float(np.log(p / (1 - p)))
    F = np.full(n, init)
    history = [_log_loss(y, F)]
    trees = []
    for m in range(config.n_stages):
        rows = _stage_rows(config, n, m)
        prob = sigmoid(F)
        resid = y - prob
        tree = regression_builder(resid, max_depth=config.max_depth,
                                  min_samples_leaf=config.min_samples_leaf).build(X, rows)
        leaves = tree.apply(X[rows])
        hess = prob[rows] * (1 - prob[rows])
        num = np.bincount(leaves, weights=resid[rows], minlength=tree.n_nodes)
        den = np.bincount(leaves, weights=hess, minlength=tree.n_nodes)
        is_leaf = tree.feature < 0
        newton = np.divide(num, den, out=np.zeros(tree.n_nodes), where=den > 1e-12)
        tree.value[is_leaf, 0] = newton[is_leaf]
        F = F + config.learning_rate * tree.predict_value(X)[:, 0]
        trees.append(tree)
        history.append(_log_loss(y, F))
    variant = "stochastic" if config.subsample < 1.0 else "gradient"
    return GradientBoostingClassifier(init, config.learning_rate, trees, X.shape[1], feature_names, history,
                                      variant, asdict(config))
