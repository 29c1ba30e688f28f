"""CART trees stored as flat node arrays.

Nodes are numbered in depth-first pre-order.  Routing rule everywhere:
``x[feature] <= threshold`` goes left.

A node's split quality is expressed through per-sample statistics
(``stats``, ``denom``): the score of a node is ``sum_c S_c**2 / (D + lam)``.
With ``stats = w*y, denom = w`` the score gain is the decrease in weighted
squared error; with one-hot class weights it is the decrease in weighted
Gini impurity; with gradients/hessians it is twice the second-order gain.
"""
from __future__ import annotations

import json

import numpy as np

from .errors import EmptyInputError, InvalidParameterError, UnsupportedOperationError
from .models import FittedModel, as_matrix, register
from .splitting import best_split, node_score


class Tree:
    def __init__(self, feature, threshold, left, right, value, n_samples, impurity, decrease):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=float).reshape(len(self.feature), -1)
        self.n_samples = np.asarray(n_samples, dtype=np.int64)
        self.impurity = np.asarray(impurity, dtype=float)
        self.decrease = np.asarray(decrease, dtype=float)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X) -> np.ndarray:
        X = as_matrix(X)
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            cur = node[idx]
            go_left = X[idx, self.feature[cur]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] >= 0
        return node

    def predict_value(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def feature_decrease(self, n_features: int) -> np.ndarray:
        out = np.zeros(n_features)
        internal = self.feature >= 0
        np.add.at(out, self.feature[internal], self.decrease[internal])
        return out

    def to_dict(self, feature_names=None) -> dict:
        def node(i):
            d = {
                "samples": int(self.n_samples[i]),
                "impurity": float(self.impurity[i]),
                "value": [float(v) for v in self.value[i]],
            }
            if self.feature[i] < 0:
                return d
            f = int(self.feature[i])
            d.update(
                feature=f,
                feature_name=feature_names[f] if feature_names is not None else f"x[{f}]",
                threshold=float(self.threshold[i]),
                impurity_decrease=float(self.decrease[i]),
                left=node(self.left[i]),
                right=node(self.right[i]),
            )
            return d

        return node(0)

    @classmethod
    def from_dict(cls, root: dict) -> "Tree":
        cols = {k: [] for k in ("feature", "threshold", "left", "right", "value", "n", "imp", "dec")}

        def visit(d):
            i = len(cols["feature"])
            cols["feature"].append(d.get("feature", -1))
            cols["threshold"].append(d.get("threshold", 0.0))
            cols["left"].append(-1)
            cols["right"].append(-1)
            cols["value"].append(d["value"])
            cols["n"].append(d["samples"])
            cols["imp"].append(d.get("impurity", 0.0))
            cols["dec"].append(d.get("impurity_decrease", 0.0))
            if "left" in d:
                cols["left"][i] = visit(d["left"])
                cols["right"][i] = visit(d["right"])
            return i

        visit(root)
        return cls(cols["feature"], cols["threshold"], cols["left"], cols["right"],
                   cols["value"], cols["n"], cols["imp"], cols["dec"])


class TreeBuilder:
    """Depth-first greedy grower shared by every tree learner.

    ``leaf_value(rows)`` returns the vector stored in a leaf and
    ``impurity(rows)`` the node impurity (a node with zero impurity is not
    split).  ``max_features`` limits the candidate features per split;
    ``rng`` draws them.  ``split_finder`` may replace the exhaustive search
    (extra trees use a randomised one).
    """

    def __init__(self, stats, denom, leaf_value, impurity, max_depth=None, min_samples_leaf=1,
                 lam=0.0, gamma=0.0, score_scale=1.0, max_features=None, rng=None, split_finder=None):
        self.stats = np.ascontiguousarray(stats, dtype=float)
        if self.stats.ndim == 1:
            self.stats = self.stats[:, None]
        self.denom = np.ascontiguousarray(denom, dtype=float)
        self.leaf_value = leaf_value
        self.impurity = impurity
        self.max_depth = max_depth
        self.min_samples_leaf = int(min_samples_leaf)
        self.lam = float(lam)
        self.gamma = float(gamma)
        self.score_scale = float(score_scale)
        self.max_features = max_features
        self.rng = rng
        self.split_finder = split_finder

    def _candidates(self, p):
        if self.max_features is None or self.max_features >= p:
            return np.arange(p), np.empty(0, dtype=np.int64)
        perm = self.rng.permutation(p)
        return perm[: self.max_features], perm[self.max_features:]

    def _find(self, X, rows, features):
        if self.split_finder is not None:
            return self.split_finder(X, rows, self.stats, self.denom, features, self.lam, self.min_samples_leaf)
        return best_split(X, rows, self.stats, self.denom, features, self.lam, self.min_samples_leaf)

    def build(self, X, rows=None) -> Tree:
        X = np.ascontiguousarray(as_matrix(X))
        if X.shape[0] == 0:
            raise EmptyInputError("cannot fit a tree on zero samples")
        rows = np.arange(X.shape[0], dtype=np.int64) if rows is None else np.asarray(rows, dtype=np.int64)
        p = X.shape[1]
        feature, threshold, left, right, value, n_samples, impurity, decrease = ([] for _ in range(8))
        stack = [(rows, 0, None, None)]
        while stack:
            node_rows, depth, parent, side = stack.pop()
            i = len(feature)
            if parent is not None:
                (left if side == "L" else right)[parent] = i
            imp = float(self.impurity(node_rows))
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(np.atleast_1d(self.leaf_value(node_rows)))
            n_samples.append(len(node_rows))
            impurity.append(imp)
            decrease.append(0.0)
            if (self.max_depth is not None and depth >= self.max_depth) or imp <= 0.0 \
                    or len(node_rows) < 2 * self.min_samples_leaf:
                continue
            first, rest = self._candidates(p)
            found = self._find(X, node_rows, first)
            if found is None and rest.size:
                found = self._find(X, node_rows, rest)
            if found is None:
                continue
            f, thr, score = found
            parent_score = node_score(node_rows, self.stats, self.denom, self.lam)
            gain = self.score_scale * (score - parent_score) - self.gamma
            if not gain > 0.0:
                continue
            feature[i] = f
            threshold[i] = thr
            decrease[i] = gain
            mask = X[node_rows, f] <= thr
            # right pushed first so the left subtree is numbered first
            stack.append((node_rows[~mask], depth + 1, i, "R"))
            stack.append((node_rows[mask], depth + 1, i, "L"))
        return Tree(feature, threshold, left, right, value, n_samples, impurity, decrease)


def _check_xy(X, y):
    X = as_matrix(X)
    y = np.asarray(y, dtype=float)
    if X.shape[0] == 0 or y.size == 0:
        raise EmptyInputError("empty training data")
    if y.shape != (X.shape[0],):
        raise InvalidParameterError("X and y have different lengths")
    return X, y


def check_labels(labels) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.size and not np.all((labels == 0) | (labels == 1)):
        raise InvalidParameterError("labels must be 0 or 1")
    return labels.astype(np.int64)


def regression_builder(y, w=None, **kw) -> TreeBuilder:
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if w is None else np.asarray(w, dtype=float)
    wy = w * y

    def leaf(rows):
        return np.sum(wy[rows]) / np.sum(w[rows])

    def impurity(rows):
        yy = y[rows]
        if np.all(yy == yy[0]):
            return 0.0
        ww = w[rows]
        mu = np.sum(ww * y[rows]) / np.sum(ww)
        return float(np.sum(ww * (y[rows] - mu) ** 2) / np.sum(ww))

    return TreeBuilder(wy, w, leaf, impurity, **kw)


def classification_builder(labels, w=None, **kw) -> TreeBuilder:
    labels = check_labels(labels)
    w = np.ones(labels.shape, dtype=float) if w is None else np.asarray(w, dtype=float)
    onehot = np.column_stack([w * (labels == 0), w * (labels == 1)])

    def leaf(rows):
        return onehot[rows].sum(axis=0) / np.sum(w[rows])

    def impurity(rows):
        p = leaf(rows)
        return float(np.sum(p * (1.0 - p)))

    return TreeBuilder(onehot, w, leaf, impurity, **kw)


def gini(labels) -> float:
    """Gini impurity ``sum_i p_i (1 - p_i)`` of a label vector."""
    labels = np.asarray(labels)
    if labels.size == 0:
        return 0.0
    _, counts = np.unique(labels, return_counts=True)
    p = counts / labels.size
    return float(np.sum(p * (1.0 - p)))


class TreeModelMixin:
    """Importance and export for models holding a list of :class:`Tree`."""

    trees: list
    n_features: int
    feature_names = None

    def _all_trees(self):
        return self.trees

    def feature_importances(self) -> np.ndarray:
        total = np.zeros(self.n_features)
        for t in self._all_trees():
            total += t.feature_decrease(self.n_features)
        s = total.sum()
        return total / s if s > 0 else total

    def export_json(self) -> str:
        names = self.feature_names
        return json.dumps(
            {"kind": self.kind, "trees": [t.to_dict(names) for t in self._all_trees()]},
            indent=2, sort_keys=True,
        )

    def export_text(self) -> str:
        names = self.feature_names
        return "\n\n".join(render_text(t, names) for t in self._all_trees())


def render_text(tree: Tree, feature_names=None) -> str:
    lines = []

    def fmt_value(v):
        return "[" + ", ".join(f"{x:.6g}" for x in v) + "]" if len(v) > 1 else f"{v[0]:.6g}"

    def visit(i, indent):
        pad = "  " * indent
        if tree.feature[i] < 0:
            lines.append(f"{pad}leaf: value={fmt_value(tree.value[i])} samples={tree.n_samples[i]}")
            return
        f = int(tree.feature[i])
        name = feature_names[f] if feature_names is not None else f"x[{f}]"
        lines.append(
            f"{pad}{name} <= {tree.threshold[i]:.6g} samples={tree.n_samples[i]} "
            f"value={fmt_value(tree.value[i])}"
        )
        visit(tree.left[i], indent + 1)
        visit(tree.right[i], indent + 1)

    visit(0, 0)
    return "\n".join(lines)


@register
class DecisionTreeRegressor(TreeModelMixin, FittedModel):
    kind = "decision_tree_regressor"

    def __init__(self, tree: Tree, n_features: int, feature_names=None):
        self.tree = tree
        self.trees = [tree]
        self.n_features = n_features
        self.feature_names = feature_names

    def predict(self, X):
        return self.tree.predict_value(X)[:, 0]

    def to_dict(self):
        return {"kind": self.kind, "n_features": self.n_features, "feature_names": self.feature_names,
                "tree": self.tree.to_dict(self.feature_names)}

    @classmethod
    def from_dict(cls, d):
        return cls(Tree.from_dict(d["tree"]), d["n_features"], d.get("feature_names"))


@register
class DecisionTreeClassifier(TreeModelMixin, FittedModel):
    kind = "decision_tree_classifier"
    is_classifier = True

    def __init__(self, tree: Tree, n_features: int, feature_names=None):
        self.tree = tree
        self.trees = [tree]
        self.n_features = n_features
        self.feature_names = feature_names

    def decision_score(self, X):
        return self.tree.predict_value(X)[:, 1]

    def predict(self, X):
        return (self.decision_score(X) > 0.5).astype(np.int64)

    def to_dict(self):
        return {"kind": self.kind, "n_features": self.n_features, "feature_names": self.feature_names,
                "tree": self.tree.to_dict(self.feature_names)}

    @classmethod
    def from_dict(cls, d):
        return cls(Tree.from_dict(d["tree"]), d["n_features"], d.get("feature_names"))


def _check_depth(max_depth, min_samples_leaf):
    if max_depth is not None and max_depth < 0:
        raise InvalidParameterError("max_depth must be >= 0")
    if min_samples_leaf < 1:
        raise InvalidParameterError("min_samples_leaf must be >= 1")


def fit_cart_regressor(X, y, max_depth=None, min_samples_leaf=1, sample_weight=None, feature_names=None):
    """Regression tree minimising weighted child MSE at each split."""
    X, y = _check_xy(X, y)
    _check_depth(max_depth, min_samples_leaf)
    builder = regression_builder(y, sample_weight, max_depth=max_depth, min_samples_leaf=min_samples_leaf)
    return DecisionTreeRegressor(builder.build(X), X.shape[1], feature_names)


def fit_cart_classifier(X, labels, max_depth=None, min_samples_leaf=1, sample_weight=None, feature_names=None):
    """Gini classification tree; leaves hold class proportions."""
    X = as_matrix(X)
    labels = check_labels(labels)
    if X.shape[0] == 0:
        raise EmptyInputError("empty training data")
    _check_depth(max_depth, min_samples_leaf)
    builder = classification_builder(labels, sample_weight, max_depth=max_depth, min_samples_leaf=min_samples_leaf)
    return DecisionTreeClassifier(builder.build(X), X.shape[1], feature_names)


def feature_importance(model) -> np.ndarray:
    """Normalised total impurity decrease per feature."""
    if not isinstance(model, TreeModelMixin):
        raise UnsupportedOperationError(f"{getattr(model, 'kind', type(model).__name__)} is not tree-based")
    return model.feature_importances()


def export_tree_structure(model, fmt="json") -> str:
    if not isinstance(model, TreeModelMixin):
        raise UnsupportedOperationError(f"{getattr(model, 'kind', type(model).__name__)} is not tree-based")
    if fmt == "json":
        return model.export_json()
    if fmt == "text":
        return model.export_text()
    raise ValueError(f"unknown export format {fmt!r}")


def parse_tree_structure(text: str) -> list:
    """Inverse of :func:`export_tree_structure` (JSON form): list of trees."""
    return [Tree.from_dict(t) for t in json.loads(text)["trees"]]
