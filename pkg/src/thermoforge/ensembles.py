"""Bagged and adaptively boosted tree ensembles.

Random forests, extremely randomised trees and AdaBoost (discrete AdaBoost
for labels, AdaBoost.R2 with linear loss for regression).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import EmptyInputError, InvalidParameterError
from .models import FittedModel, as_matrix, register
from .rng import stream
from .tree import (
    Tree,
    TreeModelMixin,
    check_labels,
    classification_builder,
    regression_builder,
)

REGRESSION = "regression"
CLASSIFICATION = "classification"


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int | None = 6
    min_samples_leaf: int = 1
    feature_subset_size: int | None = None  # None: ceil(p/3) regression, ceil(sqrt(p)) classification
    bootstrap: bool = True
    seed: int = 0

    def subset_size(self, n_features: int, task: str) -> int:
        if self.feature_subset_size is not None:
            k = self.feature_subset_size
        elif task == CLASSIFICATION:
            k = math.ceil(math.sqrt(n_features))
        else:
            k = math.ceil(n_features / 3)
        if not 1 <= k <= n_features:
            raise InvalidParameterError(f"feature_subset_size must be in [1, {n_features}], got {k}")
        return k

    def validate(self):
        if self.n_trees < 1:
            raise InvalidParameterError("n_trees must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise InvalidParameterError("max_depth must be >= 0")
        if self.min_samples_leaf < 1:
            raise InvalidParameterError("min_samples_leaf must be >= 1")


def _prepare(X, y, task):
    X = np.ascontiguousarray(as_matrix(X))
    if X.shape[0] == 0:
        raise EmptyInputError("empty training data")
    if task == CLASSIFICATION:
        y = check_labels(y)
    elif task == REGRESSION:
        y = np.asarray(y, dtype=float)
    else:
        raise InvalidParameterError(f"unknown task {task!r}")
    if y.shape != (X.shape[0],):
        raise InvalidParameterError("X and y have different lengths")
    return X, y


def _builder(task, y, w=None, **kw):
    return (classification_builder if task == CLASSIFICATION else regression_builder)(y, w, **kw)


class _TreeEnsemble(TreeModelMixin, FittedModel):
    def __init__(self, trees, n_features, task, feature_names=None, config=None):
        self.trees = list(trees)
        self.n_features = n_features
        self.task = task
        self.is_classifier = task == CLASSIFICATION
        self.feature_names = feature_names
        self.config = config or {}

    def _tree_votes(self, X):
        X = as_matrix(X)
        return np.stack([t.predict_value(X)[:, 1] > 0.5 for t in self.trees]).astype(float)

    def predict(self, X):
        if self.is_classifier:
            return (self.decision_score(X) > 0.5).astype(np.int64)
        X = as_matrix(X)
        return np.mean([t.predict_value(X)[:, 0] for t in self.trees], axis=0)

    def decision_score(self, X):
        if not self.is_classifier:
            return super().decision_score(X)
        return self._tree_votes(X).mean(axis=0)

    def to_dict(self):
        return {
            "kind": self.kind,
            "task": self.task,
            "n_features": self.n_features,
            "feature_names": self.feature_names,
            "config": self.config,
            "trees": [t.to_dict(self.feature_names) for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d):
        return cls([Tree.from_dict(t) for t in d["trees"]], d["n_features"], d["task"],
                   d.get("feature_names"), d.get("config"))


@register
class RandomForest(_TreeEnsemble):
    kind = "random_forest"


@register
class ExtraTrees(_TreeEnsemble):
    kind = "extra_trees"


def fit_random_forest(X, y, config: ForestConfig = ForestConfig(), task=REGRESSION, feature_names=None):
    """Bootstrap-aggregated CART with a fresh feature subset at every split."""
    config.validate()
    X, y = _prepare(X, y, task)
    n, p = X.shape
    k = config.subset_size(p, task)
    trees = []
    for t in range(config.n_trees):
        rows = stream(config.seed, "bootstrap", t).integers(0, n, size=n) if config.bootstrap else np.arange(n)
        builder = _builder(task, y, max_depth=config.max_depth, min_samples_leaf=config.min_samples_leaf,
                           max_features=k, rng=stream(config.seed, "feature-subset", t))
        trees.append(builder.build(X, np.sort(rows)))
    return RandomForest(trees, p, task, feature_names, asdict(config))


def random_threshold_finder(rng):
    """Split finder drawing one uniform threshold per candidate feature."""

    def find(X, rows, stats, denom, features, lam, min_leaf):
        best = None
        m = len(rows)
        for f in np.sort(features):
            xs = X[rows, f]
            lo, hi = xs.min(), xs.max()
            if not lo < hi:
                continue
            thr = rng.uniform(lo, hi)
            if thr >= hi:
                thr = lo
            mask = xs <= thr
            nl = int(mask.sum())
            if nl < min_leaf or m - nl < min_leaf:
                continue
            sl = stats[rows[mask]].sum(axis=0)
            sr = stats[rows[~mask]].sum(axis=0)
            dl = denom[rows[mask]].sum() + lam
            dr = denom[rows[~mask]].sum() + lam
            if not (dl > 0 and dr > 0):
                continue
            score = float(np.sum(sl * sl) / dl + np.sum(sr * sr) / dr)
            if best is None or score > best[2]:
                best = (int(f), float(thr), score)
        return best

    return find


def fit_extra_trees(X, y, config: ForestConfig = ForestConfig(bootstrap=False), task=REGRESSION,
                    feature_names=None):
    """Extremely randomised trees: random thresholds, full sample per tree by default."""
    config.validate()
    X, y = _prepare(X, y, task)
    n, p = X.shape
    k = config.subset_size(p, task)
    trees = []
    for t in range(config.n_trees):
        rows = stream(config.seed, "bootstrap", t).integers(0, n, size=n) if config.bootstrap else np.arange(n)
        rng = stream(config.seed, "extra-trees", t)
        builder = _builder(task, y, max_depth=config.max_depth, min_samples_leaf=config.min_samples_leaf,
                           max_features=k, rng=rng, split_finder=random_threshold_finder(rng))
        trees.append(builder.build(X, np.sort(rows)))
    return ExtraTrees(trees, p, task, feature_names, asdict(config))


@register
class AdaBoostClassifier(TreeModelMixin, FittedModel):
    """Weighted vote of weak trees; ``decision_score`` is the vote sum."""

    kind = "adaboost_classifier"
    is_classifier = True

    def __init__(self, trees, alphas, n_features, feature_names=None, weight_history=None):
        self.trees = list(trees)
        self.alphas = np.asarray(alphas, dtype=float)
        self.n_features = n_features
        self.feature_names = feature_names
        self.weight_history = weight_history or []

    def decision_score(self, X):
        X = as_matrix(X)
        votes = np.stack([np.where(t.predict_value(X)[:, 1] > 0.5, 1.0, -1.0) for t in self.trees])
        return self.alphas @ votes

    def predict(self, X):
        return (self.decision_score(X) >= 0).astype(np.int64)

    def to_dict(self):
        return {"kind": self.kind, "n_features": self.n_features, "feature_names": self.feature_names,
                "alphas": self.alphas.tolist(), "trees": [t.to_dict(self.feature_names) for t in self.trees]}

    @classmethod
    def from_dict(cls, d):
        return cls([Tree.from_dict(t) for t in d["trees"]], d["alphas"], d["n_features"], d.get("feature_names"))


@register
class AdaBoostRegressor(TreeModelMixin, FittedModel):
    """AdaBoost.R2: weighted median of stage predictions."""

    kind = "adaboost_regressor"

    def __init__(self, trees, stage_weights, n_features, feature_names=None):
        self.trees = list(trees)
        self.stage_weights = np.asarray(stage_weights, dtype=float)
        self.n_features = n_features
        self.feature_names = feature_names

    def predict(self, X):
        X = as_matrix(X)
        preds = np.stack([t.predict_value(X)[:, 0] for t in self.trees], axis=1)  # (n, stages)
        order = np.argsort(preds, axis=1, kind="stable")
        cw = np.cumsum(self.stage_weights[order], axis=1)
        half = 0.5 * cw[:, -1:]
        pick = np.argmax(cw >= half, axis=1)
        return preds[np.arange(len(preds)), order[np.arange(len(preds)), pick]]

    def to_dict(self):
        return {"kind": self.kind, "n_features": self.n_features, "feature_names": self.feature_names,
                "stage_weights": self.stage_weights.tolist(),
                "trees": [t.to_dict(self.feature_names) for t in self.trees]}

    @classmethod
    def from_dict(cls, d):
        return cls([Tree.from_dict(t) for t in d["trees"]], d["stage_weights"], d["n_features"],
                   d.get("feature_names"))


def fit_adaboost(X, y, n_stages=50, base_depth=1, task=CLASSIFICATION, min_samples_leaf=1, feature_names=None):
    """Discrete AdaBoost (labels) or AdaBoost.R2 with linear loss (regression).

    Sample weights are kept normalised to sum 1 and passed to the weak
    learner directly (no resampling), so the fit is deterministic.
    """
    if n_stages < 1:
        raise InvalidParameterError("n_stages must be >= 1")
    X, y = _prepare(X, y, task)
    n, p = X.shape
    w = np.full(n, 1.0 / n)
    history = [w.copy()]
    trees, weights = [], []

    if task == CLASSIFICATION:
        sign = np.where(y == 1, 1.0, -1.0)
        for _ in range(n_stages):
            tree = classification_builder(y, w, max_depth=base_depth, min_samples_leaf=min_samples_leaf).build(X)
            h = np.where(tree.predict_value(X)[:, 1] > 0.5, 1.0, -1.0)
            err = float(np.sum(w[h != sign]))
            if err <= 0.0:
                # a perfect weak learner decides on its own
                trees, weights = [tree], [1.0]
                break
            if err >= 0.5:
                if not trees:
                    trees, weights = [tree], [1.0]
                break
            alpha = 0.5 * math.log((1.0 - err) / err)
            trees.append(tree)
            weights.append(alpha)
            w = w * np.exp(-alpha * sign * h)
            w /= w.sum()
            history.append(w.copy())
        return AdaBoostClassifier(trees, weights, p, feature_names, history)

    for _ in range(n_stages):
        tree = regression_builder(y, w, max_depth=base_depth, min_samples_leaf=min_samples_leaf).build(X)
        err_abs = np.abs(tree.predict_value(X)[:, 0] - y)
        emax = err_abs.max()
        if emax <= 0.0:
            trees, weights = [tree], [1.0]
            break
        loss = err_abs / emax
        avg = float(np.sum(w * loss))
        if avg >= 0.5:
            if not trees:
                trees, weights = [tree], [1.0]
            break
        beta = avg / (1.0 - avg)
        trees.append(tree)
        weights.append(math.log(1.0 / beta))
        w = w * beta ** (1.0 - loss)
        w /= w.sum()
        history.append(w.copy())
    model = AdaBoostRegressor(trees, weights, p, feature_names)
    model.weight_history = history
    return model
