"""Logistic regression (full-batch), SGD logistic classifier and k-NN."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .boosting import sigmoid
from .errors import InvalidParameterError
from .models import FittedModel, as_matrix, register
from .rng import stream
from .tree import check_labels


@dataclass(frozen=True)
class LogisticParams:
    learning_rate: float = 0.1
    n_epochs: int = 500
    l2: float = 0.0
    threshold: float = 0.5

    def validate(self):
        if not self.learning_rate > 0:
            raise InvalidParameterError("learning_rate must be > 0")
        if self.n_epochs < 0:
            raise InvalidParameterError("n_epochs must be >= 0")
        if self.l2 < 0:
            raise InvalidParameterError("l2 must be >= 0")
        if not 0.0 < self.threshold < 1.0:
            raise InvalidParameterError("threshold must lie in (0, 1)")


def log_loss(y, z, coef=None, l2=0.0) -> float:
    """Mean negative log-likelihood for logits ``z`` plus optional L2 term."""
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    if coef is not None and l2:
        loss += 0.5 * l2 * float(coef @ coef)
    return loss


@register
class LogisticModel(FittedModel):
    """``P(y=1 | x) = sigmoid(intercept + coef . x)``."""

    kind = "logistic"
    is_classifier = True

    def __init__(self, coef, intercept, threshold=0.5, loss_history=None, name="logistic", params=None):
        self.coef = np.asarray(coef, dtype=float)
        self.intercept = float(intercept)
        self.threshold = float(threshold)
        self.loss_history = list(loss_history or [])
        self.name = name
        self.params = params or {}
        if not (np.all(np.isfinite(self.coef)) and np.isfinite(self.intercept)):
            raise InvalidParameterError("non-finite logistic coefficients")

    def logit(self, X):
        return as_matrix(X) @ self.coef + self.intercept

    def predict_proba(self, X):
        return sigmoid(self.logit(X))

    decision_score = predict_proba

    def predict(self, X):
        return (self.predict_proba(X) >= self.threshold).astype(np.int64)

    def to_dict(self):
        return {"kind": self.kind, "name": self.name, "coef": self.coef.tolist(), "intercept": self.intercept,
                "threshold": self.threshold, "params": self.params, "loss_history": self.loss_history}

    @classmethod
    def from_dict(cls, d):
        return cls(d["coef"], d["intercept"], d.get("threshold", 0.5), d.get("loss_history"), d.get("name", "logistic"),
                   d.get("params"))


def _xl(X, labels):
    X = as_matrix(X)
    y = check_labels(labels).astype(float)
    if y.shape != (X.shape[0],) or X.shape[0] == 0:
        raise InvalidParameterError("X and labels must be non-empty with equal lengths")
    return X, y


def fit_logistic(X, labels, params: LogisticParams = LogisticParams()) -> LogisticModel:
    """Full-batch gradient descent on the mean negative log-likelihood."""
    params.validate()
    X, y = _xl(X, labels)
    n, p = X.shape
    w = np.zeros(p)
    b = 0.0
    history = [log_loss(y, X @ w + b, w, params.l2)]
    for _ in range(params.n_epochs):
        r = sigmoid(X @ w + b) - y
        gw = X.T @ r / n + params.l2 * w
        gb = float(np.mean(r))
        w = w - params.learning_rate * gw
        b = b - params.learning_rate * gb
        history.append(log_loss(y, X @ w + b, w, params.l2))
    return LogisticModel(w, b, params.threshold, history, "logistic", asdict(params))


def fit_sgd_classifier(X, labels, learning_rate=0.1, n_epochs=500, seed=0, fit_intercept=True) -> LogisticModel:
    """Per-sample logistic-loss SGD, reshuffled every epoch from the seeded stream.

    ``loss_history[e]`` is the full-data log loss after ``e`` epochs.
    """
    if not learning_rate > 0:
        raise InvalidParameterError("learning_rate must be > 0")
    if n_epochs < 0:
        raise InvalidParameterError("n_epochs must be >= 0")
    X, y = _xl(X, labels)
    n, p = X.shape
    w = np.zeros(p)
    b = 0.0
    history = [log_loss(y, X @ w + b)]
    for epoch in range(n_epochs):
        for i in stream(seed, "sgd-shuffle", epoch).permutation(n):
            err = float(sigmoid(np.array([X[i] @ w + b]))[0]) - y[i]
            w = w - learning_rate * err * X[i]
            if fit_intercept:
                b = b - learning_rate * err
        history.append(log_loss(y, X @ w + b))
    params = {"learning_rate": learning_rate, "n_epochs": n_epochs, "seed": seed, "fit_intercept": fit_intercept}
    return LogisticModel(w, b, 0.5, history, "sgd", params)


def knn_predict(train_X, train_labels, query, k):
    """Majority vote among the ``k`` nearest training points.

    Returns ``(labels, scores)`` where score is the fraction of class-1
    neighbours.  Distance ties go to the lower training index; vote ties to
    the class whose neighbours are nearer on average, then to class 0.
    """
    train_X = as_matrix(train_X)
    train_labels = check_labels(train_labels)
    query = as_matrix(query)
    n = train_X.shape[0]
    if not 1 <= k <= n:
        raise InvalidParameterError(f"k must lie in [1, {n}], got {k}")
    if query.shape[1] != train_X.shape[1]:
        raise InvalidParameterError("query has the wrong number of features")
    d = np.sqrt(((query[:, None, :] - train_X[None, :, :]) ** 2).sum(axis=2))
    nearest = np.argsort(d, axis=1, kind="stable")[:, :k]
    labels = np.empty(len(query), dtype=np.int64)
    scores = np.empty(len(query))
    for q in range(len(query)):
        nb = nearest[q]
        lab = train_labels[nb]
        ones = int(lab.sum())
        zeros = k - ones
        scores[q] = ones / k
        if ones != zeros:
            labels[q] = int(ones > zeros)
        else:
            d1 = d[q, nb][lab == 1].mean()
            d0 = d[q, nb][lab == 0].mean()
            labels[q] = 1 if d1 < d0 else 0
    return labels, scores


@register
class KNNClassifier(FittedModel):
    kind = "knn"
    is_classifier = True

    def __init__(self, train_X, train_labels, k=5):
        self.train_X = as_matrix(train_X).copy()
        self.train_labels = check_labels(train_labels)
        self.k = int(k)
        if not 1 <= self.k <= len(self.train_labels):
            raise InvalidParameterError(f"k must lie in [1, {len(self.train_labels)}], got {k}")

    def predict(self, X):
        return knn_predict(self.train_X, self.train_labels, X, self.k)[0]

    def decision_score(self, X):
        return knn_predict(self.train_X, self.train_labels, X, self.k)[1]

    def to_dict(self):
        return {"kind": self.kind, "k": self.k, "train_X": self.train_X.tolist(),
                "train_labels": self.train_labels.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["train_X"], d["train_labels"], d["k"])


def euclidean_distance(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.sqrt(np.sum((a - b) ** 2)))
