"""Common surface for fitted predictors and their JSON round-trip."""
from __future__ import annotations

import numpy as np

from .errors import UnsupportedOperationError

_REGISTRY: dict = {}


def register(cls):
    _REGISTRY[cls.kind] = cls
    return cls


def model_from_dict(d: dict) -> "FittedModel":
    try:
        cls = _REGISTRY[d["kind"]]
    except KeyError:
        raise ValueError(f"unknown model kind {d.get('kind')!r}") from None
    return cls.from_dict(d)


def as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return X


class FittedModel:
    """A trained predictor.

    Regressors implement :meth:`predict`.  Classifiers additionally
    implement :meth:`decision_score`, a ranking score used for ROC curves;
    :meth:`predict` returns 0/1 labels.
    """

    kind = "model"
    is_classifier = False

    def predict(self, X) -> np.ndarray:
        raise NotImplementedError

    def decision_score(self, X) -> np.ndarray:
        raise UnsupportedOperationError(f"{self.kind} does not produce classification scores")

    def feature_importances(self) -> np.ndarray:
        raise UnsupportedOperationError(f"{self.kind} is not tree-based")

    def to_dict(self) -> dict:
        raise NotImplementedError

    @classmethod
    def from_dict(cls, d: dict):
        raise NotImplementedError
