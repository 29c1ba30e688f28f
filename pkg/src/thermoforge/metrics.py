"""Regression and binary-classification metrics plus diagnostic series."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError


@dataclass(frozen=True)
class RegressionMetrics:
    mse: float
    mae: float
    rmse: float
    r2: float
    n: int
    r2_undefined: bool = False  # constant truth with a non-zero error

    def to_dict(self):
        return {"mse": self.mse, "mae": self.mae, "rmse": self.rmse, "r2": self.r2, "n": self.n,
                "r2_undefined": self.r2_undefined}


@dataclass(frozen=True)
class ClassificationMetrics:
    accuracy: float
    f1: float
    roc_auc: float | None
    confusion: tuple  # (TN, FP, FN, TP)
    f1_undefined: bool = False
    n: int = 0

    def to_dict(self):
        tn, fp, fn, tp = self.confusion
        return {"accuracy": self.accuracy, "f1": self.f1, "roc_auc": self.roc_auc, "f1_undefined": self.f1_undefined,
                "confusion": {"tn": tn, "fp": fp, "fn": fn, "tp": tp}, "n": self.n}


# R^2 stand-in when the truth is constant but the predictions miss it
R2_UNDEFINED = -1.0e300


def _pair(a, b):
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise InvalidParameterError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise InvalidParameterError("metrics need at least one sample")
    return a, b


def regression_metrics(y_true, y_pred) -> RegressionMetrics:
    y, p = _pair(y_true, y_pred)
    err = y - p
    mse = float(np.mean(err**2))
    mae = float(np.mean(np.abs(err)))
    ss_res = float(np.sum(err**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    undefined = False
    if ss_tot > 0:
        r2 = 1.0 - ss_res / ss_tot
    elif ss_res == 0:
        r2 = 0.0
    else:
        r2, undefined = R2_UNDEFINED, True
    return RegressionMetrics(mse, mae, math.sqrt(mse), r2, int(y.size), undefined)


def _labels(a, name):
    a = np.asarray(a).ravel()
    if not np.all((a == 0) | (a == 1)):
        raise InvalidParameterError(f"{name} must be binary 0/1")
    return a.astype(np.int64)


def confusion_matrix(labels_true, labels_pred) -> tuple:
    """``(TN, FP, FN, TP)`` with class 1 as the positive class."""
    t = _labels(labels_true, "labels_true")
    p = _labels(labels_pred, "labels_pred")
    if t.shape != p.shape:
        raise InvalidParameterError(f"length mismatch: {t.size} vs {p.size}")
    return (int(np.sum((t == 0) & (p == 0))), int(np.sum((t == 0) & (p == 1))),
            int(np.sum((t == 1) & (p == 0))), int(np.sum((t == 1) & (p == 1))))


def f1_score(confusion) -> tuple:
    """``(f1, undefined)``; F1 is 0 when precision + recall is 0."""
    tn, fp, fn, tp = confusion
    denom = 2 * tp + fp + fn
    if tp == 0:
        return 0.0, True
    return 2.0 * tp / denom, False


def _check_binary_truth(t):
    n_pos = int(t.sum())
    n_neg = t.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise InvalidParameterError("ROC analysis needs both classes in the truth labels")
    return n_pos, n_neg


def roc_auc(labels_true, scores) -> float:
    """Mann-Whitney estimate: ``(wins + 0.5 ties) / (n_pos n_neg)``."""
    t = _labels(labels_true, "labels_true")
    s = np.asarray(scores, dtype=float).ravel()
    if s.shape != t.shape:
        raise InvalidParameterError("scores and labels differ in length")
    n_pos, n_neg = _check_binary_truth(t)
    pos = np.sort(s[t == 1])
    neg = np.sort(s[t == 0])
    below = np.searchsorted(neg, pos, side="left")
    not_above = np.searchsorted(neg, pos, side="right")
    wins = int(below.sum())
    ties = int((not_above - below).sum())
    return (wins + 0.5 * ties) / (n_pos * n_neg)


def classification_metrics(labels_true, labels_pred, scores=None) -> ClassificationMetrics:
    """Accuracy, F1 and confusion always; ROC-AUC when ``scores`` are given.

    A single-class truth makes ROC-AUC undefined: that raises, so callers
    who only need accuracy/F1 should omit ``scores``.
    """
    conf = confusion_matrix(labels_true, labels_pred)
    n = sum(conf)
    if n == 0:
        raise InvalidParameterError("metrics need at least one sample")
    tn, fp, fn, tp = conf
    f1, undefined = f1_score(conf)
    auc = None if scores is None else roc_auc(labels_true, scores)
    return ClassificationMetrics((tp + tn) / n, f1, auc, conf, undefined, n)


def roc_points(labels, scores) -> list:
    """ROC curve vertices, thresholds swept over distinct scores descending."""
    t = _labels(labels, "labels")
    s = np.asarray(scores, dtype=float).ravel()
    if s.shape != t.shape:
        raise InvalidParameterError("scores and labels differ in length")
    n_pos, n_neg = _check_binary_truth(t)
    order = np.argsort(-s, kind="stable")
    s, t = s[order], t[order]
    points = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    while i < len(s):
        j = i
        while j < len(s) and s[j] == s[i]:
            tp += int(t[j])
            fp += 1 - int(t[j])
            j += 1
        points.append((fp / n_neg, tp / n_pos))
        i = j
    return points


def trapezoid_area(points) -> float:
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points[:-1], points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


def residual_series(y_true, y_pred) -> list:
    """``(prediction, actual - prediction)`` per sample, in input order."""
    y, p = _pair(y_true, y_pred)
    return list(zip(p.tolist(), (y - p).tolist()))


# Acklam's rational approximation to the standard normal quantile
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00, 3.754408661907416e00)
_P_LOW = 0.02425


def _acklam(p):
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return ((((( _C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    if p > 1.0 - _P_LOW:
        return -_acklam(1.0 - p)
    q = p - 0.5
    r = q * q
    return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
        (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF.

    Acklam's approximation (relative error about 1e-9) followed by one
    Halley step against ``erfc``, which brings it to machine precision.
    """
    if not 0.0 < p < 1.0:
        raise InvalidParameterError("probability must lie in (0, 1)")
    if p == 0.5:
        return 0.0
    x = _acklam(p)
    e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(x * x / 2.0)
    return x - u / (1.0 + x * u / 2.0)


def qq_points(residuals) -> list:
    """``(theoretical quantile, standardized residual)`` pairs, both ascending.

    Plotting positions are ``(i - 0.5) / n``; residuals are standardized
    with the population standard deviation (left centred if it is zero).
    """
    r = np.asarray(residuals, dtype=float).ravel()
    n = r.size
    if n < 3:
        raise InvalidParameterError("Q-Q points need at least 3 residuals")
    sd = float(r.std())
    z = np.sort((r - r.mean()) / sd if sd > 0 else r - r.mean())
    return [(normal_quantile((i + 0.5) / n), float(z[i])) for i in range(n)]
