"""Support vector regression and classification trained by SMO.

Both problems are written as

    minimise    0.5 a^T Q a + p^T a
    subject to  y^T a = const,  0 <= a_t <= C

with ``y_t`` in {-1, +1}.  Classification uses ``Q = (y y^T) * K`` and
``p = -1``.  Epsilon-SVR doubles the variables, ``a = [alpha; alpha*]``,
``y = [+1..; -1..]`` and ``p = [eps - z; eps + z]``.  The solver picks the
maximal violating pair with second-order working-set selection and does an
exact clipped line search, so the dual objective never decreases.
"""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidParameterError
from .models import FittedModel, as_matrix, register
from .tree import check_labels

TAU = 1e-12


@dataclass(frozen=True)
class SvmParams:
    C: float = 1.0
    epsilon: float = 0.1
    kernel: str = "rbf"
    gamma: float | None = None  # None: 1 / (n_features * X.var())
    tolerance: float = 1e-3
    max_passes: int = 1000

    def validate(self):
        if not self.C > 0:
            raise InvalidParameterError("C must be > 0")
        if self.epsilon < 0:
            raise InvalidParameterError("epsilon must be >= 0")
        if self.kernel not in ("linear", "rbf"):
            raise InvalidParameterError(f"unknown kernel {self.kernel!r}")
        if self.gamma is not None and not self.gamma > 0:
            raise InvalidParameterError("gamma must be > 0")
        if not self.tolerance > 0:
            raise InvalidParameterError("tolerance must be > 0")
        if self.max_passes < 0:
            raise InvalidParameterError("max_passes must be >= 0")


def resolve_gamma(params: SvmParams, X) -> float:
    if params.gamma is not None:
        return float(params.gamma)
    var = float(np.var(X))
    return 1.0 / (X.shape[1] * var) if var > 0 else 1.0


def kernel_matrix(A, B, kernel, gamma):
    A = as_matrix(A)
    B = as_matrix(B)
    if kernel == "linear":
        return A @ B.T
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
    return np.exp(-gamma * np.maximum(sq, 0.0))


@dataclass
class SmoResult:
    alpha: np.ndarray
    rho: float
    objective_history: list
    iterations: int
    converged: bool


def smo_solve(Q, p, y, C, tol, max_iter) -> SmoResult:
    """Second-order SMO.  ``objective_history`` holds the dual objective
    ``-(0.5 a^T Q a + p^T a)`` before the first and after every update."""
    n = len(p)
    a = np.zeros(n)
    G = p.astype(float).copy()
    QD = np.diag(Q).copy()
    history = [0.0]
    converged = False
    it = 0

    def objective():
        return float(-(0.5 * a @ (G + p)))  # a^T Q a = a^T (G - p)

    while it < max_iter:
        yG = -y * G
        up = ((y > 0) & (a < C)) | ((y < 0) & (a > 0))
        low = ((y > 0) & (a > 0)) | ((y < 0) & (a < C))
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.flatnonzero(up)[np.argmax(yG[up])])
        gmax = yG[i]
        gmin = yG[low].min()
        if gmax - gmin < tol:
            converged = True
            break
        cand = low & (yG < gmax)
        b = gmax - yG[cand]
        quad = QD[i] + QD[cand] - 2.0 * y[i] * y[cand] * Q[i, cand]
        quad = np.where(quad > 0, quad, TAU)
        idx = np.flatnonzero(cand)
        j = int(idx[np.argmin(-(b * b) / quad)])

        ai_old, aj_old = a[i], a[j]
        Qi, Qj = Q[i], Q[j]
        if y[i] != y[j]:
            quad_ij = QD[i] + QD[j] + 2.0 * Qi[j]
            delta = (-G[i] - G[j]) / max(quad_ij, TAU)
            diff = a[i] - a[j]
            a[i] += delta
            a[j] += delta
            if diff > 0:
                if a[j] < 0:
                    a[j] = 0.0
                    a[i] = diff
            else:
                if a[i] < 0:
                    a[i] = 0.0
                    a[j] = -diff
            if diff > 0:
                if a[i] > C:
                    a[i] = C
                    a[j] = C - diff
            else:
                if a[j] > C:
                    a[j] = C
                    a[i] = C + diff
        else:
            quad_ij = QD[i] + QD[j] - 2.0 * Qi[j]
            delta = (G[i] - G[j]) / max(quad_ij, TAU)
            total = a[i] + a[j]
            a[i] -= delta
            a[j] += delta
            if total > C:
                if a[i] > C:
                    a[i] = C
                    a[j] = total - C
            else:
                if a[j] < 0:
                    a[j] = 0.0
                    a[i] = total
            if total > C:
                if a[j] > C:
                    a[j] = C
                    a[i] = total - C
            else:
                if a[i] < 0:
                    a[i] = 0.0
                    a[j] = total
        G += Qi * (a[i] - ai_old) + Qj * (a[j] - aj_old)
        it += 1
        history.append(objective())

    if it == 0:
        rho = 0.0
    else:
        yG = y * G
        free = (a > 0) & (a < C)
        if free.any():
            rho = float(yG[free].mean())
        else:
            ub, lb = np.inf, -np.inf
            at_upper = a >= C
            at_lower = a <= 0
            # bounds on rho from the variables stuck at either end
            sel_ub = (at_upper & (y < 0)) | (at_lower & (y > 0))
            sel_lb = (at_upper & (y > 0)) | (at_lower & (y < 0))
            if sel_ub.any():
                ub = yG[sel_ub].min()
            if sel_lb.any():
                lb = yG[sel_lb].max()
            rho = float((ub + lb) / 2.0) if np.isfinite(ub) and np.isfinite(lb) else float(
                ub if np.isfinite(ub) else lb)
    return SmoResult(a, rho, history, it, converged)


class _KernelModel(FittedModel):
    def __init__(self, support, coef, bias, params: dict, gamma, n_features, objective_history=None,
                 converged=True, iterations=0):
        self.support = np.asarray(support, dtype=float).reshape(-1, n_features)
        self.coef = np.asarray(coef, dtype=float)
        self.bias = float(bias)
        self.params = dict(params)
        self.gamma = float(gamma)
        self.n_features = n_features
        self.objective_history = list(objective_history or [])
        self.converged = converged
        self.iterations = iterations

    @property
    def n_support(self):
        return len(self.coef)

    def raw(self, X):
        X = as_matrix(X)
        if self.n_support == 0:
            return np.full(X.shape[0], self.bias)
        return kernel_matrix(X, self.support, self.params["kernel"], self.gamma) @ self.coef + self.bias

    def to_dict(self):
        return {"kind": self.kind, "params": self.params, "gamma": self.gamma, "n_features": self.n_features,
                "support_vectors": self.support.tolist(), "dual_coef": self.coef.tolist(), "bias": self.bias,
                "converged": self.converged, "iterations": self.iterations}

    @classmethod
    def from_dict(cls, d):
        return cls(d["support_vectors"], d["dual_coef"], d["bias"], d["params"], d["gamma"], d["n_features"],
                   converged=d.get("converged", True), iterations=d.get("iterations", 0))


@register
class SupportVectorRegressor(_KernelModel):
    kind = "svr"

    def predict(self, X):
        return self.raw(X)


@register
class SupportVectorClassifier(_KernelModel):
    kind = "svc"
    is_classifier = True

    def decision_score(self, X):
        return self.raw(X)

    def predict(self, X):
        return (self.raw(X) >= 0).astype(np.int64)


def _warn_unscaled(X):
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    live = sd > 0
    if np.any(np.abs(mu) > 0.5) or np.any((sd[live] < 0.5) | (sd[live] > 2.0)):
        warnings.warn("SVM inputs do not look standardised", stacklevel=3)


def _finish(kind, X, res: SmoResult, coef_full, params: SvmParams, gamma):
    if not res.converged:
        warnings.warn(f"SMO stopped after {res.iterations} iterations without meeting the KKT tolerance",
                      RuntimeWarning, stacklevel=3)
    keep = np.abs(coef_full) > 0
    cls = SupportVectorRegressor if kind == "svr" else SupportVectorClassifier
    return cls(X[keep], coef_full[keep], 0.0 - res.rho, asdict(params), gamma, X.shape[1], res.objective_history,
               res.converged, res.iterations)


def fit_svr(X, y, params: SvmParams = SvmParams()):
    """Epsilon-insensitive support vector regression."""
    params.validate()
    X = as_matrix(X)
    z = np.asarray(y, dtype=float)
    n = X.shape[0]
    if n < 2 or z.shape != (n,):
        raise InvalidParameterError("need at least 2 samples and matching targets")
    _warn_unscaled(X)
    gamma = resolve_gamma(params, X)
    K = kernel_matrix(X, X, params.kernel, gamma)
    ys = np.concatenate([np.ones(n), -np.ones(n)])
    KK = np.block([[K, K], [K, K]])
    Q = ys[:, None] * ys[None, :] * KK
    p = np.concatenate([params.epsilon - z, params.epsilon + z])
    res = smo_solve(Q, p, ys, params.C, params.tolerance, params.max_passes * 2 * n)
    coef = res.alpha[:n] - res.alpha[n:]
    return _finish("svr", X, res, coef, params, gamma)


def fit_svc(X, labels, params: SvmParams = SvmParams()):
    """Soft-margin C-SVM; labels 0/1 are mapped to -1/+1."""
    params.validate()
    X = as_matrix(X)
    labels = check_labels(labels)
    if labels.shape != (X.shape[0],):
        raise InvalidParameterError("X and labels have different lengths")
    if np.unique(labels).size < 2:
        raise InvalidParameterError("SVC needs both classes in the training data")
    _warn_unscaled(X)
    y = np.where(labels == 1, 1.0, -1.0)
    n = len(y)
    gamma = resolve_gamma(params, X)
    K = kernel_matrix(X, X, params.kernel, gamma)
    Q = y[:, None] * y[None, :] * K
    res = smo_solve(Q, -np.ones(n), y, params.C, params.tolerance, params.max_passes * n)
    return _finish("svc", X, res, y * res.alpha, params, gamma)
