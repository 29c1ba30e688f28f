"""Split search front end.

The scan itself lives in a compiled extension (``_split_core``) with a numpy
fallback (``_split_py``).  The compiled module is used when it imports and
``THERMOFORGE_PURE_PYTHON`` is unset.
"""
import os
from contextlib import contextmanager

import numpy as np

from . import _split_py

BACKEND = "python"
_scan = _split_py.scan_splits
if not os.environ.get("THERMOFORGE_PURE_PYTHON"):
    try:
        from . import _split_core
    except ImportError:  # extension not built
        pass
    else:
        _scan = _split_core.scan_splits
        BACKEND = "compiled"


def set_backend(name: str) -> None:
    """Switch between ``"compiled"`` and ``"python"`` (benchmarks, tests)."""
    global _scan, BACKEND
    if name == "python":
        _scan = _split_py.scan_splits
    elif name == "compiled":
        from . import _split_core

        _scan = _split_core.scan_splits
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = name


def available_backends() -> tuple:
    try:
        from . import _split_core  # noqa: F401
    except ImportError:
        return ("python",)
    return ("compiled", "python")


@contextmanager
def use_backend(name: str):
    """Temporarily select a backend; not thread-safe."""
    previous = BACKEND
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def midpoint(a: float, b: float) -> float:
    t = a + (b - a) / 2.0
    # adjacent floats: the midpoint can round up onto b
    return a if t >= b else t


def best_split(X, rows, stats, denom, features, lam=0.0, min_leaf=1):
    """Return ``(feature, threshold, score)`` or ``None``.

    ``score`` is ``sum_children sum_c S_c**2 / (D + lam)``; the best split
    maximises it.  Candidates are midpoints between consecutive distinct
    sorted values; ties (scores within a relative ``TIE_RTOL`` of the best)
    go to the lower feature index, then the lower threshold.
    """
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    features = np.ascontiguousarray(np.sort(np.asarray(features, dtype=np.int64)))
    if rows.size < 2 or features.size == 0:
        return None
    sub = X[np.ix_(rows, features)]
    order = np.ascontiguousarray(np.argsort(sub, axis=0, kind="stable").T, dtype=np.int64)
    j, k, score = _scan(
        X, rows, order, features,
        np.ascontiguousarray(stats, dtype=float),
        np.ascontiguousarray(denom, dtype=float),
        float(lam), int(min_leaf),
    )
    if j < 0:
        return None
    f = int(features[j])
    a = X[rows[order[j, k]], f]
    b = X[rows[order[j, k + 1]], f]
    return f, midpoint(float(a), float(b)), float(score)


def node_score(rows, stats, denom, lam=0.0) -> float:
    """Unsplit counterpart of the ``best_split`` score."""
    s = np.sum(stats[rows], axis=0)
    d = float(np.sum(denom[rows])) + lam
    if d <= 0:
        return 0.0
    return float(np.sum(s * s) / d)
