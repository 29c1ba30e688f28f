"""Pure numpy split scan, used when the compiled core is unavailable.

Must stay bit-compatible with ``_split_core.pyx``: same accumulation order,
same tie rule.
"""
import numpy as np

# Scores within this relative distance of the best count as ties; exact
# ties in real arithmetic otherwise get broken by rounding noise.
TIE_RTOL = 1e-12


def scan_splits(X, rows, order, features, stats, denom, lam, min_leaf):
    """Best split over sorted candidate positions.

    Parameters
    ----------
    X : (N, p) float array
    rows : (m,) int array of row indices reaching the node
    order : (F, m) int array, ``order[j]`` sorts ``X[rows, features[j]]``
    features : (F,) int array of candidate feature indices, ascending
    stats : (N, C) per-sample sufficient statistics
    denom : (N,) per-sample denominators (weights or hessians)
    lam : float added to every child denominator
    min_leaf : minimum number of rows in each child

    Returns
    -------
    (j, k, score) where the split sends the first ``k + 1`` sorted rows left.
    ``j == -1`` when no admissible split exists.  The winner is the first
    candidate in (feature, position) order scoring within ``TIE_RTOL`` of
    the best score.
    """
    m = rows.shape[0]
    if m < 2 * min_leaf or m < 2:
        return -1, -1, -np.inf
    scores = []
    for j in range(len(features)):
        idx = rows[order[j]]
        xs = X[idx, features[j]]
        s = np.cumsum(stats[idx], axis=0)
        d = np.cumsum(denom[idx])
        s_tot = s[-1]
        d_tot = d[-1]
        sl = s[:-1]
        dl = d[:-1] + lam
        dr = (d_tot - d[:-1]) + lam
        sr = s_tot - sl
        with np.errstate(divide="ignore", invalid="ignore"):
            score = np.zeros(m - 1)
            for c in range(stats.shape[1]):
                score = score + (sl[:, c] * sl[:, c] / dl + sr[:, c] * sr[:, c] / dr)
        count_left = np.arange(1, m)
        valid = (xs[:-1] < xs[1:]) & (count_left >= min_leaf) & (m - count_left >= min_leaf)
        valid &= (dl > 0) & (dr > 0)
        scores.append(np.where(valid, score, -np.inf))
    best = max(float(sc.max()) for sc in scores) if scores else -np.inf
    if best == -np.inf:
        return -1, -1, best
    cut = best - TIE_RTOL * abs(best)
    for j, sc in enumerate(scores):
        hits = np.flatnonzero(sc >= cut)
        if hits.size:
            k = int(hits[0])
            return j, k, float(sc[k])
    raise AssertionError("unreachable")
