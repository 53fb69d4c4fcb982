"""Independent reference implementations used only by the tests.

None of these share code with the package: they are slow, simple and
written to be obviously correct.
"""

import numpy as np


def nnls_projected_gradient(X, y, iters=200_000, tol=1e-13):
    """Accelerated projected gradient for ``min ||Xw - y||^2, w >= 0``.

    Uses a fixed 1/L step with adaptive restart and stops once the projected
    gradient vanishes to ``tol`` relative to ``|X^T y|``.
    """
    G = X.T @ X
    c = X.T @ y
    L = max(np.linalg.eigvalsh(G).max(), 1e-300)
    scale = max(1.0, np.abs(c).max())
    w = np.zeros(X.shape[1])
    z, t = w.copy(), 1.0
    for _ in range(iters):
        g = G @ z - c
        w_new = np.maximum(z - g / L, 0.0)
        t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        if (w_new - w) @ (z - w_new) > 0:  # momentum points uphill: restart
            z, t = w_new.copy(), 1.0
        else:
            z = w_new + ((t - 1) / t_new) * (w_new - w)
            t = t_new
        w = w_new
        gw = G @ w - c
        pg = np.where(w > 0, gw, np.minimum(gw, 0.0))
        if np.abs(pg).max() <= tol * scale:
            break
    return w


def lasso_kkt_violation(X, y, coef, intercept, alpha, fit_intercept):
    """Largest subgradient optimality violation for the LASSO objective
    ``(1/2N)||Xw + b - y||^2 + alpha ||w||_1``."""
    r = y - X @ coef - intercept
    g = X.T @ r / len(y)
    worst = 0.0
    for gj, wj in zip(g, coef):
        if wj != 0:
            worst = max(worst, abs(gj - alpha * np.sign(wj)))
        else:
            worst = max(worst, abs(gj) - alpha)
    if fit_intercept:
        worst = max(worst, abs(r.mean()))
    return worst


# -- exhaustive split enumeration ---------------------------------------------


def _cost(y, criterion):
    if criterion == "mae":
        return float(np.abs(y - np.median(y)).sum())
    return float(((y - y.mean()) ** 2).sum())


def _score(yl, yr, criterion):
    """Lower is better for every criterion."""
    if criterion == "fmse":
        nl, nr = len(yl), len(yr)
        return -(nl * nr / (nl + nr)) * (yl.mean() - yr.mean()) ** 2
    return _cost(yl, criterion) + _cost(yr, criterion)


def brute_force_tree(X, y, max_depth, criterion="mse", min_leaf=1, rtol=1e-9):
    """Reference CART over every (feature, midpoint) pair.

    Returns a nested tuple: ``("leaf", value)`` or
    ``("split", feature, threshold, left, right)``. Ties within ``rtol`` of
    the node's total cost are broken by lowest feature index, then lowest
    threshold.
    """

    def leaf(ys):
        return ("leaf", float(np.median(ys) if criterion == "mae" else ys.mean()))

    def build(idx, depth):
        ys = y[idx]
        if depth >= max_depth or len(idx) < 2 or len(idx) < 2 * min_leaf or np.all(ys == ys[0]):
            return leaf(ys)
        cands = []
        for f in range(X.shape[1]):
            vals = np.unique(X[idx, f])
            for a, b in zip(vals[:-1], vals[1:]):
                thr = (a + b) / 2
                go = X[idx, f] <= a
                if go.sum() < min_leaf or (~go).sum() < min_leaf:
                    continue
                cands.append((_score(ys[go], ys[~go], criterion), f, thr, a))
        if not cands:
            return leaf(ys)
        best = min(c[0] for c in cands)
        tol = rtol * max(1.0, _cost(ys, criterion))
        _, f, thr, a = next(c for c in cands if c[0] <= best + tol)
        go = X[idx, f] <= a
        return ("split", f, thr, build(idx[go], depth + 1), build(idx[~go], depth + 1))

    return build(np.arange(len(y)), 0)


def tree_structure(model, node=0):
    """Convert an array-encoded tree into the nested form of :func:`brute_force_tree`."""
    f = int(model.feature[node])
    if f < 0:
        return ("leaf", float(model.value[node]))
    return (
        "split",
        f,
        float(model.threshold[node]),
        tree_structure(model, int(model.left[node])),
        tree_structure(model, int(model.right[node])),
    )


