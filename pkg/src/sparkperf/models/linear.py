"""Linear regressors: non-negative least squares and the LASSO."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from .params import LassoParams


@dataclass(frozen=True)
class LinearModel:
    coefficients: np.ndarray
    intercept: float = 0.0
    nonneg_constrained: bool = False

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self.coefficients):
            raise DataError(f"expected {len(self.coefficients)} columns, got shape {X.shape}")
        return X @ self.coefficients + self.intercept

    def to_dict(self) -> dict:
        return {
            "coefficients": self.coefficients.tolist(),
            "intercept": float(self.intercept),
            "nonneg_constrained": self.nonneg_constrained,
        }

    @classmethod
    def from_dict(cls, d) -> "LinearModel":
        return cls(np.array(d["coefficients"], dtype=float), float(d["intercept"]), bool(d["nonneg_constrained"]))


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise DataError(f"X has shape {X.shape}, y has length {len(y)}")
    if X.shape[0] < 1:
        raise DataError("need at least one row")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DataError("non-finite values in X or y")
    return X, y


def nnls(A, b, tol=1e-10, max_iter=None):
    """Lawson-Hanson active-set solution of ``min ||Ax - b||`` s.t. ``x >= 0``.

    Columns are rescaled to unit norm internally (the constraint set is
    invariant under positive column scaling), and ``tol`` is relative to
    ``max|A_n^T b|`` of the normalized problem.

    Returns
    -------
    x : ndarray
        Solution vector.
    rnorm : float
        Residual norm ``||Ax - b||``.
    """
    A, b = _check_xy(A, b)
    m, n = A.shape
    norms = np.linalg.norm(A, axis=0)
    live = norms > 0
    An = np.zeros_like(A)
    An[:, live] = A[:, live] / norms[live]

    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    eligible = live.copy()
    thresh = tol * max(1.0, float(np.abs(An.T @ b).max(initial=0.0)))
    max_iter = 3 * n + 10 if max_iter is None else max_iter

    for _ in range(max_iter):
        w = An.T @ (b - An @ x)
        cand = eligible & ~passive & (w > thresh)
        if not cand.any():
            break
        j = int(np.argmax(np.where(cand, w, -np.inf)))
        passive[j] = True
        first = True
        while True:
            z = np.zeros(n)
            z[passive] = np.linalg.lstsq(An[:, passive], b, rcond=None)[0]
            if np.all(z[passive] > 0):
                x = z
                break
            if first and z[j] <= 0:
                # j cannot enter (rounding); drop it for good
                passive[j] = False
                eligible[j] = False
                break
            first = False
            neg = passive & (z <= 0)
            ratio = x[neg] / (x[neg] - z[neg])
            step = ratio.min()
            x = x + step * (z - x)
            passive &= x > 1e-15 * max(1.0, np.abs(x).max())
            x[~passive] = 0.0
            if not passive.any():
                break

    coef = np.zeros(n)
    coef[live] = x[live] / norms[live]
    return coef, float(np.linalg.norm(A @ coef - b))


def fit_nnls(X, y) -> LinearModel:
    """Non-negative least squares with no intercept (Ernest's estimator)."""
    coef, _ = nnls(X, y)
    return LinearModel(coef, 0.0, nonneg_constrained=True)


def nnls_kkt_residual(X, y, coef) -> float:
    """Largest KKT violation of ``coef`` relative to ``max|X^T y|``."""
    X, y = _check_xy(X, y)
    g = X.T @ (y - X @ coef)  # negative half-gradient
    viol = np.where(coef > 0, np.abs(g), np.maximum(g, 0.0))
    viol = np.append(viol, np.maximum(-coef, 0.0).max(initial=0.0))
    return float(viol.max() / max(1.0, np.abs(X.T @ y).max()))


def _cd_sweep(cols, c, diag, alpha, w, q, coords) -> float:
    """One coordinate-descent pass over ``coords``; returns the largest update.

    ``cols[j]`` is column ``j`` of the Gram matrix; ``w`` is a Python list and
    ``q = G @ w`` is updated in place.
    """
    biggest = 0.0
    for j in coords:
        gjj = diag[j]
        if gjj <= 0.0:
            continue
        wj = w[j]
        rho = c[j] - float(q[j]) + gjj * wj
        if rho > alpha:
            new = (rho - alpha) / gjj
        elif rho < -alpha:
            new = (rho + alpha) / gjj
        else:
            new = 0.0
        d = new - wj
        if d != 0.0:
            q += cols[j] * d
            w[j] = new
            if abs(d) > biggest:
                biggest = abs(d)
    return biggest


def fit_lasso(X, y, hp: LassoParams = LassoParams(), tol=1e-7, max_sweeps=10_000) -> LinearModel:
    """Coordinate descent on ``(1/2N)||Xw + b - y||^2 + alpha * ||w||_1``.

    Full sweeps alternate with passes restricted to the non-zero coefficients
    until those settle. It stops once a full sweep moves no coefficient by more
    than ``tol``, or after ``max_sweeps`` passes in total.
    """
    X, y = _check_xy(X, y)
    N, F = X.shape
    if hp.fit_intercept:
        x_mean, y_mean = X.mean(axis=0), y.mean()
        Xc, yc = X - x_mean, y - y_mean
    else:
        Xc, yc = X, y
    G = Xc.T @ Xc / N
    c = Xc.T @ yc / N
    cols = [np.ascontiguousarray(G[:, j]) for j in range(F)]
    diag = np.diag(G).tolist()
    c = c.tolist()
    alpha = float(hp.alpha)

    w = [0.0] * F
    q = np.zeros(F)  # G @ w, kept current by the sweeps
    everything = range(F)
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        if _cd_sweep(cols, c, diag, alpha, w, q, everything) < tol:
            break
        active = [j for j in everything if w[j] != 0.0]
        while sweeps < max_sweeps:
            sweeps += 1
            if _cd_sweep(cols, c, diag, alpha, w, q, active) < tol:
                break

    w = _polish_support(G, np.array(c), alpha, np.array(w))
    intercept = float(y_mean - x_mean @ w) if hp.fit_intercept else 0.0
    return LinearModel(w, intercept, nonneg_constrained=False)


def _polish_support(G, c, alpha, w):
    """Solve the optimality equations on the support of ``w`` with signs held fixed.

    Coordinate descent stops on a step-size rule, which on ill-conditioned
    problems can leave the coefficients a little short of the optimum. The
    exact solution is kept only if it preserves the signs, still satisfies the
    conditions for the zero coefficients and does not raise the objective.
    """
    support = np.flatnonzero(w)
    if support.size == 0:
        return w
    signs = np.sign(w[support])
    sub = G[np.ix_(support, support)]
    try:
        exact = np.linalg.solve(sub, c[support] - alpha * signs)
    except np.linalg.LinAlgError:
        return w
    if not np.all(np.isfinite(exact)) or np.any(np.sign(exact) != signs):
        return w
    cand = np.zeros_like(w)
    cand[support] = exact
    grad = c - G @ cand
    zero = np.ones(len(w), dtype=bool)
    zero[support] = False
    if np.any(np.abs(grad[zero]) > alpha * (1 + 1e-12) + 1e-15):
        return w

    def objective(v):
        return 0.5 * v @ G @ v - c @ v + alpha * np.abs(v).sum()

    return cand if objective(cand) <= objective(w) else w


def lasso_kkt_residual(X, y, model: LinearModel, alpha: float) -> float:
    """Largest violation of the LASSO subgradient optimality conditions."""
    X, y = _check_xy(X, y)
    r = y - model.predict(X)
    g = X.T @ r / len(y)
    w = model.coefficients
    viol = np.where(w != 0, np.abs(g - alpha * np.sign(w)), np.maximum(np.abs(g) - alpha, 0.0))
    out = float(viol.max(initial=0.0))
    if model.intercept != 0.0:
        out = max(out, abs(float(r.mean())))
    return out
