"""CART regression trees and random forests.

Split search is greedy and exhaustive over the candidate features: every
midpoint between consecutive distinct sorted values is scored. Candidates are
ordered by ascending feature index, then ascending threshold, and the first
one scoring within a small relative tolerance of the best is taken, so
mathematically tied splits always resolve the same way.

Criteria
--------
mse   minimize the summed squared error of the children around their means
fmse  maximize Friedman's improvement ``nL*nR/(nL+nR) * (meanL - meanR)**2``
mae   minimize the summed absolute error of the children around their medians

Leaves predict the mean of their training responses (the median for mae).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..errors import DataError
from .params import ForestParams, TreeParams

TIE_RTOL = 1e-10


def resolve_min_leaf(min_samples_leaf, n_rows: int) -> int:
    """Fractions are taken of ``n_rows`` and rounded up; counts pass through."""
    if isinstance(min_samples_leaf, float) and not float(min_samples_leaf).is_integer():
        return max(1, math.ceil(min_samples_leaf * n_rows))
    return int(min_samples_leaf)


def resolve_max_features(rule: str, n_features: int) -> int:
    if rule == "auto":
        return n_features
    if rule == "sqrt":
        return max(1, math.ceil(math.sqrt(n_features)))
    if rule == "log":
        return max(1, math.ceil(math.log2(n_features))) if n_features > 1 else 1
    raise DataError(f"unknown max_features rule {rule!r}")


def leaf_value(y: np.ndarray, criterion: str) -> float:
    return float(np.median(y)) if criterion == "mae" else float(np.mean(y))


def node_impurity(y: np.ndarray, criterion: str) -> float:
    if criterion == "mae":
        return float(np.abs(y - np.median(y)).sum())
    return float(((y - y.mean()) ** 2).sum())


def split_tie_tolerance(y: np.ndarray, criterion: str) -> float:
    """Scores within this distance of the best one count as tied."""
    base = node_impurity(y, "mae" if criterion == "mae" else "mse")
    return TIE_RTOL * max(1.0, base)


def _abs_dev_prefix(ys: np.ndarray) -> np.ndarray:
    """``out[k]`` = sum |ys[:k+1] - median(ys[:k+1])| for every prefix."""
    # sum |v - median| over m values = (sum of top m//2) - (sum of bottom m//2)
    n = len(ys)
    tri = np.tri(n, dtype=bool)
    S = np.sort(np.where(tri, ys[None, :], np.inf), axis=1)
    S[~tri] = 0.0
    C = np.zeros((n, n + 1))
    np.cumsum(S, axis=1, out=C[:, 1:])
    rows = np.arange(n)
    m = rows + 1
    h = m // 2
    return (C[rows, m] - C[rows, m - h]) - C[rows, h]


def split_scores(xs: np.ndarray, ys: np.ndarray, criterion: str, min_leaf: int, center=None):
    """Score every admissible split of one sorted feature column.

    ``xs`` must be sorted ascending with ``ys`` aligned. Returns
    ``(positions, scores)`` where position ``i`` sends ``xs[:i+1]`` left.
    Lower scores are better. ``center`` (default: the mean of ``ys``) is
    subtracted before the prefix sums.
    """
    n = len(ys)
    pos = np.nonzero(xs[:-1] < xs[1:])[0]
    n_left = pos + 1
    ok = (n_left >= min_leaf) & (n - n_left >= min_leaf)
    pos, n_left = pos[ok], n_left[ok]
    if len(pos) == 0:
        return pos, np.empty(0)
    n_right = n - n_left
    if criterion == "mae":
        left = _abs_dev_prefix(ys)
        right = _abs_dev_prefix(ys[::-1])[::-1]
        return pos, left[pos] + right[pos + 1]
    yc = ys - (ys.mean() if center is None else center)
    csum = np.cumsum(yc)
    total = csum[-1]
    sum_l = csum[pos]
    sum_r = total - sum_l
    mean_l, mean_r = sum_l / n_left, sum_r / n_right
    if criterion == "fmse":
        return pos, -(n_left * n_right / n) * (mean_l - mean_r) ** 2
    csq = np.cumsum(yc * yc)
    sq_l = csq[pos]
    sq_r = csq[-1] - sq_l
    return pos, (sq_l - sum_l * mean_l) + (sq_r - sum_r * mean_r)


def _split_score_matrix(Xs: np.ndarray, Ys: np.ndarray, criterion: str, min_leaf: int, center: float):
    """Column-wise :func:`split_scores` for mse/fmse; inadmissible slots are ``inf``.

    Row ``i`` of the result scores sending sorted rows ``[:i+1]`` left.
    """
    n = Ys.shape[0]
    n_left = np.arange(1, n, dtype=float)[:, None]
    n_right = n - n_left
    yc = Ys - center
    csum = np.cumsum(yc, axis=0)
    sum_l = csum[:-1]
    sum_r = csum[-1] - sum_l
    mean_l, mean_r = sum_l / n_left, sum_r / n_right
    if criterion == "fmse":
        scores = -(n_left * n_right / n) * (mean_l - mean_r) ** 2
    else:
        csq = np.cumsum(yc * yc, axis=0)
        sq_l = csq[:-1]
        sq_r = csq[-1] - sq_l
        scores = (sq_l - sum_l * mean_l) + (sq_r - sum_r * mean_r)
    ok = (Xs[:-1] < Xs[1:]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    return np.where(ok, scores, np.inf)


def _midpoint(a: float, b: float) -> float:
    mid = (a + b) / 2.0
    # adjacent floats: the midpoint may round up onto b
    return a if mid >= b else mid


@dataclass(frozen=True)
class TreeModel:
    """Array-encoded binary tree; ``feature[i] == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    depth: int
    n_features: int

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DataError(f"expected {self.n_features} columns, got shape {X.shape}")
        node = np.zeros(len(X), dtype=int)
        rows = np.arange(len(X))
        for _ in range(self.depth):
            f = self.feature[node]
            inner = f >= 0
            if not inner.any():
                break
            r, nd = rows[inner], node[inner]
            go_left = X[r, f[inner]] <= self.threshold[nd]
            node[inner] = np.where(go_left, self.left[nd], self.right[nd])
        return self.value[node].astype(float)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "depth": self.depth,
            "n_features": self.n_features,
        }

    @classmethod
    def from_dict(cls, d) -> "TreeModel":
        return cls(
            np.array(d["feature"], dtype=int),
            np.array(d["threshold"], dtype=float),
            np.array(d["left"], dtype=int),
            np.array(d["right"], dtype=int),
            np.array(d["value"], dtype=float),
            int(d["depth"]),
            int(d["n_features"]),
        )


class _Builder:
    def __init__(self, X, y, hp: TreeParams, rng):
        self.X, self.y, self.hp, self.rng = X, y, hp, rng
        self.min_leaf = resolve_min_leaf(hp.min_samples_leaf, len(y))
        self.k_features = resolve_max_features(hp.max_features, X.shape[1])
        self.feature: List[int] = []
        self.threshold: List[float] = []
        self.left: List[int] = []
        self.right: List[int] = []
        self.value: List[float] = []
        self.depth = 0

    def _new_node(self, value):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        return len(self.feature) - 1

    def _candidates(self):
        F = self.X.shape[1]
        if self.k_features >= F:
            return range(F)
        return np.sort(self.rng.choice(F, size=self.k_features, replace=False))

    def best_split(self, idx):
        crit = self.hp.criterion
        y = self.y[idx]
        feats = np.asarray(self._candidates(), dtype=int)
        tol = split_tie_tolerance(y, crit)
        center = y.mean()
        if crit != "mae":
            Xn = self.X[np.ix_(idx, feats)]
            order = np.argsort(Xn, axis=0, kind="stable")
            Xs = np.take_along_axis(Xn, order, axis=0)
            scores = _split_score_matrix(Xs, y[order], crit, self.min_leaf, center)
            best = scores.min()
            if not np.isfinite(best):
                return None
            hit = scores <= best + tol
            col = int(np.argmax(hit.any(axis=0)))
            p = int(np.argmax(hit[:, col]))
            return int(feats[col]), _midpoint(Xs[p, col], Xs[p + 1, col])

        found = []
        for f in feats:
            xcol = self.X[idx, f]
            order = np.argsort(xcol, kind="stable")
            xs, ys = xcol[order], y[order]
            pos, scores = split_scores(xs, ys, crit, self.min_leaf)
            if len(pos):
                found.append((int(f), xs, pos, scores))
        if not found:
            return None
        best = min(sc.min() for _, _, _, sc in found)
        for f, xs, pos, scores in found:
            hits = np.nonzero(scores <= best + tol)[0]
            if len(hits):
                p = pos[hits[0]]
                return f, _midpoint(xs[p], xs[p + 1])

    def grow(self, idx, depth):
        y = self.y[idx]
        node = self._new_node(leaf_value(y, self.hp.criterion))
        self.depth = max(self.depth, depth)
        hp = self.hp
        if (
            (hp.max_depth is not None and depth >= hp.max_depth)
            or len(idx) < hp.min_samples_split
            or len(idx) < 2 * self.min_leaf
            or np.all(y == y[0])
        ):
            return node
        split = self.best_split(idx)
        if split is None:
            return node
        f, thr = split
        mask = self.X[idx, f] <= thr
        self.feature[node] = f
        self.threshold[node] = thr
        left = self.grow(idx[mask], depth + 1)
        right = self.grow(idx[~mask], depth + 1)
        self.left[node], self.right[node] = left, right
        return node

    def model(self) -> TreeModel:
        return TreeModel(
            np.array(self.feature, dtype=int),
            np.array(self.threshold, dtype=float),
            np.array(self.left, dtype=int),
            np.array(self.right, dtype=int),
            np.array(self.value, dtype=float),
            self.depth,
            self.X.shape[1],
        )


def _check(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise DataError(f"X has shape {X.shape}, y has length {len(y)}")
    if len(y) == 0:
        raise DataError("cannot fit a tree on empty input")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DataError("non-finite values in X or y")
    return X, y


def fit_tree(X, y, hp: TreeParams = TreeParams(), seed: Optional[int] = 0) -> TreeModel:
    """Greedy CART fit. ``seed`` only matters when features are subsampled."""
    X, y = _check(X, y)
    b = _Builder(X, y, hp, np.random.default_rng(seed))
    b.grow(np.arange(len(y)), 0)
    return b.model()


@dataclass(frozen=True)
class ForestModel:
    trees: tuple
    seed: int
    bootstrap: bool = True

    def predict(self, X) -> np.ndarray:
        return np.mean([t.predict(X) for t in self.trees], axis=0)

    def to_dict(self) -> dict:
        return {"seed": self.seed, "bootstrap": self.bootstrap, "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d) -> "ForestModel":
        return cls(tuple(TreeModel.from_dict(t) for t in d["trees"]), int(d["seed"]), bool(d["bootstrap"]))


def fit_forest(X, y, hp: ForestParams = ForestParams(), seed: int = 0) -> ForestModel:
    """Bagged CART trees with per-split feature subsampling.

    Tree ``i`` draws its bootstrap sample and feature subsets from the
    ``i``-th child of ``SeedSequence(seed)``, so results do not depend on
    the order the trees are built in.
    """
    X, y = _check(X, y)
    n = len(y)
    tree_hp = hp.tree_params()
    # the leaf fraction refers to the full training set, not the resample
    if isinstance(tree_hp.min_samples_leaf, float) and not tree_hp.min_samples_leaf.is_integer():
        tree_hp = TreeParams(
            tree_hp.max_depth, tree_hp.max_features, tree_hp.min_samples_split,
            resolve_min_leaf(tree_hp.min_samples_leaf, n), tree_hp.criterion,
        )
    trees = []
    for child in np.random.SeedSequence(seed).spawn(hp.n_trees):
        rng = np.random.default_rng(child)
        idx = rng.integers(0, n, size=n) if hp.bootstrap else np.arange(n)
        b = _Builder(X[idx], y[idx], tree_hp, rng)
        b.grow(np.arange(n), 0)
        trees.append(b.model())
    return ForestModel(tuple(trees), seed, hp.bootstrap)
