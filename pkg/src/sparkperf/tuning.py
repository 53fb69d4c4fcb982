"""Grid search with k-fold or hold-out validation, selecting by mean MSE.

Within every validation round the DAG-column imputation means and the input
scaler are fitted on the round's training rows only; the validation rows see
imputed DAG columns exactly as a test set would.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .data import FeatureMatrix
from .errors import ConfigError, DataError, DivergenceError
from .features import impute_dag_features
from .models import TrainedModel, expand_grid, fit_model, predict
from .models.params import HyperParams, ModelFamily, params_label, params_to_dict

HOLDOUT_FRACTION = 0.25


@dataclass(frozen=True)
class KFold:
    k: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise ConfigError(f"k must be >= 2, got {self.k}")


@dataclass(frozen=True)
class HoldOut:
    validation_fraction: float = HOLDOUT_FRACTION
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.validation_fraction < 1:
            raise ConfigError(f"validation_fraction must be in (0, 1), got {self.validation_fraction}")


CvScheme = Union[KFold, HoldOut]


def kfold_indices(n: int, k: int, seed: int = 0) -> List[np.ndarray]:
    """Seeded shuffle of ``range(n)`` cut into ``k`` contiguous folds.

    Fold sizes differ by at most one, larger folds first.
    """
    if k < 2:
        raise ConfigError(f"k must be >= 2, got {k}")
    if n < k:
        raise DataError(f"cannot make {k} folds from {n} rows")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]


def holdout_indices(n: int, fraction: float, seed: int = 0) -> np.ndarray:
    """Validation rows for a single hold-out split (at least 1, at most n-2)."""
    if n < 3:
        raise DataError(f"hold-out validation needs at least 3 rows, got {n}")
    size = min(max(1, int(round(fraction * n))), n - 2)
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[:size])


def validation_rounds(n: int, scheme: CvScheme) -> List[Tuple[np.ndarray, np.ndarray]]:
    """``(train_idx, valid_idx)`` pairs for ``scheme``."""
    if isinstance(scheme, KFold):
        folds = kfold_indices(n, scheme.k, scheme.seed)
    else:
        folds = [holdout_indices(n, scheme.validation_fraction, scheme.seed)]
    all_idx = np.arange(n)
    return [(np.setdiff1d(all_idx, f), f) for f in folds]


@dataclass(frozen=True)
class RoundContext:
    """What one validation round saw, for leakage checks."""

    hp: HyperParams
    train: FeatureMatrix
    valid: FeatureMatrix
    model: Optional[TrainedModel]


@dataclass(frozen=True)
class GridSearchResult:
    best_hp: HyperParams
    best_cv_mse: float
    leaderboard: Tuple[Tuple[HyperParams, float], ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rank_order", "hyper_params", "cv_mse"])
        for i, (hp, mse) in enumerate(self.leaderboard):
            w.writerow([i, params_label(hp), repr(mse)])
        return buf.getvalue()


def evaluate_point(
    fm: FeatureMatrix,
    family: ModelFamily,
    hp: HyperParams,
    rounds,
    seed: int = 0,
    on_round: Optional[Callable[[RoundContext], None]] = None,
) -> float:
    """Mean validation MSE of one grid point; ``inf`` if a fit diverges."""
    errs = []
    for tr_idx, va_idx in rounds:
        tr, va = fm.take(tr_idx), fm.take(va_idx)
        va = impute_dag_features(tr, va)
        try:
            model = fit_model(tr.rows, tr.response, family, hp, seed=seed)
            pred = predict(model, va.rows)
        except DivergenceError:
            if on_round:
                on_round(RoundContext(hp, tr, va, None))
            return math.inf
        if on_round:
            on_round(RoundContext(hp, tr, va, model))
        if not np.all(np.isfinite(pred)):
            return math.inf
        errs.append(float(np.mean((pred - va.response) ** 2)))
    return float(np.mean(errs))


def grid_search(
    train: FeatureMatrix,
    family,
    grid: Union[None, dict, Sequence[HyperParams]] = None,
    scheme: CvScheme = KFold(),
    seed: int = 0,
    on_round: Optional[Callable[[RoundContext], None]] = None,
) -> GridSearchResult:
    """Evaluate every grid point and keep the one with the lowest mean MSE.

    ``grid`` is a dict of grid rows (see :func:`expand_grid`), an explicit
    list of hyper-parameter objects, or ``None`` for the reference grid. Ties
    go to the earlier point in enumeration order.
    """
    family = ModelFamily(family)
    points = expand_grid(family, grid) if grid is None or isinstance(grid, dict) else list(grid)
    if not points:
        raise ConfigError("empty hyper-parameter grid")
    rounds = validation_rounds(train.n_rows, scheme)
    board = []
    for hp in points:
        board.append((hp, evaluate_point(train, family, hp, rounds, seed, on_round)))
    best_i = min(range(len(board)), key=lambda i: (board[i][1], i))
    best_hp, best_mse = board[best_i]
    return GridSearchResult(best_hp, best_mse, tuple(board))


def leaderboard_records(result: GridSearchResult) -> list:
    return [{"hyper_params": params_to_dict(hp), "cv_mse": mse} for hp, mse in result.leaderboard]
