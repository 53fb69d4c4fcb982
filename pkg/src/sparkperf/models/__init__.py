"""Regression engines behind a single fit/predict contract.

``fit_model`` wraps the raw estimators with the preprocessing each family
needs: the LASSO and the network see standardized inputs, the trees and the
NNLS model see raw features. The fitted :class:`TrainedModel` carries the
scaler so ``predict`` takes raw feature rows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import DataError
from ..features import Scaler
from .linear import LinearModel, fit_lasso, fit_nnls, nnls
from .mlp import MlpModel, fit_mlp
from .params import (
    REFERENCE_GRIDS,
    ForestParams,
    HyperParams,
    LassoParams,
    MlpParams,
    ModelFamily,
    NnlsParams,
    TreeParams,
    expand_grid,
    family_of,
    in_reference_grid,
    params_from_dict,
    params_to_dict,
)
from .tree import ForestModel, TreeModel, fit_forest, fit_tree

MODEL_SCHEMA_VERSION = 1

SCALED_FAMILIES = frozenset({ModelFamily.LR, ModelFamily.NN})

_ESTIMATOR_TYPES = {
    ModelFamily.NNLS: LinearModel,
    ModelFamily.LR: LinearModel,
    ModelFamily.NN: MlpModel,
    ModelFamily.DT: TreeModel,
    ModelFamily.RF: ForestModel,
}


@dataclass(frozen=True)
class TrainedModel:
    family: ModelFamily
    hp: HyperParams
    estimator: object
    scaler: Optional[Scaler]
    n_features: int
    seed: int = 0

    def predict(self, X) -> np.ndarray:
        return predict(self, X)


def fit_model(X, y, family, hp: Optional[HyperParams] = None, seed: int = 0) -> TrainedModel:
    """Fit one model family on raw feature rows ``X`` and response ``y``."""
    family = ModelFamily(family)
    hp = params_from_dict(family, {}) if hp is None else hp
    if family_of(hp) is not family:
        raise DataError(f"{type(hp).__name__} does not belong to family {family.value}")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.ndim != 2:
        raise DataError(f"X must be 2-D, got shape {X.shape}")
    scaler = Scaler.fit(X) if family in SCALED_FAMILIES else None
    Xf = scaler.transform(X) if scaler is not None else X
    if family is ModelFamily.NNLS:
        est = fit_nnls(Xf, y)
    elif family is ModelFamily.LR:
        est = fit_lasso(Xf, y, hp)
    elif family is ModelFamily.NN:
        est = fit_mlp(Xf, y, hp, seed=seed)
    elif family is ModelFamily.DT:
        est = fit_tree(Xf, y, hp, seed=seed)
    else:
        est = fit_forest(Xf, y, hp, seed=seed)
    return TrainedModel(family, hp, est, scaler, X.shape[1], seed)


def predict(model: TrainedModel, X) -> np.ndarray:
    """Predicted seconds for raw feature rows (never clamped)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DataError(f"dimension mismatch: model has {model.n_features} features, X has shape {X.shape}")
    if model.scaler is not None:
        X = model.scaler.transform(X)
    return np.asarray(model.estimator.predict(X), dtype=float)


def model_to_dict(model: TrainedModel) -> dict:
    return {
        "schema_version": MODEL_SCHEMA_VERSION,
        "family": model.family.value,
        "hyper_params": params_to_dict(model.hp),
        "seed": model.seed,
        "n_features": model.n_features,
        "scaler": None if model.scaler is None else model.scaler.to_dict(),
        "parameters": model.estimator.to_dict(),
    }


def model_from_dict(doc: dict) -> TrainedModel:
    if doc.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise DataError(f"unsupported model schema_version {doc.get('schema_version')!r}")
    family = ModelFamily(doc["family"])
    return TrainedModel(
        family=family,
        hp=params_from_dict(family, doc["hyper_params"]),
        estimator=_ESTIMATOR_TYPES[family].from_dict(doc["parameters"]),
        scaler=None if doc["scaler"] is None else Scaler.from_dict(doc["scaler"]),
        n_features=int(doc["n_features"]),
        seed=int(doc["seed"]),
    )


def dumps_model(model: TrainedModel) -> str:
    return json.dumps(model_to_dict(model), sort_keys=True)


def loads_model(text: str) -> TrainedModel:
    return model_from_dict(json.loads(text))


__all__ = [
    "ForestModel",
    "ForestParams",
    "LassoParams",
    "LinearModel",
    "MlpModel",
    "MlpParams",
    "ModelFamily",
    "NnlsParams",
    "REFERENCE_GRIDS",
    "TrainedModel",
    "TreeModel",
    "TreeParams",
    "dumps_model",
    "expand_grid",
    "family_of",
    "fit_forest",
    "fit_lasso",
    "fit_mlp",
    "fit_model",
    "fit_nnls",
    "fit_tree",
    "in_reference_grid",
    "loads_model",
    "model_from_dict",
    "model_to_dict",
    "nnls",
    "params_from_dict",
    "params_to_dict",
    "predict",
]
