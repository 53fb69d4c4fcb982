"""Hyper-parameters per model family and the reference search grids.

Defaults are the most frequently selected values of the reference grids.
Grid enumeration is the lexicographic product of the grid rows in the order
they are declared below; that order also breaks ties in grid search.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import asdict, dataclass, fields
from typing import Optional, Tuple, Union

from ..errors import ConfigError


class ModelFamily(enum.Enum):
    NNLS = "nnls"
    LR = "lr"
    NN = "nn"
    DT = "dt"
    RF = "rf"


ACTIVATIONS = ("sigmoid", "relu", "tanh")
OPTIMIZERS = ("adam", "sgd")
CRITERIA = ("mse", "fmse", "mae")
MAX_FEATURES = ("auto", "sqrt", "log")


@dataclass(frozen=True)
class NnlsParams:
    """Ernest's NNLS fit has no hyper-parameters."""


@dataclass(frozen=True)
class LassoParams:
    alpha: float = 1.0
    fit_intercept: bool = True

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ConfigError(f"alpha must be >= 0, got {self.alpha}")


@dataclass(frozen=True)
class MlpParams:
    hidden: Tuple[int, ...] = (5, 5)
    activation: str = "relu"
    l2_penalty: float = 0.001
    learning_rate: float = 0.01
    beta1: float = 0.9
    minibatches: int = 1
    optimizer: str = "adam"
    epochs: int = 10_000

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if not self.hidden or min(self.hidden) < 1:
            raise ConfigError(f"hidden layer widths must be >= 1, got {self.hidden}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        if self.l2_penalty < 0 or self.learning_rate <= 0:
            raise ConfigError("l2_penalty must be >= 0 and learning_rate > 0")
        if not 0 <= self.beta1 < 1:
            raise ConfigError(f"beta1 must be in [0, 1), got {self.beta1}")
        if self.minibatches < 1 or self.epochs < 0:
            raise ConfigError("minibatches must be >= 1 and epochs >= 0")


@dataclass(frozen=True)
class TreeParams:
    """``min_samples_leaf``: an int is a count, a float in (0, 1) a fraction of the rows."""

    max_depth: Optional[int] = 5
    max_features: str = "auto"
    min_samples_split: int = 2
    min_samples_leaf: Union[int, float] = 0.01
    criterion: str = "mse"

    def __post_init__(self):
        _check_tree_fields(self)


@dataclass(frozen=True)
class ForestParams:
    max_depth: Optional[int] = 20
    max_features: str = "sqrt"
    min_samples_split: int = 2
    min_samples_leaf: Union[int, float] = 2
    criterion: str = "mse"
    n_trees: int = 10
    bootstrap: bool = True

    def __post_init__(self):
        _check_tree_fields(self)
        if self.n_trees < 1:
            raise ConfigError(f"n_trees must be >= 1, got {self.n_trees}")

    def tree_params(self) -> TreeParams:
        return TreeParams(
            self.max_depth, self.max_features, self.min_samples_split, self.min_samples_leaf, self.criterion
        )


def _check_tree_fields(p):
    if p.max_depth is not None and p.max_depth < 0:
        raise ConfigError(f"max_depth must be >= 0 or None, got {p.max_depth}")
    if p.max_features not in MAX_FEATURES:
        raise ConfigError(f"max_features must be one of {MAX_FEATURES}, got {p.max_features!r}")
    if p.criterion not in CRITERIA:
        raise ConfigError(f"criterion must be one of {CRITERIA}, got {p.criterion!r}")
    if p.min_samples_split < 2:
        raise ConfigError("min_samples_split must be >= 2")
    leaf = p.min_samples_leaf
    if isinstance(leaf, float) and not leaf.is_integer():
        if not 0 < leaf < 1:
            raise ConfigError(f"fractional min_samples_leaf must be in (0, 1), got {leaf}")
    elif leaf < 1:
        raise ConfigError(f"min_samples_leaf must be >= 1, got {leaf}")


HyperParams = Union[NnlsParams, LassoParams, MlpParams, TreeParams, ForestParams]

PARAM_TYPES = {
    ModelFamily.NNLS: NnlsParams,
    ModelFamily.LR: LassoParams,
    ModelFamily.NN: MlpParams,
    ModelFamily.DT: TreeParams,
    ModelFamily.RF: ForestParams,
}

# Row order matters: it fixes the enumeration (and tie-breaking) order.
REFERENCE_GRIDS = {
    ModelFamily.NNLS: {},
    ModelFamily.LR: {
        "alpha": [0.001, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0],
        "fit_intercept": [True, False],
    },
    ModelFamily.NN: {
        "layers": [1, 2, 3],
        "perceptrons": [3, 4, 5],
        "activation": ["sigmoid", "relu", "tanh"],
        "l2_penalty": [0.0001, 0.001, 0.01, 0.05, 0.1],
        "learning_rate": [0.001, 0.01, 0.1],
        "beta1": [0.7, 0.8, 0.9],
        "minibatches": [1],
        "optimizer": ["adam", "sgd"],
        "epochs": [10_000],
    },
    ModelFamily.DT: {
        "max_depth": [3, 5, 10, None],
        "max_features": ["auto", "sqrt", "log"],
        "min_samples_split": [2],
        "min_samples_leaf": [0.01, 0.05, 0.1, 0.2, 0.3],
        "criterion": ["mse", "fmse", "mae"],
    },
    ModelFamily.RF: {
        "max_depth": [3, 10, 20, None],
        "max_features": ["auto", "sqrt", "log"],
        "min_samples_split": [2],
        "min_samples_leaf": [1, 2, 4],
        "criterion": ["mse", "mae"],
        "n_trees": [5, 10, 50, 100],
    },
}


def expand_grid(family, grid: Optional[dict] = None) -> list:
    """All hyper-parameter points of ``grid`` in enumeration order.

    ``grid`` maps row names (as in :data:`REFERENCE_GRIDS`) to value lists;
    missing rows take the family default. For the network, ``layers`` and
    ``perceptrons`` expand to every width tuple in ``perceptrons ** layers``.
    """
    family = ModelFamily(family)
    cls = PARAM_TYPES[family]
    grid = dict(REFERENCE_GRIDS[family] if grid is None else grid)
    if family is ModelFamily.NNLS:
        if grid:
            raise ConfigError("the NNLS model has no hyper-parameters")
        return [NnlsParams()]

    allowed = set(REFERENCE_GRIDS[family]) | {f.name for f in fields(cls)}
    unknown = set(grid) - allowed
    if unknown:
        raise ConfigError(f"unknown {family.value} grid rows: {sorted(unknown)}")
    for k, v in grid.items():
        if not isinstance(v, (list, tuple)) or len(v) == 0:
            raise ConfigError(f"grid row {k!r} must be a non-empty list")

    if family is ModelFamily.NN:
        layers = grid.pop("layers", None)
        widths = grid.pop("perceptrons", None)
        if "hidden" in grid:
            if layers is not None or widths is not None:
                raise ConfigError("give either 'hidden' or 'layers'/'perceptrons', not both")
            hidden_opts = [tuple(h) for h in grid.pop("hidden")]
        else:
            layers = layers or [len(MlpParams().hidden)]
            widths = widths or [MlpParams().hidden[0]]
            hidden_opts = [h for n in layers for h in itertools.product(widths, repeat=int(n))]
        rows = [("hidden", hidden_opts)] + list(grid.items())
    else:
        rows = list(grid.items())

    names = [r[0] for r in rows]
    out = []
    for combo in itertools.product(*(r[1] for r in rows)):
        out.append(cls(**dict(zip(names, combo))))
    return out


def in_reference_grid(hp) -> bool:
    """True when every field of ``hp`` takes a value from the reference grid."""
    family = family_of(hp)
    ref = REFERENCE_GRIDS[family]
    d = asdict(hp)
    if family is ModelFamily.NN:
        h = d.pop("hidden")
        if len(h) not in ref["layers"] or any(w not in ref["perceptrons"] for w in h):
            return False
    if family is ModelFamily.RF and not d.pop("bootstrap"):
        return False
    return all(v in ref[k] for k, v in d.items())


def family_of(hp) -> ModelFamily:
    for fam, cls in PARAM_TYPES.items():
        if type(hp) is cls:
            return fam
    raise ConfigError(f"not a hyper-parameter object: {hp!r}")


def params_to_dict(hp) -> dict:
    d = asdict(hp)
    if "hidden" in d:
        d["hidden"] = list(d["hidden"])
    return d


def params_from_dict(family, d: dict):
    family = ModelFamily(family)
    d = dict(d)
    if "hidden" in d:
        d["hidden"] = tuple(d["hidden"])
    try:
        return PARAM_TYPES[family](**d)
    except TypeError as exc:
        raise ConfigError(f"bad {family.value} hyper-parameters: {exc}") from None


def params_label(hp) -> str:
    return ",".join(f"{k}={v}" for k, v in params_to_dict(hp).items())
