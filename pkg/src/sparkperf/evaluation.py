"""MAPE, the repeated-run experiment protocol and comparison tables."""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from .data import Dataset, FeatureMatrix
from .errors import ConfigError, DataError, SparkPerfError
from .features import FeatureSetKind, build_matrix, impute_dag_features
from .models import fit_model, predict
from .models.params import HyperParams, ModelFamily, NnlsParams, params_to_dict
from .scenarios import ScenarioFamily, ScenarioSplit, apply_split, case_number
from .tuning import HoldOut, KFold, grid_search

KIND_ORDER = (FeatureSetKind.GRAYBOX, FeatureSetKind.BLACKBOX, FeatureSetKind.ERNEST)
FAMILY_ORDER = (ModelFamily.DT, ModelFamily.LR, ModelFamily.NN, ModelFamily.RF, ModelFamily.NNLS)
DEFAULT_REPETITIONS = {
    ModelFamily.LR: 10,
    ModelFamily.DT: 10,
    ModelFamily.RF: 10,
    ModelFamily.NN: 1,
    ModelFamily.NNLS: 1,
}
KIND_TITLES = {
    FeatureSetKind.GRAYBOX: "Gray Box Models",
    FeatureSetKind.BLACKBOX: "Black Box Models",
    FeatureSetKind.ERNEST: "Ernest",
}


def mape(y, yhat) -> float:
    """Mean absolute percentage error, in percent. Predictions are not clamped."""
    y = np.asarray(y, dtype=float).reshape(-1)
    yhat = np.asarray(yhat, dtype=float).reshape(-1)
    if len(y) != len(yhat):
        raise DataError(f"length mismatch: {len(y)} observations, {len(yhat)} predictions")
    if len(y) == 0:
        raise DataError("mape needs at least one observation")
    if np.any(y <= 0):
        raise DataError("observed times must be > 0")
    return float(100.0 / len(y) * np.sum(np.abs((y - yhat) / y)))


def column_label(kind: FeatureSetKind, family: ModelFamily) -> str:
    if kind is FeatureSetKind.ERNEST:
        return "ernest"
    return f"{kind.value}:{family.value.upper()}"


def parse_column_label(label: str) -> Tuple[FeatureSetKind, ModelFamily]:
    if label.lower() == "ernest":
        return FeatureSetKind.ERNEST, ModelFamily.NNLS
    try:
        kind, fam = label.split(":")
        kind, fam = FeatureSetKind(kind.lower()), ModelFamily(fam.lower())
    except ValueError:
        raise ConfigError(f"bad model label {label!r}; expected e.g. 'blackbox:LR' or 'ernest'") from None
    if kind is FeatureSetKind.ERNEST or fam is ModelFamily.NNLS:
        raise ConfigError(f"bad model label {label!r}: NNLS only pairs with Ernest features")
    return kind, fam


@dataclass(frozen=True)
class ExperimentSpec:
    workload_id: str
    scenario_family: ScenarioFamily
    case_id: str
    feature_kind: FeatureSetKind
    model_family: ModelFamily
    seeds: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ConfigError("an experiment needs at least one seed")
        if (self.feature_kind is FeatureSetKind.ERNEST) != (self.model_family is ModelFamily.NNLS):
            raise ConfigError("Ernest features go with the NNLS model and only with it")

    @classmethod
    def make(cls, workload_id, split: ScenarioSplit, kind, family, seeds=None, repetitions=None):
        kind, family = FeatureSetKind(kind), ModelFamily(family)
        if seeds is None:
            n = DEFAULT_REPETITIONS[family] if repetitions is None else repetitions
            seeds = range(n)
        elif repetitions is not None and repetitions != len(seeds):
            raise ConfigError("repetitions must equal the number of seeds")
        return cls(workload_id, split.family, split.case_id, kind, family, tuple(seeds))

    @property
    def repetitions(self) -> int:
        return len(self.seeds)

    @property
    def label(self) -> str:
        return column_label(self.feature_kind, self.model_family)

    def to_dict(self) -> dict:
        return {
            "workload_id": self.workload_id,
            "scenario_family": self.scenario_family.value,
            "case_id": self.case_id,
            "feature_kind": self.feature_kind.value,
            "model_family": self.model_family.value,
            "repetitions": self.repetitions,
            "seeds": list(self.seeds),
        }

    @classmethod
    def from_dict(cls, d) -> "ExperimentSpec":
        return cls(
            d["workload_id"],
            ScenarioFamily(d["scenario_family"]),
            d["case_id"],
            FeatureSetKind(d["feature_kind"]),
            ModelFamily(d["model_family"]),
            tuple(d["seeds"]),
        )


@dataclass(frozen=True)
class EvaluationReport:
    spec: ExperimentSpec
    per_seed_mape: Tuple[float, ...]
    best_hp: Tuple[HyperParams, ...]
    wall_time: float = field(default=0.0, compare=False)

    @property
    def mean_mape(self) -> float:
        return float(np.mean(self.per_seed_mape))

    def to_dict(self, include_timing: bool = False) -> dict:
        d = {
            "spec": self.spec.to_dict(),
            "per_seed_mape": list(self.per_seed_mape),
            "mean_mape": self.mean_mape,
            "best_hp": [params_to_dict(hp) for hp in self.best_hp],
        }
        if include_timing:
            d["wall_time"] = self.wall_time
        return d

    @classmethod
    def from_dict(cls, d) -> "EvaluationReport":
        from .models.params import params_from_dict

        spec = ExperimentSpec.from_dict(d["spec"])
        return cls(
            spec,
            tuple(float(v) for v in d["per_seed_mape"]),
            tuple(params_from_dict(spec.model_family, hp) for hp in d["best_hp"]),
            float(d.get("wall_time", 0.0)),
        )


@dataclass
class ExperimentHooks:
    """Optional callbacks used to observe the pipeline (e.g. in tests)."""

    on_round: Optional[Callable] = None
    on_predict: Optional[Callable[[int, FeatureMatrix, FeatureMatrix], None]] = None


def default_scheme(kind: FeatureSetKind, seed: int):
    """5-fold CV for a-priori features, 25 % hold-out for gray-box features."""
    if kind is FeatureSetKind.GRAYBOX:
        return HoldOut(seed=seed)
    return KFold(5, seed=seed)


def _add_context(exc: SparkPerfError, where: str, seed: int) -> None:
    """Prefix the message of ``exc`` in place, keeping its type and attributes."""
    if exc.args:
        exc.args = (f"{where}: {exc.args[0]}",) + exc.args[1:]
    exc.seed = seed


def run_experiment(
    ds: Dataset,
    split: ScenarioSplit,
    spec: ExperimentSpec,
    grid=None,
    hooks: Optional[ExperimentHooks] = None,
) -> EvaluationReport:
    """Tune, refit and score one (case, feature kind, model family) cell per seed."""
    t0 = time.perf_counter()
    hooks = hooks or ExperimentHooks()
    if split.case_id != spec.case_id:
        raise ConfigError(f"split {split.case_id} does not match spec case {spec.case_id}")
    train_ds, test_ds = apply_split(ds, split)
    train = build_matrix(train_ds, spec.feature_kind)
    test = impute_dag_features(train, build_matrix(test_ds, spec.feature_kind))

    mapes, hps = [], []
    for seed in spec.seeds:
        try:
            if spec.model_family is ModelFamily.NNLS:
                hp = NnlsParams()
            else:
                scheme = default_scheme(spec.feature_kind, seed)
                hp = grid_search(train, spec.model_family, grid, scheme, seed, hooks.on_round).best_hp
            model = fit_model(train.rows, train.response, spec.model_family, hp, seed=seed)
            if hooks.on_predict:
                hooks.on_predict(seed, train, test)
            mapes.append(mape(test.response, predict(model, test.rows)))
        except SparkPerfError as exc:
            _add_context(exc, f"{spec.label} {spec.case_id} seed {seed}", seed)
            raise
        hps.append(hp)
    return EvaluationReport(spec, tuple(mapes), tuple(hps), time.perf_counter() - t0)


# -- comparison tables ---------------------------------------------------------


@dataclass(frozen=True)
class ComparisonTable:
    workload_id: str
    scenario_family: ScenarioFamily
    columns: Tuple[str, ...]
    case_ids: Tuple[str, ...]
    cells: Dict[Tuple[str, str], float]

    def value(self, case_id: str, column: str) -> Optional[float]:
        return self.cells.get((case_id, column))

    def best(self, case_id: str) -> Optional[str]:
        """Column with the lowest MAPE in a row (first one on ties)."""
        vals = [(self.cells[(case_id, c)], i, c) for i, c in enumerate(self.columns) if (case_id, c) in self.cells]
        return min(vals)[2] if vals else None

    def to_dict(self) -> dict:
        return {
            "workload_id": self.workload_id,
            "scenario_family": self.scenario_family.value,
            "columns": list(self.columns),
            "rows": [
                {
                    "case_id": cid,
                    "mape": {c: self.cells.get((cid, c)) for c in self.columns},
                    "best": self.best(cid),
                }
                for cid in self.case_ids
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["case_id"] + list(self.columns) + ["best"])
        for cid in self.case_ids:
            row = [cid]
            for c in self.columns:
                v = self.cells.get((cid, c))
                row.append("" if v is None else f"{v:.4f}")
            w.writerow(row + [self.best(cid)])
        return buf.getvalue()

    def to_text(self) -> str:
        """Aligned table grouped as gray box | black box | Ernest; '*' marks the row best."""
        groups = []
        for kind in KIND_ORDER:
            cols = [c for c in self.columns if _kind_of(c) is kind]
            if cols:
                groups.append((KIND_TITLES[kind], cols))
        width = 8
        head1 = head2 = " " * 6
        widths = {}
        for title, cols in groups:
            # a lone column widens so its group title fits
            w = max(width, -(-(len(title) + 2) // len(cols)))
            widths.update((c, w) for c in cols)
            span = w * len(cols)
            head1 += "|" + title.center(span)
            head2 += "|" + "".join(
                ("Ernest" if c == "ernest" else c.split(":")[1]).rjust(w - 1) + " " for c in cols
            )
        lines = [
            f"MAPE (%) {self.workload_id} {self.scenario_family.value}",
            head1,
            head2,
            "-" * len(head2),
        ]
        for cid in self.case_ids:
            best = self.best(cid)
            line = f"{cid:<6}"
            for _, cols in groups:
                line += "|"
                for c in cols:
                    v = self.cells.get((cid, c))
                    num = "-" if v is None else f"{v:.1f}"
                    line += num.rjust(widths[c] - 1) + ("*" if c == best else " ")
            lines.append(line)
        return "\n".join(lines) + "\n"

    def render(self, fmt: str = "table") -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        if fmt == "table":
            return self.to_text()
        raise ConfigError(f"unknown format {fmt!r}")


def _kind_of(label: str) -> FeatureSetKind:
    return parse_column_label(label)[0]


def _column_key(label: str):
    kind, fam = parse_column_label(label)
    return KIND_ORDER.index(kind), FAMILY_ORDER.index(fam)


def compare_models(reports: Sequence[EvaluationReport]) -> ComparisonTable:
    """Arrange reports as case rows x (feature kind, model) columns of mean MAPE."""
    if not reports:
        raise DataError("no reports to compare")
    first = reports[0].spec
    for r in reports:
        if r.spec.workload_id != first.workload_id:
            raise DataError(f"mixed workloads: {first.workload_id} and {r.spec.workload_id}")
        if r.spec.scenario_family is not first.scenario_family:
            raise DataError("mixed scenario families")
    cells = {}
    for r in reports:
        key = (r.spec.case_id, r.spec.label)
        if key in cells:
            raise DataError(f"duplicate report for {key}")
        cells[key] = r.mean_mape
    columns = tuple(sorted({r.spec.label for r in reports}, key=_column_key))
    cases = tuple(sorted({r.spec.case_id for r in reports}, key=lambda c: (case_number(c), c)))
    return ComparisonTable(first.workload_id, first.scenario_family, columns, cases, cells)
