"""Feature sets for the Ernest, black-box and gray-box models.

Gray-box rows append, for every stage in DAG order, the seven stage
aggregates (task count, max/avg task time, max/avg shuffle time, max/avg
bytes). Those columns are only observable after a run completes, so at
prediction time they are replaced by their training means
(:func:`impute_dag_features`).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from .data import STAGE_METRIC_FIELDS, Dataset, FeatureMatrix, RunRecord
from .errors import DataError, FeatureError


class FeatureSetKind(enum.Enum):
    ERNEST = "ernest"
    BLACKBOX = "blackbox"
    GRAYBOX = "graybox"


ERNEST_NAMES = ("s_over_c", "log_c", "sqrt_s_over_c", "s2_over_c")
BLACKBOX_NAMES = ("s_over_c", "log_c", "data_size", "cores")


def ernest_features(run: RunRecord) -> Dict[str, float]:
    s, c = float(run.data_size), float(run.spark_cores)
    return {
        "s_over_c": s / c,
        "log_c": math.log(c),
        "sqrt_s_over_c": math.sqrt(s / c),
        "s2_over_c": s * s / c,
    }


def blackbox_features(run: RunRecord) -> Dict[str, float]:
    s, c = float(run.data_size), float(run.spark_cores)
    row = {"s_over_c": s / c, "log_c": math.log(c), "data_size": s, "cores": c}
    if run.tf_cores is not None:
        row["tf_cores"] = float(run.tf_cores)
    return row


def stage_column(stage: int, metric: str) -> str:
    return f"stage{stage}_{metric}"


def graybox_features(run: RunRecord) -> Dict[str, float]:
    if run.stages is None:
        raise FeatureError("stage metrics required for gray-box features")
    row = blackbox_features(run)
    for st in run.stages:
        for name, v in zip(STAGE_METRIC_FIELDS, st.values()):
            row[stage_column(st.stage_index, name)] = v
    if run.tf_cores is not None:
        row["inv_tf_cores"] = 1.0 / run.tf_cores
    return row


_ROW_BUILDERS = {
    FeatureSetKind.ERNEST: ernest_features,
    FeatureSetKind.BLACKBOX: blackbox_features,
    FeatureSetKind.GRAYBOX: graybox_features,
}


def is_dag_column(name: str) -> bool:
    return name.startswith("stage")


def build_matrix(ds: Dataset, kind: FeatureSetKind) -> FeatureMatrix:
    """One row per run, in dataset order; response is completion time (s)."""
    kind = FeatureSetKind(kind)
    if len(ds) == 0:
        raise FeatureError("empty dataset")
    builder = _ROW_BUILDERS[kind]
    names, rows = None, []
    for i, run in enumerate(ds.runs):
        try:
            row = builder(run)
        except FeatureError as exc:
            raise FeatureError(str(exc), run_index=i) from None
        if names is None:
            names = tuple(row)
        elif tuple(row) != names:
            raise FeatureError("feature layout differs from run 0", run_index=i)
        rows.append(list(row.values()))
    mask = [is_dag_column(n) for n in names]
    return FeatureMatrix(names, np.array(rows), [r.completion_time for r in ds.runs], mask)


def dag_means(train: FeatureMatrix) -> np.ndarray:
    """Training means of the DAG columns (in column order)."""
    return train.rows[:, train.dag_mask].mean(axis=0)


def impute_dag_features(train: FeatureMatrix, test: FeatureMatrix) -> FeatureMatrix:
    """Overwrite every DAG column of ``test`` with the ``train`` column mean."""
    if not train.same_layout(test):
        raise DataError("train and test matrices differ in feature names or dag mask")
    if not train.dag_mask.any():
        return test
    if train.n_rows == 0:
        raise DataError("cannot impute from an empty training matrix")
    rows = test.rows.copy()
    rows[:, train.dag_mask] = dag_means(train)
    return test.with_rows(rows)


@dataclass(frozen=True)
class Scaler:
    """Column-wise standardization state fitted on training rows."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X) -> "Scaler":
        X = np.asarray(X, dtype=float)
        if X.shape[0] < 2:
            raise DataError(f"standardization needs at least 2 training rows, got {X.shape[0]}")
        mean = X.mean(axis=0)
        sd = X.std(axis=0)
        # constant columns are only centred
        scale = np.where(sd > 0, sd, 1.0)
        return cls(mean, scale)

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[1] != len(self.mean):
            raise DataError(f"expected {len(self.mean)} columns, got {X.shape[1]}")
        return (X - self.mean) / self.scale

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d) -> "Scaler":
        return cls(np.array(d["mean"], dtype=float), np.array(d["scale"], dtype=float))


def standardize(train: FeatureMatrix, test: FeatureMatrix) -> Tuple[FeatureMatrix, FeatureMatrix, Scaler]:
    """Scale both matrices with the training mean and population sd."""
    if not train.same_layout(test):
        raise DataError("train and test matrices differ in feature names or dag mask")
    scaler = Scaler.fit(train.rows)
    return train.with_rows(scaler.transform(train.rows)), test.with_rows(scaler.transform(test.rows)), scaler


# -- serialization -----------------------------------------------------------

RESPONSE_COLUMN = "__response__"


def matrix_to_csv(fm: FeatureMatrix) -> Tuple[str, str]:
    """Return ``(csv_text, sidecar_json)``; the sidecar lists DAG columns."""
    lines = [",".join(fm.feature_names + (RESPONSE_COLUMN,))]
    for row, y in zip(fm.rows, fm.response):
        lines.append(",".join(repr(float(v)) for v in row) + "," + repr(float(y)))
    sidecar = {"dag_columns": [n for n, m in zip(fm.feature_names, fm.dag_mask) if m]}
    return "\n".join(lines) + "\n", json.dumps(sidecar, indent=1)


def matrix_from_csv(csv_text: str, sidecar_json: str) -> FeatureMatrix:
    lines = [ln for ln in csv_text.splitlines() if ln.strip()]
    header = lines[0].split(",")
    if header[-1] != RESPONSE_COLUMN:
        raise DataError(f"last column must be {RESPONSE_COLUMN}")
    names = tuple(header[:-1])
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]]).reshape(-1, len(header))
    dag = set(json.loads(sidecar_json)["dag_columns"])
    unknown = dag - set(names)
    if unknown:
        raise DataError(f"sidecar names unknown columns {sorted(unknown)}")
    return FeatureMatrix(names, data[:, :-1], data[:, -1], [n in dag for n in names])
