"""Shared data model: runs, per-stage aggregates, datasets and feature matrices.

Everything here is immutable once built. ``RunRecord`` is deliberately
lenient at construction time so that malformed input can be represented and
then rejected by :func:`validate_run` with a precise error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .errors import DataError, RunValidationError

STAGE_METRIC_FIELDS = (
    "num_tasks",
    "task_time_max",
    "task_time_avg",
    "shuffle_time_max",
    "shuffle_time_avg",
    "bytes_max",
    "bytes_avg",
)


@dataclass(frozen=True)
class StageMetrics:
    """Aggregates over the tasks of one stage (times in ms)."""

    stage_index: int
    num_tasks: int
    task_time_max: float
    task_time_avg: float
    shuffle_time_max: float
    shuffle_time_avg: float
    bytes_max: float
    bytes_avg: float

    def values(self) -> Tuple[float, ...]:
        """The seven metric values in canonical column order."""
        return tuple(float(getattr(self, name)) for name in STAGE_METRIC_FIELDS)

    def problems(self) -> list:
        out = []
        if self.stage_index < 0:
            out.append(f"stage_index must be >= 0, got {self.stage_index}")
        if self.num_tasks < 1:
            out.append(f"num_tasks must be >= 1, got {self.num_tasks}")
        for name in STAGE_METRIC_FIELDS[1:]:
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                out.append(f"{name} must be finite and >= 0, got {v}")
        for kind in ("task_time", "shuffle_time", "bytes"):
            avg, mx = getattr(self, kind + "_avg"), getattr(self, kind + "_max")
            if avg > mx:
                out.append(f"{kind}_avg ({avg}) exceeds {kind}_max ({mx})")
        return out


@dataclass(frozen=True)
class WorkloadProfile:
    """Static facts about a workload shared by all of its runs."""

    workload_id: str
    size_unit: str
    stage_count: int
    has_tf_cores: bool = False

    def __post_init__(self):
        if self.stage_count < 0:
            raise DataError(f"stage_count must be >= 0, got {self.stage_count}")


QUERY26 = WorkloadProfile("query26", "GB", 10)
KMEANS = WorkloadProfile("kmeans", "Mrows", 15)
SPARKDL = WorkloadProfile("sparkdl", "images", 8, has_tf_cores=True)

PROFILES = {p.workload_id: p for p in (QUERY26, KMEANS, SPARKDL)}


@dataclass(frozen=True)
class RunRecord:
    """One observed application execution."""

    workload_id: str
    data_size: float
    spark_cores: int
    completion_time: float
    tf_cores: Optional[int] = None
    stages: Optional[Tuple[StageMetrics, ...]] = None
    replicate_id: int = 0

    def __post_init__(self):
        if self.stages is not None and not isinstance(self.stages, tuple):
            object.__setattr__(self, "stages", tuple(self.stages))

    @property
    def config_key(self) -> Tuple[float, int]:
        return (self.data_size, self.spark_cores)


def validate_run(record: RunRecord, profile: WorkloadProfile) -> RunRecord:
    """Check ``record`` against its invariants and ``profile``.

    Returns the record unchanged. Raises :class:`RunValidationError` whose
    ``field`` attribute names the first violated field.
    """
    if record.workload_id != profile.workload_id:
        raise RunValidationError(
            "workload_id",
            f"run belongs to {record.workload_id!r}, profile is {profile.workload_id!r}",
        )
    t = record.completion_time
    if not (isinstance(t, (int, float)) and math.isfinite(t) and t > 0):
        raise RunValidationError("completion_time", f"completion time must be > 0, got {t}")
    s = record.data_size
    if not (isinstance(s, (int, float)) and math.isfinite(s) and s > 0):
        raise RunValidationError("data_size", f"data size must be > 0, got {s}")
    c = record.spark_cores
    if isinstance(c, bool) or not isinstance(c, (int, np.integer)) or c < 1:
        raise RunValidationError("spark_cores", f"cores must be ≥ 1, got {c}")
    if profile.has_tf_cores:
        tf = record.tf_cores
        if tf is None:
            raise RunValidationError("tf_cores", "tf_cores required by profile but absent")
        if isinstance(tf, bool) or not isinstance(tf, (int, np.integer)) or tf < 1:
            raise RunValidationError("tf_cores", f"tf_cores must be ≥ 1, got {tf}")
    elif record.tf_cores is not None:
        raise RunValidationError("tf_cores", "tf_cores present but profile does not declare it")
    if record.replicate_id < 0:
        raise RunValidationError("replicate_id", f"replicate_id must be >= 0, got {record.replicate_id}")
    if record.stages is not None:
        if len(record.stages) != profile.stage_count:
            raise RunValidationError(
                "stages",
                f"stage count mismatch: {len(record.stages)} stages, profile expects {profile.stage_count}",
            )
        for pos, st in enumerate(record.stages):
            if st.stage_index != pos:
                raise RunValidationError("stages", f"stage at position {pos} has stage_index {st.stage_index}")
            bad = st.problems()
            if bad:
                raise RunValidationError("stages", f"stage {pos}: {bad[0]}")
    return record


@dataclass(frozen=True)
class Dataset:
    """All runs of one workload."""

    profile: WorkloadProfile
    runs: Tuple[RunRecord, ...] = ()

    def __post_init__(self):
        if not isinstance(self.runs, tuple):
            object.__setattr__(self, "runs", tuple(self.runs))
        for i, r in enumerate(self.runs):
            if r.workload_id != self.profile.workload_id:
                raise DataError(
                    f"run {i} has workload_id {r.workload_id!r}, dataset is {self.profile.workload_id!r}"
                )

    def __len__(self):
        return len(self.runs)

    def __iter__(self):
        return iter(self.runs)

    def cores(self) -> list:
        return sorted({r.spark_cores for r in self.runs})

    def sizes(self) -> list:
        return sorted({r.data_size for r in self.runs})

    def configurations(self) -> dict:
        """Run count per (data_size, spark_cores) configuration."""
        out = {}
        for r in self.runs:
            out[r.config_key] = out.get(r.config_key, 0) + 1
        return dict(sorted(out.items()))

    def with_runs(self, runs: Iterable[RunRecord]) -> "Dataset":
        return Dataset(self.profile, tuple(runs))


def dataset_filter(ds: Dataset, cores_in, sizes_in) -> Dataset:
    """Keep runs whose cores and size are both in the given sets.

    Membership is exact equality on grid values. Order is preserved and an
    empty result is a valid (empty) dataset.
    """
    cores_in, sizes_in = set(cores_in), set(sizes_in)
    if not cores_in or not sizes_in:
        raise DataError("dataset_filter needs non-empty core and size sets")
    return ds.with_runs(
        r for r in ds.runs if r.spark_cores in cores_in and r.data_size in sizes_in
    )


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Named feature columns plus the response (seconds).

    ``dag_mask[j]`` is true when column ``j`` is derived from stage metrics,
    i.e. is only known after the run has completed.
    """

    feature_names: Tuple[str, ...]
    rows: np.ndarray
    response: np.ndarray
    dag_mask: np.ndarray = field(default=None)

    def __post_init__(self):
        names = tuple(self.feature_names)
        rows = np.array(self.rows, dtype=float, copy=True)
        if rows.ndim == 1 and len(names) == 0:
            rows = rows.reshape(len(rows), 0)
        if rows.ndim != 2:
            raise DataError(f"rows must be 2-D, got shape {rows.shape}")
        resp = np.array(self.response, dtype=float, copy=True).reshape(-1)
        mask = (
            np.zeros(len(names), dtype=bool)
            if self.dag_mask is None
            else np.array(self.dag_mask, dtype=bool, copy=True).reshape(-1)
        )
        if rows.shape[1] != len(names):
            raise DataError(f"{rows.shape[1]} columns but {len(names)} feature names")
        if len(mask) != len(names):
            raise DataError(f"dag_mask has length {len(mask)}, expected {len(names)}")
        if len(resp) != rows.shape[0]:
            raise DataError(f"response has length {len(resp)}, expected {rows.shape[0]}")
        if not np.all(np.isfinite(rows)) or not np.all(np.isfinite(resp)):
            raise DataError("feature matrix contains NaN or infinite entries")
        for a in (rows, resp, mask):
            a.flags.writeable = False
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "response", resp)
        object.__setattr__(self, "dag_mask", mask)

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def n_features(self) -> int:
        return self.rows.shape[1]

    def take(self, idx: Sequence[int]) -> "FeatureMatrix":
        """Row subset, in the order given by ``idx``."""
        idx = np.asarray(idx, dtype=int)
        return FeatureMatrix(self.feature_names, self.rows[idx], self.response[idx], self.dag_mask)

    def with_rows(self, rows: np.ndarray) -> "FeatureMatrix":
        return FeatureMatrix(self.feature_names, rows, self.response, self.dag_mask)

    def same_layout(self, other: "FeatureMatrix") -> bool:
        return self.feature_names == other.feature_names and np.array_equal(
            self.dag_mask, other.dag_mask
        )

    def __eq__(self, other):
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        return (
            self.same_layout(other)
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.response, other.response)
        )

    __hash__ = None
