"""Turn Spark event logs and canonical CSV files into datasets.

Event logs are newline-delimited JSON with an ``Event`` discriminator. Only
four event types are read::

    SparkListenerApplicationStart / SparkListenerApplicationEnd  -> wall time
    SparkListenerStageCompleted                                  -> stage ids
    SparkListenerTaskEnd                                         -> task metrics

Per task, shuffle time is fetch-wait (read side) plus write time, and bytes
transmitted is shuffle bytes read (remote + local) plus shuffle bytes written.
Only the last attempt of a retried stage is kept.
"""

from __future__ import annotations

import csv
import io
import json
import os
from collections import defaultdict
from dataclasses import asdict, dataclass
from typing import Iterable, List, Optional

import numpy as np

from .data import Dataset, RunRecord, StageMetrics, WorkloadProfile, validate_run
from .errors import DataError, LogParseError

SCHEMA_VERSION = 1

RUN_COLUMNS = ("workload_id", "data_size", "spark_cores", "tf_cores", "completion_time_s", "replicate_id")
STAGE_COLUMNS = (
    "workload_id",
    "replicate_id",
    "stage_index",
    "num_tasks",
    "task_time_max_ms",
    "task_time_avg_ms",
    "shuffle_time_max_ms",
    "shuffle_time_avg_ms",
    "bytes_max",
    "bytes_avg",
)

APP_START = "SparkListenerApplicationStart"
APP_END = "SparkListenerApplicationEnd"
STAGE_DONE = "SparkListenerStageCompleted"
TASK_END = "SparkListenerTaskEnd"


@dataclass(frozen=True)
class TaskEvent:
    stage_index: int
    duration_ms: float
    shuffle_time_ms: float = 0.0
    bytes_transmitted: float = 0.0


def aggregate_stages(events: Iterable[TaskEvent], stage_count: int) -> List[StageMetrics]:
    """Per-stage count, max and mean of task time, shuffle time and bytes."""
    buckets = defaultdict(list)
    for ev in events:
        if not 0 <= ev.stage_index < stage_count:
            raise LogParseError("orphan task", f"stage index {ev.stage_index} outside [0, {stage_count})")
        vals = (ev.duration_ms, ev.shuffle_time_ms, ev.bytes_transmitted)
        if any(not np.isfinite(v) or v < 0 for v in vals):
            raise DataError(f"task metrics must be finite and non-negative, got {vals}")
        buckets[ev.stage_index].append(vals)

    out = []
    for i in range(stage_count):
        if i not in buckets:
            raise LogParseError("stage without tasks", f"stage {i} has no task events")
        a = np.array(buckets[i], dtype=float)
        mx = a.max(axis=0)
        # the float mean of equal values can land one ulp above them
        avg = np.minimum(a.mean(axis=0), mx)
        out.append(
            StageMetrics(
                stage_index=i,
                num_tasks=len(a),
                task_time_max=float(mx[0]),
                task_time_avg=float(avg[0]),
                shuffle_time_max=float(mx[1]),
                shuffle_time_avg=float(avg[1]),
                bytes_max=float(mx[2]),
                bytes_avg=float(avg[2]),
            )
        )
    return out


def _task_from_event(ev):
    info = ev.get("Task Info", {})
    metrics = ev.get("Task Metrics") or {}
    if "Finish Time" in info and "Launch Time" in info:
        duration = float(info["Finish Time"]) - float(info["Launch Time"])
    else:
        duration = float(metrics.get("Executor Run Time", 0.0))

    read = metrics.get("Shuffle Read Metrics") or {}
    write = metrics.get("Shuffle Write Metrics") or {}
    fetch_wait = read.get("Fetch Wait Time")
    # Spark reports shuffle write time in nanoseconds
    write_time = write.get("Shuffle Write Time")
    write_time = None if write_time is None else write_time / 1e6
    parts = [t for t in (fetch_wait, write_time) if t is not None]
    shuffle = float(sum(parts)) if parts else 0.0

    nbytes = float(
        read.get("Remote Bytes Read", 0)
        + read.get("Local Bytes Read", 0)
        + write.get("Shuffle Bytes Written", 0)
    )
    return duration, shuffle, nbytes


def parse_event_log(
    lines: Iterable[str],
    profile: WorkloadProfile,
    data_size: float,
    spark_cores: int,
    tf_cores: Optional[int] = None,
    replicate_id: int = 0,
) -> RunRecord:
    """Build a validated :class:`RunRecord` from event-log lines.

    Stage indices are assigned by ascending Spark stage id over the completed
    stages. Events of unknown type are skipped.
    """
    start = end = None
    last_attempt = {}
    tasks = []
    for lineno, raw in enumerate(lines, start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            ev = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise LogParseError("malformed json", exc.msg, line=lineno) from None
        if not isinstance(ev, dict):
            raise LogParseError("malformed json", "event is not an object", line=lineno)
        kind = ev.get("Event")
        if kind == APP_START:
            start = float(ev["Timestamp"])
        elif kind == APP_END:
            end = float(ev["Timestamp"])
        elif kind == STAGE_DONE:
            info = ev["Stage Info"]
            sid, attempt = int(info["Stage ID"]), int(info.get("Stage Attempt ID", 0))
            last_attempt[sid] = max(attempt, last_attempt.get(sid, attempt))
        elif kind == TASK_END:
            reason = (ev.get("Task End Reason") or {}).get("Reason", "Success")
            if reason != "Success":
                continue
            sid = int(ev["Stage ID"])
            attempt = int(ev.get("Stage Attempt ID", 0))
            tasks.append((lineno, sid, attempt) + _task_from_event(ev))

    if start is None:
        raise LogParseError("truncated log", "no application start event")
    if end is None:
        raise LogParseError("truncated log", "no application end event")

    index_of = {sid: i for i, sid in enumerate(sorted(last_attempt))}
    events = []
    for lineno, sid, attempt, duration, shuffle, nbytes in tasks:
        if sid not in index_of:
            raise LogParseError("orphan task", f"task references unknown stage {sid}", line=lineno)
        if attempt != last_attempt[sid]:
            continue
        events.append(TaskEvent(index_of[sid], duration, shuffle, nbytes))

    stages = tuple(aggregate_stages(events, len(index_of))) if index_of else None
    record = RunRecord(
        workload_id=profile.workload_id,
        data_size=float(data_size),
        spark_cores=int(spark_cores),
        completion_time=(end - start) / 1000.0,
        tf_cores=None if tf_cores is None else int(tf_cores),
        stages=stages,
        replicate_id=int(replicate_id),
    )
    return validate_run(record, profile)


def parse_event_log_file(path, profile, **meta) -> RunRecord:
    with open(path, encoding="utf-8") as fh:
        return parse_event_log(fh, profile, **meta)


# -- canonical CSV ---------------------------------------------------------


def _open_text(src, mode="r"):
    if isinstance(src, (str, os.PathLike)):
        return open(src, mode, newline="", encoding="utf-8")
    return src


def _read_rows(src, expected, what):
    fh = _open_text(src)
    try:
        reader = csv.DictReader(fh)
        header = tuple(reader.fieldnames or ())
        if set(header) != set(expected) or len(header) != len(expected):
            raise DataError(f"{what} schema mismatch: got columns {list(header)}, expected {list(expected)}")
        return list(reader)
    finally:
        if fh is not src:
            fh.close()


def load_runs_csv(main, profile: WorkloadProfile, stages=None) -> Dataset:
    """Read the canonical run CSV (and optional stage sidecar) into a Dataset.

    Stage rows are joined on ``(workload_id, replicate_id)``, which must be
    unique per run. Every record goes through :func:`validate_run`.
    """
    rows = _read_rows(main, RUN_COLUMNS, "run CSV")
    stage_rows = defaultdict(list)
    if stages is not None:
        for r in _read_rows(stages, STAGE_COLUMNS, "stage CSV"):
            try:
                key = (r["workload_id"], int(r["replicate_id"]))
                stage_rows[key].append(
                    StageMetrics(
                        stage_index=int(r["stage_index"]),
                        num_tasks=int(r["num_tasks"]),
                        task_time_max=float(r["task_time_max_ms"]),
                        task_time_avg=float(r["task_time_avg_ms"]),
                        shuffle_time_max=float(r["shuffle_time_max_ms"]),
                        shuffle_time_avg=float(r["shuffle_time_avg_ms"]),
                        bytes_max=float(r["bytes_max"]),
                        bytes_avg=float(r["bytes_avg"]),
                    )
                )
            except ValueError as exc:
                raise DataError(f"stage CSV: bad value: {exc}") from None

    runs, seen = [], set()
    for lineno, r in enumerate(rows, start=2):
        try:
            key = (r["workload_id"], int(r["replicate_id"]))
            tf = r["tf_cores"].strip()
            st = stage_rows.pop(key, None)
            rec = RunRecord(
                workload_id=r["workload_id"],
                data_size=float(r["data_size"]),
                spark_cores=int(r["spark_cores"]),
                completion_time=float(r["completion_time_s"]),
                tf_cores=int(tf) if tf else None,
                stages=None if st is None else tuple(sorted(st, key=lambda m: m.stage_index)),
                replicate_id=int(r["replicate_id"]),
            )
        except ValueError as exc:
            raise DataError(f"run CSV line {lineno}: bad value: {exc}") from None
        if key in seen:
            raise DataError(f"run CSV line {lineno}: duplicate run key {key}")
        seen.add(key)
        runs.append(validate_run(rec, profile))
    if stage_rows:
        orphan = sorted(stage_rows)[0]
        raise DataError(f"stage CSV rows reference unknown run {orphan}")
    return Dataset(profile, tuple(runs))


def _num(v):
    return repr(float(v))


def write_runs_csv(ds: Dataset, main, stages=None) -> None:
    """Write ``ds`` in the canonical CSV layout (floats written round-trip exact)."""
    fh = _open_text(main, "w")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RUN_COLUMNS)
        for r in ds.runs:
            w.writerow(
                [
                    r.workload_id,
                    _num(r.data_size),
                    r.spark_cores,
                    "" if r.tf_cores is None else r.tf_cores,
                    _num(r.completion_time),
                    r.replicate_id,
                ]
            )
    finally:
        if fh is not main:
            fh.close()
    if stages is None:
        return
    fh = _open_text(stages, "w")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STAGE_COLUMNS)
        for r in ds.runs:
            for st in r.stages or ():
                w.writerow(
                    [r.workload_id, r.replicate_id, st.stage_index, st.num_tasks]
                    + [_num(v) for v in st.values()[1:]]
                )
    finally:
        if fh is not stages:
            fh.close()


def runs_csv_text(ds: Dataset):
    """Return ``(main_csv, stage_csv)`` as strings."""
    main, stages = io.StringIO(), io.StringIO()
    write_runs_csv(ds, main, stages)
    return main.getvalue(), stages.getvalue()


# -- JSON ------------------------------------------------------------------


def dataset_to_dict(ds: Dataset) -> dict:
    runs = []
    for r in ds.runs:
        d = asdict(r)
        d["stages"] = None if r.stages is None else [asdict(s) for s in r.stages]
        runs.append(d)
    return {"schema_version": SCHEMA_VERSION, "profile": asdict(ds.profile), "runs": runs}


def dataset_from_dict(doc: dict) -> Dataset:
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise DataError(f"unsupported dataset schema_version {version!r}")
    profile = WorkloadProfile(**doc["profile"])
    runs = []
    for d in doc["runs"]:
        d = dict(d)
        st = d.pop("stages")
        d["stages"] = None if st is None else tuple(StageMetrics(**s) for s in st)
        runs.append(validate_run(RunRecord(**d), profile))
    return Dataset(profile, tuple(runs))


def dumps_dataset(ds: Dataset) -> str:
    return json.dumps(dataset_to_dict(ds), indent=1, sort_keys=True)


def loads_dataset(text: str) -> Dataset:
    return dataset_from_dict(json.loads(text))


# -- event-log directories ---------------------------------------------------

MANIFEST_COLUMNS = ("file", "data_size", "spark_cores", "tf_cores", "replicate_id")


def ingest_log_directory(directory, profile: WorkloadProfile, skip_bad=False):
    """Parse every log listed in ``<directory>/manifest.csv``.

    The manifest supplies the run metadata a log does not carry
    (``file,data_size,spark_cores,tf_cores,replicate_id``). Returns
    ``(dataset, failures)`` where ``failures`` lists ``(file, error)`` pairs;
    with ``skip_bad=False`` the first failure is raised instead.
    """
    manifest = os.path.join(directory, "manifest.csv")
    if not os.path.exists(manifest):
        logs = [f for f in os.listdir(directory) if not f.startswith(".")] if os.path.isdir(directory) else []
        if not logs:
            raise DataError(f"no input logs in {directory}")
        raise DataError(f"{directory} has no manifest.csv describing its logs")
    entries = _read_rows(manifest, MANIFEST_COLUMNS, "manifest")
    if not entries:
        raise DataError(f"no input logs in {directory}")
    runs, failures = [], []
    for e in entries:
        path = os.path.join(directory, e["file"])
        tf = e["tf_cores"].strip()
        try:
            runs.append(
                parse_event_log_file(
                    path,
                    profile,
                    data_size=float(e["data_size"]),
                    spark_cores=int(e["spark_cores"]),
                    tf_cores=int(tf) if tf else None,
                    replicate_id=int(e["replicate_id"]),
                )
            )
        except (DataError, OSError, KeyError, ValueError) as exc:
            if not skip_bad:
                if isinstance(exc, LogParseError):
                    raise LogParseError(exc.kind, f"{e['file']}: {exc}", exc.line) from None
                raise DataError(f"{e['file']}: {exc}") from None
            failures.append((e["file"], str(exc)))
    return Dataset(profile, tuple(runs)), failures
