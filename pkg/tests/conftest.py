"""Shared fixtures and builders for the test suite."""

import json

import numpy as np
import pytest

from sparkperf.data import KMEANS, QUERY26, SPARKDL, Dataset, RunRecord, StageMetrics
from sparkperf.synthgen import ErnestLaw, GenerativeLaw, generate_runs

Q26_CORES = list(range(6, 46, 2))
KMEANS_CORES = list(range(6, 46, 2))


def stage(i, n=4, t=100.0, sh=10.0, b=1000.0):
    return StageMetrics(i, n, t * 1.5, t, sh * 1.5, sh, b * 1.5, b)


def stages(count):
    return tuple(stage(i) for i in range(count))


def q26_run(cores=10, size=750.0, time=320.5, with_stages=True, rid=0):
    return RunRecord("query26", size, cores, time, None, stages(10) if with_stages else None, rid)


def event_log_lines(start_ms, end_ms, stage_tasks, attempts=None, extra=()):
    """Spark-style event-log lines.

    ``stage_tasks`` maps a Spark stage id to a list of task dicts with keys
    ``launch``, ``finish`` (ms), optional ``fetch_wait`` (ms), ``write_ns``,
    ``remote``, ``local``, ``written`` and ``reason``.
    """
    attempts = attempts or {}
    out = [{"Event": "SparkListenerApplicationStart", "Timestamp": start_ms, "App Name": "bench"}]
    out.extend(extra)
    for sid, tasks in stage_tasks.items():
        att = attempts.get(sid, 0)
        for t in tasks:
            ev = {
                "Event": "SparkListenerTaskEnd",
                "Stage ID": sid,
                "Stage Attempt ID": t.get("attempt", att),
                "Task End Reason": {"Reason": t.get("reason", "Success")},
                "Task Info": {"Launch Time": t["launch"], "Finish Time": t["finish"]},
                "Task Metrics": {
                    "Shuffle Read Metrics": {
                        "Fetch Wait Time": t.get("fetch_wait", 0),
                        "Remote Bytes Read": t.get("remote", 0),
                        "Local Bytes Read": t.get("local", 0),
                    },
                    "Shuffle Write Metrics": {
                        "Shuffle Write Time": t.get("write_ns", 0),
                        "Shuffle Bytes Written": t.get("written", 0),
                    },
                },
            }
            out.append(ev)
        out.append({"Event": "SparkListenerStageCompleted", "Stage Info": {"Stage ID": sid, "Stage Attempt ID": att}})
    out.append({"Event": "SparkListenerApplicationEnd", "Timestamp": end_ms})
    return [json.dumps(e) for e in out]


def simple_log(n_stages, start_ms=1_000_000, end_ms=1_320_500, tasks_per_stage=2):
    tasks = {
        sid: [{"launch": 0, "finish": 10 * (k + 1), "fetch_wait": 1, "write_ns": 2e6, "remote": 5, "written": 7}
              for k in range(tasks_per_stage)]
        for sid in range(n_stages)
    }
    return event_log_lines(start_ms, end_ms, tasks)


@pytest.fixture
def q26_dataset():
    law = GenerativeLaw(ErnestLaw((2.0, 5.0, 1.0, 0.0005)), 0.02, 7)
    return generate_runs(law, Q26_CORES, [250, 750, 1000], 2, QUERY26)


@pytest.fixture
def kmeans_dataset():
    law = GenerativeLaw(ErnestLaw((1.0, 2.0, 0.5, 0.01)), 0.05, 3)
    return generate_runs(law, KMEANS_CORES, [5, 10, 15, 20], 1, KMEANS)


@pytest.fixture
def sparkdl_dataset():
    law = GenerativeLaw(ErnestLaw((0.5, 3.0, 2.0, 0.0)), 0.02, 4)
    return generate_runs(law, list(range(2, 50, 2)), [1000, 1500, 2500], 1, SPARKDL, tf_cores=48)


__all__ = ["Dataset", "np"]
