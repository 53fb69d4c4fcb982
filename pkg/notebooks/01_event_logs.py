# %% [markdown]
# # From Spark event logs to run records
#
# A Spark event log is a JSON-lines file. Completion time is the gap between
# the application start and end events; each successful task contributes its
# duration, shuffle fetch/write time and shuffle bytes to its stage.
# We write a small log by hand, parse it, then ingest a directory of logs.

# %%
import json
import os
import tempfile

from sparkperf import QUERY26
from sparkperf.ingest import ingest_log_directory, parse_event_log


def task(sid, launch, finish, fetch_ms, write_ns, read_bytes, written):
    return {
        "Event": "SparkListenerTaskEnd",
        "Stage ID": sid,
        "Stage Attempt ID": 0,
        "Task End Reason": {"Reason": "Success"},
        "Task Info": {"Launch Time": launch, "Finish Time": finish},
        "Task Metrics": {
            "Shuffle Read Metrics": {"Fetch Wait Time": fetch_ms, "Remote Bytes Read": read_bytes, "Local Bytes Read": 0},
            "Shuffle Write Metrics": {"Shuffle Write Time": write_ns, "Shuffle Bytes Written": written},
        },
    }


def make_log(seconds, n_stages=10):
    events = [{"Event": "SparkListenerApplicationStart", "Timestamp": 0}]
    for sid in range(n_stages):
        events += [task(sid, 0, 40 + 10 * k, 2, 3_000_000, 1000 * (k + 1), 500) for k in range(3)]
        events.append({"Event": "SparkListenerStageCompleted", "Stage Info": {"Stage ID": sid, "Stage Attempt ID": 0}})
    events.append({"Event": "SparkListenerApplicationEnd", "Timestamp": int(seconds * 1000)})
    return [json.dumps(e) for e in events]


# %% [markdown]
# One log becomes one `RunRecord`. Query 26 has a fixed ten-stage DAG, so the
# parser checks the stage count against the workload profile.

# %%
run = parse_event_log(make_log(320.5), QUERY26, data_size=750, spark_cores=10)
print(run.completion_time, len(run.stages))
print(run.stages[0])

# %% [markdown]
# A directory of logs is described by `manifest.csv`, which carries the
# configuration each log was recorded under (data size, cores, replicate).

# %%
with tempfile.TemporaryDirectory() as tmp:
    rows = ["file,data_size,spark_cores,tf_cores,replicate_id"]
    for i, cores in enumerate((6, 8, 10, 12)):
        name = f"app-{i}.log"
        with open(os.path.join(tmp, name), "w") as fh:
            fh.write("\n".join(make_log(400.0 / cores + 20)) + "\n")
        rows.append(f"{name},750,{cores},,{i}")
    with open(os.path.join(tmp, "manifest.csv"), "w") as fh:
        fh.write("\n".join(rows) + "\n")
    ds, failures = ingest_log_directory(tmp, QUERY26)

print(len(ds), failures)
print([(r.spark_cores, round(r.completion_time, 2)) for r in ds.runs])
