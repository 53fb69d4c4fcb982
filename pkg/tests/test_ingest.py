import io
import json
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import event_log_lines, simple_log, stages
from sparkperf.data import KMEANS, QUERY26, SPARKDL, Dataset, RunRecord, WorkloadProfile
from sparkperf.errors import DataError, LogParseError, RunValidationError
from sparkperf.ingest import (
    STAGE_COLUMNS,
    TaskEvent,
    aggregate_stages,
    ingest_log_directory,
    load_runs_csv,
    parse_event_log,
    runs_csv_text,
    write_runs_csv,
)


def two_pass_oracle(events, stage_count):
    """Reference aggregation: plain Python, one stage at a time."""
    out = []
    for i in range(stage_count):
        mine = [e for e in events if e.stage_index == i]
        cols = list(zip(*[(e.duration_ms, e.shuffle_time_ms, e.bytes_transmitted) for e in mine]))
        out.append((len(mine),) + tuple(x for c in cols for x in (max(c), sum(c) / len(c))))
    return out


task_events = st.lists(
    st.builds(
        TaskEvent,
        stage_index=st.integers(0, 3),
        duration_ms=st.floats(0, 1e6, allow_nan=False),
        shuffle_time_ms=st.floats(0, 1e4, allow_nan=False),
        bytes_transmitted=st.floats(0, 1e9, allow_nan=False),
    ),
    min_size=1,
    max_size=60,
)


class TestAggregateStages:
    def test_three_tasks(self):
        evs = [TaskEvent(0, d) for d in (10.0, 20.0, 30.0)]
        (m,) = aggregate_stages(evs, 1)
        assert m.num_tasks == 3
        assert m.task_time_max == 30.0
        assert m.task_time_avg == 20.0

    def test_single_task_max_equals_avg(self):
        (m,) = aggregate_stages([TaskEvent(0, 7.0, 3.0, 11.0)], 1)
        assert m.task_time_max == m.task_time_avg == 7.0
        assert m.shuffle_time_max == m.shuffle_time_avg == 3.0
        assert m.bytes_max == m.bytes_avg == 11.0

    def test_stage_without_tasks(self):
        with pytest.raises(LogParseError) as ei:
            aggregate_stages([TaskEvent(0, 1.0)], 2)
        assert ei.value.kind == "stage without tasks"

    def test_out_of_range_stage(self):
        with pytest.raises(LogParseError) as ei:
            aggregate_stages([TaskEvent(5, 1.0)], 2)
        assert ei.value.kind == "orphan task"

    def test_negative_metric(self):
        with pytest.raises(DataError):
            aggregate_stages([TaskEvent(0, -1.0)], 1)

    @settings(max_examples=150, deadline=None)
    @given(task_events)
    def test_matches_two_pass_oracle(self, events):
        k = max(e.stage_index for e in events) + 1
        if {e.stage_index for e in events} != set(range(k)):
            return
        got = aggregate_stages(events, k)
        want = two_pass_oracle(events, k)
        for m, w in zip(got, want):
            assert m.num_tasks == w[0]
            np.testing.assert_allclose(m.values()[1:], w[1:], rtol=1e-12, atol=1e-9)
            # invariants: avg never exceeds max, totals preserved
            assert m.task_time_avg <= m.task_time_max
            assert m.shuffle_time_avg <= m.shuffle_time_max
            assert m.bytes_avg <= m.bytes_max
        assert sum(m.num_tasks for m in got) == len(events)
        total = sum(m.task_time_avg * m.num_tasks for m in got)
        np.testing.assert_allclose(total, sum(e.duration_ms for e in events), rtol=1e-9, atol=1e-6)

    @settings(max_examples=80, deadline=None)
    @given(task_events, st.randoms(use_true_random=False))
    def test_permutation_invariant(self, events, rnd):
        k = 4
        events = events + [TaskEvent(i, 1.0) for i in range(k)]
        shuffled = list(events)
        rnd.shuffle(shuffled)
        a = aggregate_stages(events, k)
        b = aggregate_stages(shuffled, k)
        for x, y in zip(a, b):
            assert x.num_tasks == y.num_tasks
            np.testing.assert_allclose(x.values(), y.values(), rtol=1e-12)


class TestParseEventLog:
    def test_completion_time_from_app_events(self):
        rec = parse_event_log(simple_log(10), QUERY26, 750, 10)
        assert rec.completion_time == pytest.approx(320.5, abs=1e-9)
        assert len(rec.stages) == 10

    def test_kmeans_fifteen_stages(self):
        rec = parse_event_log(simple_log(15), KMEANS, 10, 8)
        assert len(rec.stages) == 15
        assert [s.stage_index for s in rec.stages] == list(range(15))

    def test_task_metrics_conversion(self):
        lines = event_log_lines(
            0,
            5000,
            {3: [{"launch": 100, "finish": 160, "fetch_wait": 4, "write_ns": 6e6,
                  "remote": 100, "local": 20, "written": 5}]},
        )
        toy = WorkloadProfile("toy", "GB", 1)
        rec = parse_event_log(lines, toy, 1, 1)
        (m,) = rec.stages
        assert m.task_time_max == 60.0
        assert m.shuffle_time_max == pytest.approx(10.0)
        assert m.bytes_max == 125.0
        assert rec.completion_time == 5.0

    def test_stage_ids_renumbered_in_order(self):
        toy = WorkloadProfile("toy", "GB", 2)
        lines = event_log_lines(0, 10, {7: [{"launch": 0, "finish": 5}], 2: [{"launch": 0, "finish": 9}]})
        rec = parse_event_log(lines, toy, 1, 1)
        assert [s.task_time_max for s in rec.stages] == [9.0, 5.0]

    def test_failed_tasks_and_old_attempts_skipped(self):
        toy = WorkloadProfile("toy", "GB", 1)
        tasks = {0: [
            {"launch": 0, "finish": 5, "attempt": 1},
            {"launch": 0, "finish": 500, "attempt": 0},
            {"launch": 0, "finish": 900, "attempt": 1, "reason": "ExceptionFailure"},
        ]}
        rec = parse_event_log(event_log_lines(0, 10, tasks, attempts={0: 1}), toy, 1, 1)
        assert rec.stages[0].num_tasks == 1
        assert rec.stages[0].task_time_max == 5.0

    def test_missing_end_is_truncated(self):
        lines = simple_log(10)[:-1]
        with pytest.raises(LogParseError) as ei:
            parse_event_log(lines, QUERY26, 750, 10)
        assert ei.value.kind == "truncated log"

    def test_missing_start_is_truncated(self):
        with pytest.raises(LogParseError) as ei:
            parse_event_log(simple_log(10)[1:], QUERY26, 750, 10)
        assert ei.value.kind == "truncated log"

    def test_malformed_json_reports_line(self):
        lines = simple_log(10)
        lines.insert(3, "{not json")
        with pytest.raises(LogParseError) as ei:
            parse_event_log(lines, QUERY26, 750, 10)
        assert ei.value.kind == "malformed json"
        assert ei.value.line == 4

    def test_orphan_task(self):
        lines = simple_log(10)
        # drop the completion event of the first stage, keeping its tasks
        lines = [ln for ln in lines if not ('StageCompleted' in ln and '"Stage ID": 0,' in ln)]
        with pytest.raises(LogParseError) as ei:
            parse_event_log(lines, QUERY26, 750, 10)
        assert ei.value.kind == "orphan task"

    def test_wrong_stage_count_is_validation_error(self):
        with pytest.raises(RunValidationError, match="stage count mismatch"):
            parse_event_log(simple_log(9), QUERY26, 750, 10)

    def test_sparkdl_carries_tf_cores(self):
        rec = parse_event_log(simple_log(8), SPARKDL, 1000, 4, tf_cores=48, replicate_id=3)
        assert rec.tf_cores == 48 and rec.replicate_id == 3

    def test_unknown_events_ignored(self):
        lines = simple_log(10)
        lines.insert(1, json.dumps({"Event": "SparkListenerExecutorAdded", "Executor ID": "1"}))
        assert len(parse_event_log(lines, QUERY26, 750, 10).stages) == 10


def _q26_runs(n, with_stages):
    runs = []
    for i in range(n):
        c = 6 + 2 * (i % 20)
        s = (250.0, 750.0, 1000.0)[(i // 20) % 3]
        runs.append(RunRecord("query26", s, c, 100.0 + 0.1 * i, None, stages(10) if with_stages else None, i))
    return Dataset(QUERY26, tuple(runs))


class TestRunsCsv:
    def test_120_rows_without_sidecar(self):
        ds = _q26_runs(120, with_stages=False)
        main, _ = runs_csv_text(ds)
        back = load_runs_csv(io.StringIO(main), QUERY26)
        assert len(back) == 120
        assert all(r.stages is None for r in back)
        assert back == ds

    def test_round_trip_with_stages(self, tmp_path):
        ds = _q26_runs(30, with_stages=True)
        write_runs_csv(ds, tmp_path / "runs.csv", tmp_path / "stages.csv")
        back = load_runs_csv(tmp_path / "runs.csv", QUERY26, tmp_path / "stages.csv")
        assert back == ds

    def test_round_trip_generated(self, sparkdl_dataset):
        main, side = runs_csv_text(sparkdl_dataset)
        back = load_runs_csv(io.StringIO(main), SPARKDL, io.StringIO(side))
        assert back == sparkdl_dataset

    def test_nine_stage_sidecar_rejected(self):
        ds = _q26_runs(2, with_stages=True)
        main, side = runs_csv_text(ds)
        lines = side.splitlines()
        header, body = lines[0], lines[1:]
        # drop the last stage row of run 0
        body = [ln for ln in body if not ln.startswith("query26,0,9,")]
        with pytest.raises(RunValidationError, match="stage count mismatch"):
            load_runs_csv(io.StringIO(main), QUERY26, io.StringIO("\n".join([header] + body) + "\n"))

    def test_schema_mismatch(self):
        with pytest.raises(DataError, match="schema mismatch"):
            load_runs_csv(io.StringIO("a,b\n1,2\n"), QUERY26)

    def test_duplicate_key(self):
        main, _ = runs_csv_text(_q26_runs(2, False))
        lines = main.splitlines()
        with pytest.raises(DataError, match="duplicate"):
            load_runs_csv(io.StringIO("\n".join(lines + [lines[1]]) + "\n"), QUERY26)

    def test_orphan_stage_rows(self):
        main, side = runs_csv_text(_q26_runs(2, True))
        only_first = "\n".join(main.splitlines()[:2]) + "\n"
        with pytest.raises(DataError, match="unknown run"):
            load_runs_csv(io.StringIO(only_first), QUERY26, io.StringIO(side))

    def test_bad_value(self):
        main, _ = runs_csv_text(_q26_runs(1, False))
        with pytest.raises(DataError, match="bad value"):
            load_runs_csv(io.StringIO(main.replace("100.0", "abc")), QUERY26)

    def test_stage_header(self):
        _, side = runs_csv_text(_q26_runs(1, True))
        assert side.splitlines()[0].split(",") == list(STAGE_COLUMNS)


def _write_log_dir(path, logs):
    rows = ["file,data_size,spark_cores,tf_cores,replicate_id"]
    for i, (name, lines) in enumerate(logs):
        (path / name).write_text("\n".join(lines) + "\n")
        rows.append(f"{name},750,{6 + 2 * i},,{i}")
    (path / "manifest.csv").write_text("\n".join(rows) + "\n")


class TestIngestDirectory:
    def test_reads_all_logs(self, tmp_path):
        _write_log_dir(tmp_path, [(f"app{i}.log", simple_log(10)) for i in range(3)])
        ds, failures = ingest_log_directory(str(tmp_path), QUERY26)
        assert failures == [] and len(ds) == 3
        assert ds.cores() == [6, 8, 10]

    def test_bad_log_raises_by_default(self, tmp_path):
        _write_log_dir(tmp_path, [("a.log", simple_log(10)), ("b.log", simple_log(10)[:-1])])
        with pytest.raises(LogParseError, match="b.log"):
            ingest_log_directory(str(tmp_path), QUERY26)

    def test_skip_bad(self, tmp_path):
        _write_log_dir(tmp_path, [("a.log", simple_log(10)), ("b.log", simple_log(10)[:-1])])
        ds, failures = ingest_log_directory(str(tmp_path), QUERY26, skip_bad=True)
        assert len(ds) == 1
        assert [f for f, _ in failures] == ["b.log"]

    def test_empty_directory(self, tmp_path):
        with pytest.raises(DataError, match="no input logs"):
            ingest_log_directory(str(tmp_path), QUERY26)

    def test_missing_manifest(self, tmp_path):
        (tmp_path / "x.log").write_text("\n".join(simple_log(10)))
        with pytest.raises(DataError, match="manifest"):
            ingest_log_directory(str(tmp_path), QUERY26)
        assert os.path.exists(tmp_path / "x.log")
