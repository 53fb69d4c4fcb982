import json
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sparkperf.data import QUERY26, Dataset, RunRecord
from sparkperf.errors import ConfigError, SplitError
from sparkperf.scenarios import (
    ScenarioFamily,
    ScenarioSplit,
    apply_split,
    build_splits,
    case_number,
    dumps_scenario_config,
    extrapolation_split,
    interpolation_cases,
    splits_from_config,
)

GOLDEN = Path(__file__).parent / "golden"
Q26_GRID = list(range(6, 46, 2))


def q26_grid_dataset(sizes=(250.0, 750.0, 1000.0), reps=6, cores=Q26_GRID):
    runs, rid = [], 0
    for s in sizes:
        for c in cores:
            for _ in range(reps):
                runs.append(RunRecord("query26", float(s), c, 100.0, replicate_id=rid))
                rid += 1
    return Dataset(QUERY26, tuple(runs))


class TestInterpolationCases:
    def test_q26_c1_pattern(self):
        c1 = interpolation_cases(Q26_GRID, 6, {20}, [750])[0]
        assert sorted(c1.train_cores) == [6, 10, 14, 18, 24, 28, 32, 36, 40, 44]
        assert sorted(c1.test_cores) == [8, 12, 16, 22, 26, 30, 34, 38, 42]
        assert 20 not in c1.train_cores | c1.test_cores

    def test_tiny_grid(self):
        c1 = interpolation_cases([2, 4, 6, 8], 1)[0]
        assert c1.train_cores == {2, 6} and c1.test_cores == {4, 8}

    def test_kmeans_stride_rule(self):
        cases = interpolation_cases(Q26_GRID, 7)
        assert sorted(cases[6].train_cores) == [6, 22, 38]
        assert sorted(cases[5].train_cores) == [6, 20, 34]

    def test_too_many_cases(self):
        with pytest.raises(ConfigError, match="too large"):
            interpolation_cases([2, 4, 6, 8], 3)

    def test_bad_grid(self):
        with pytest.raises(ConfigError):
            interpolation_cases([2, 4, 4, 8], 1)
        with pytest.raises(ConfigError):
            interpolation_cases([2, 4, 6], 1)

    @given(
        st.lists(st.integers(1, 200), min_size=6, max_size=40, unique=True).map(sorted),
        st.integers(1, 4),
    )
    def test_invariants(self, grid, n):
        try:
            cases = interpolation_cases(grid, n)
        except ConfigError:
            return
        prev = None
        for c in cases:
            assert not (c.train_cores & c.test_cores)
            assert min(grid) in c.train_cores
            assert c.train_cores | c.test_cores == set(grid)
            if prev is not None:
                assert len(c.train_cores) <= len(prev.train_cores)
            prev = c


class TestExtrapolation:
    def test_kmeans_sizes(self):
        c1 = interpolation_cases(Q26_GRID, 7)[0]
        e = extrapolation_split({5, 10, 15}, 20, c1)
        assert e.family is ScenarioFamily.DATA_EXTRAPOLATION
        assert e.train_cores == c1.train_cores and e.train_sizes == {5.0, 10.0, 15.0}
        assert e.test_cores == set(Q26_GRID) and e.test_sizes == {20.0}

    def test_q26(self):
        for e in build_splits("DataExtrapolation", Q26_GRID, 6, {20}, [250, 750], [1000]):
            assert not (e.train_sizes & e.test_sizes)
            assert 20 not in e.test_cores

    def test_single_training_size(self):
        c1 = interpolation_cases(Q26_GRID, 1)[0]
        assert extrapolation_split({750}, 1000, c1).train_sizes == {750.0}

    def test_overlap_rejected(self):
        c1 = interpolation_cases(Q26_GRID, 1)[0]
        with pytest.raises(SplitError):
            extrapolation_split({750, 1000}, 1000, c1)


class TestApplySplit:
    def test_partition_counts(self):
        ds = q26_grid_dataset(sizes=(750.0,))
        assert len(ds) == 120
        c1 = interpolation_cases(Q26_GRID, 6, {20}, [750])[0]
        train, test = apply_split(ds, c1)
        assert len(train) == 10 * 6 and len(test) == 9 * 6
        assert len(train) + len(test) == 114
        assert all(r.spark_cores != 20 for r in train.runs + test.runs)

    def test_every_case_is_partition(self):
        ds = q26_grid_dataset()
        for split in build_splits("CoreInterpolation", Q26_GRID, 6, {20}, [250, 750, 1000]):
            train, test = apply_split(ds, split)
            ids = [r.replicate_id for r in train.runs + test.runs]
            assert len(ids) == len(set(ids)) == len(ds) - 3 * 6

    def test_deterministic(self):
        ds = q26_grid_dataset(reps=2)
        c3 = interpolation_cases(Q26_GRID, 3, {20}, [250, 750, 1000])[2]
        assert apply_split(ds, c3) == apply_split(ds, c3)

    def test_selector_mismatch(self):
        ds = q26_grid_dataset(sizes=(750.0,), reps=1)
        split = interpolation_cases(Q26_GRID, 1, {20}, [500])[0]
        with pytest.raises(SplitError, match="selector mismatch.*500"):
            apply_split(ds, split)

    def test_empty_side(self):
        ds = q26_grid_dataset(sizes=(750.0,), reps=1, cores=[6, 8])
        split = ScenarioSplit(ScenarioFamily.DATA_EXTRAPOLATION, "C1", {6}, {750.0}, {8}, {1000.0})
        with pytest.raises(SplitError):
            apply_split(ds, split)


class TestScenarioSplitInvariants:
    def test_overlapping_cores(self):
        with pytest.raises(SplitError):
            ScenarioSplit(ScenarioFamily.CORE_INTERPOLATION, "C1", {2, 4}, {1.0}, {4}, {1.0})

    def test_min_core_in_train(self):
        with pytest.raises(SplitError, match="smallest"):
            ScenarioSplit(ScenarioFamily.CORE_INTERPOLATION, "C1", {4}, {1.0}, {2}, {1.0})

    def test_excluded_in_selector(self):
        with pytest.raises(SplitError):
            ScenarioSplit(ScenarioFamily.CORE_INTERPOLATION, "C1", {2}, {1.0}, {4}, {1.0}, {4})

    def test_case_number(self):
        assert case_number("C12") == 12 and case_number("x") == 0


class TestGoldenFiles:
    def test_query26_interpolation(self):
        cases = interpolation_cases(Q26_GRID, 6, {20}, [250, 750, 1000])
        got = dumps_scenario_config("query26", cases)
        assert got == (GOLDEN / "query26_interpolation.json").read_text()

    def test_kmeans_interpolation(self):
        got = dumps_scenario_config("kmeans", interpolation_cases(Q26_GRID, 7, (), [5, 10, 15, 20]))
        assert got == (GOLDEN / "kmeans_interpolation.json").read_text()

    def test_kmeans_extrapolation(self):
        splits = build_splits("DataExtrapolation", Q26_GRID, 7, (), [5, 10, 15], [20])
        assert dumps_scenario_config("kmeans", splits) == (GOLDEN / "kmeans_extrapolation.json").read_text()

    def test_golden_round_trips(self):
        doc = json.loads((GOLDEN / "query26_interpolation.json").read_text())
        assert splits_from_config(doc) == interpolation_cases(Q26_GRID, 6, {20}, [250, 750, 1000])
