"""Structured train/test partitions: core interpolation and data extrapolation.

Interpolation case ``C{k}`` keeps every ``(k+1)``-th configuration of the core
grid for training, starting from the smallest core count, after excluded core
counts have been dropped from the grid. Everything else is test data. The
smallest core count is therefore always trained on, and larger ``k`` means a
sparser training set.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Sequence, Tuple

from .data import Dataset, dataset_filter
from .errors import ConfigError, SplitError


class ScenarioFamily(enum.Enum):
    CORE_INTERPOLATION = "CoreInterpolation"
    DATA_EXTRAPOLATION = "DataExtrapolation"


@dataclass(frozen=True)
class ScenarioSplit:
    family: ScenarioFamily
    case_id: str
    train_cores: FrozenSet[int]
    train_sizes: FrozenSet[float]
    test_cores: FrozenSet[int]
    test_sizes: FrozenSet[float]
    excluded_cores: FrozenSet[int] = frozenset()

    def __post_init__(self):
        for name in ("train_cores", "train_sizes", "test_cores", "test_sizes", "excluded_cores"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))
        if not (self.train_cores and self.train_sizes and self.test_cores and self.test_sizes):
            raise SplitError(f"{self.case_id}: train and test selectors must be non-empty")
        leaked = (self.train_cores | self.test_cores) & self.excluded_cores
        if leaked:
            raise SplitError(f"{self.case_id}: excluded cores {sorted(leaked)} appear in a selector")
        if self.family is ScenarioFamily.CORE_INTERPOLATION:
            if self.train_cores & self.test_cores:
                raise SplitError(f"{self.case_id}: train and test core sets overlap")
            if self.train_sizes != self.test_sizes:
                raise SplitError(f"{self.case_id}: interpolation needs identical data sizes")
            if min(self.train_cores | self.test_cores) not in self.train_cores:
                raise SplitError(f"{self.case_id}: smallest core count must be in the training set")
        elif self.train_sizes & self.test_sizes:
            raise SplitError(f"{self.case_id}: train and test share data sizes")


def case_number(case_id: str) -> int:
    m = re.fullmatch(r"[A-Za-z]*(\d+)", case_id)
    return int(m.group(1)) if m else 0


def interpolation_cases(core_grid: Sequence[int], n_cases: int, excluded: Iterable[int] = (),
                        sizes: Iterable[float] = (1.0,)) -> List[ScenarioSplit]:
    """Cases ``C1..C{n_cases}`` on ``core_grid`` (stride ``k+1`` for ``C{k}``).

    ``sizes`` is the data-size set shared by train and test.
    """
    grid = [int(c) for c in core_grid]
    if len(grid) < 4 or any(a >= b for a, b in zip(grid, grid[1:])):
        raise ConfigError(f"core grid must be strictly increasing with >= 4 values, got {grid}")
    excluded = frozenset(int(c) for c in excluded)
    kept = [c for c in grid if c not in excluded]
    sizes = frozenset(float(s) for s in sizes)
    if n_cases < 1:
        raise ConfigError(f"n_cases must be >= 1, got {n_cases}")
    out = []
    for k in range(1, n_cases + 1):
        train = kept[:: k + 1]
        test = [c for c in kept if c not in train]
        if len(train) < 2 or not test:
            raise ConfigError(
                f"n_cases={n_cases} too large: C{k} would leave {len(train)} training and "
                f"{len(test)} test core counts on a grid of {len(kept)}"
            )
        out.append(
            ScenarioSplit(ScenarioFamily.CORE_INTERPOLATION, f"C{k}", frozenset(train), sizes,
                          frozenset(test), sizes, excluded)
        )
    return out


def extrapolation_split(sizes_train: Iterable[float], size_test: float, case: ScenarioSplit) -> ScenarioSplit:
    """Train on the case's training cores at ``sizes_train``; test on every core at ``size_test``."""
    sizes_train = frozenset(float(s) for s in sizes_train)
    size_test = float(size_test)
    if size_test in sizes_train:
        raise SplitError(f"test size {size_test} is also a training size")
    return ScenarioSplit(
        ScenarioFamily.DATA_EXTRAPOLATION,
        case.case_id,
        case.train_cores,
        sizes_train,
        case.train_cores | case.test_cores,
        frozenset({size_test}),
        case.excluded_cores,
    )


def apply_split(ds: Dataset, split: ScenarioSplit) -> Tuple[Dataset, Dataset]:
    """Partition ``ds`` into (train, test); runs outside both selectors are dropped."""
    cores, sizes = set(ds.cores()), set(ds.sizes())
    missing = []
    for label, want, have in (
        ("train cores", split.train_cores, cores),
        ("test cores", split.test_cores, cores),
        ("train sizes", split.train_sizes, sizes),
        ("test sizes", split.test_sizes, sizes),
    ):
        absent = sorted(want - have)
        if absent:
            missing.append(f"{label} {absent}")
    if missing:
        raise SplitError(f"selector mismatch for {split.case_id}: " + "; ".join(missing))
    train = dataset_filter(ds, split.train_cores, split.train_sizes)
    test = dataset_filter(ds, split.test_cores, split.test_sizes)
    if len(train) == 0 or len(test) == 0:
        raise SplitError(f"{split.case_id}: split leaves an empty {'train' if len(train) == 0 else 'test'} set")
    return train, test


# -- configuration files -------------------------------------------------------


def _num(x):
    x = float(x)
    return int(x) if x.is_integer() else x


def scenario_config(workload_id: str, splits: Sequence[ScenarioSplit]) -> dict:
    """The JSON document describing a family of splits sharing size selectors."""
    if not splits:
        raise ConfigError("no splits given")
    first = splits[0]
    for s in splits:
        if (s.family, s.train_sizes, s.test_sizes, s.excluded_cores) != (
            first.family, first.train_sizes, first.test_sizes, first.excluded_cores
        ):
            raise ConfigError("splits in one config must share family, sizes and exclusions")
    ordered = sorted(splits, key=lambda s: case_number(s.case_id))
    return {
        "workload_id": workload_id,
        "family": first.family.value,
        "cases": [
            {"id": s.case_id, "train_cores": sorted(s.train_cores), "test_cores": sorted(s.test_cores)}
            for s in ordered
        ],
        "excluded_cores": sorted(first.excluded_cores),
        "train_sizes": [_num(v) for v in sorted(first.train_sizes)],
        "test_sizes": [_num(v) for v in sorted(first.test_sizes)],
    }


def dumps_scenario_config(workload_id: str, splits: Sequence[ScenarioSplit]) -> str:
    return json.dumps(scenario_config(workload_id, splits), indent=2) + "\n"


def splits_from_config(doc: dict) -> List[ScenarioSplit]:
    try:
        family = ScenarioFamily(doc["family"])
        excluded = frozenset(int(c) for c in doc.get("excluded_cores", ()))
        train_sizes = frozenset(float(s) for s in doc["train_sizes"])
        test_sizes = frozenset(float(s) for s in doc["test_sizes"])
        return [
            ScenarioSplit(family, c["id"], frozenset(c["train_cores"]), train_sizes,
                          frozenset(c["test_cores"]), test_sizes, excluded)
            for c in doc["cases"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad scenario config: {exc!r}") from None


def build_splits(family, core_grid, n_cases, excluded=(), train_sizes=(), test_sizes=()) -> List[ScenarioSplit]:
    """Generate a whole scenario family from grid parameters."""
    family = ScenarioFamily(family)
    if family is ScenarioFamily.CORE_INTERPOLATION:
        return interpolation_cases(core_grid, n_cases, excluded, train_sizes)
    if len(test_sizes) != 1:
        raise ConfigError(f"data extrapolation needs exactly one test size, got {list(test_sizes)}")
    cases = interpolation_cases(core_grid, n_cases, excluded, train_sizes)
    return [extrapolation_split(train_sizes, test_sizes[0], c) for c in cases]


__all__ = [
    "ScenarioFamily",
    "ScenarioSplit",
    "apply_split",
    "build_splits",
    "case_number",
    "dumps_scenario_config",
    "extrapolation_split",
    "interpolation_cases",
    "scenario_config",
    "splits_from_config",
]
