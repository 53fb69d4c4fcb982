"""Synthetic run datasets drawn from known completion-time laws.

``ErnestLaw`` evaluates

    theta1 * s/c + theta2 * log(c) + theta3 * sqrt(s/c) + theta4 * s**2/c
        + serial_coef * s**serial_exponent

where the last term (zero by default) is a core-independent data term outside
the Ernest basis. ``IrregularLaw`` stops the speedup of a base law beyond
``saturation_cores`` and adds ``step_penalty`` at every core count in
``step_cores``. Measured times are the law times multiplicative lognormal noise
with unit median.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import FrozenSet, Optional, Sequence, Tuple, Union

import numpy as np

from .data import Dataset, RunRecord, StageMetrics, WorkloadProfile, validate_run
from .errors import ConfigError


@dataclass(frozen=True)
class ErnestLaw:
    theta: Tuple[float, float, float, float]
    serial_coef: float = 0.0
    serial_exponent: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "theta", tuple(float(t) for t in self.theta))
        if len(self.theta) != 4 or min(self.theta) < 0:
            raise ConfigError(f"theta must be 4 non-negative coefficients, got {self.theta}")
        if self.serial_coef < 0:
            raise ConfigError("serial_coef must be >= 0")

    def __call__(self, s: float, c: float) -> float:
        t1, t2, t3, t4 = self.theta
        r = s / c
        out = t1 * r + t2 * math.log(c) + t3 * math.sqrt(r) + t4 * s * s / c
        if self.serial_coef:
            out += self.serial_coef * s**self.serial_exponent
        return out


@dataclass(frozen=True)
class IrregularLaw:
    base: ErnestLaw
    step_penalty: float = 0.0
    step_cores: FrozenSet[int] = frozenset()
    saturation_cores: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "step_cores", frozenset(int(c) for c in self.step_cores))
        if self.step_penalty < 0:
            raise ConfigError("step_penalty must be >= 0")

    def __call__(self, s: float, c: float) -> float:
        eff = c if self.saturation_cores is None else min(c, self.saturation_cores)
        out = self.base(s, eff)
        if int(c) == c and int(c) in self.step_cores:
            out += self.step_penalty
        return out


Law = Union[ErnestLaw, IrregularLaw]


@dataclass(frozen=True)
class GenerativeLaw:
    law: Law
    noise_cv: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.noise_cv < 1:
            raise ConfigError(f"noise_cv must be in [0, 1), got {self.noise_cv}")


def law_oracle(law, s: float, c: float) -> float:
    """Noiseless completion time of ``law`` (or a GenerativeLaw) at ``(s, c)``."""
    if isinstance(law, GenerativeLaw):
        law = law.law
    return float(law(float(s), float(c)))


def _lognormal_sigma(cv: float) -> float:
    return math.sqrt(math.log1p(cv * cv))


def _stage_metrics(rng, weights, tasks_per_gb, completion_time, s, c) -> Tuple[StageMetrics, ...]:
    """Stage aggregates whose times scale with the run's completion time."""
    out = []
    for i, (w, tpu) in enumerate(zip(weights, tasks_per_gb)):
        n_tasks = max(1, int(math.ceil(tpu * s)))
        waves = math.ceil(n_tasks / c)
        avg = 1000.0 * w * completion_time / waves * rng.uniform(0.9, 1.1)
        mx = avg * (1.0 + rng.uniform(0.05, 0.5))
        sh_avg = avg * rng.uniform(0.05, 0.3)
        sh_max = sh_avg * (1.0 + rng.uniform(0.05, 0.5))
        b_avg = 1e6 * s / n_tasks * rng.uniform(0.8, 1.2)
        b_max = b_avg * (1.0 + rng.uniform(0.05, 0.5))
        out.append(StageMetrics(i, n_tasks, mx, avg, sh_max, sh_avg, b_max, b_avg))
    return tuple(out)


def generate_runs(
    law: GenerativeLaw,
    core_grid: Sequence[int],
    size_grid: Sequence[float],
    replicates: int,
    profile: WorkloadProfile,
    tf_cores: Optional[int] = None,
    with_stages: bool = True,
) -> Dataset:
    """Sample ``replicates`` runs for every (size, cores) configuration.

    Runs are ordered by size, then cores, then replicate, and numbered with
    consecutive ``replicate_id`` values (unique within the dataset).
    """
    cores = [int(c) for c in core_grid]
    sizes = [float(s) for s in size_grid]
    if not cores or not sizes:
        raise ConfigError("core and size grids must be non-empty")
    if len(set(cores)) != len(cores) or len(set(sizes)) != len(sizes):
        raise ConfigError("grids must not contain duplicates")
    if min(cores) < 1 or min(sizes) <= 0:
        raise ConfigError("cores must be >= 1 and sizes > 0")
    if replicates < 1:
        raise ConfigError(f"replicates must be >= 1, got {replicates}")
    if profile.has_tf_cores and tf_cores is None:
        raise ConfigError(f"profile {profile.workload_id} needs tf_cores")
    if not profile.has_tf_cores:
        tf_cores = None

    rng = np.random.default_rng(law.seed)
    sigma = _lognormal_sigma(law.noise_cv)
    # DAG shape is fixed per dataset
    weights = rng.dirichlet(np.ones(profile.stage_count)) if profile.stage_count else np.empty(0)
    tasks_per_unit = rng.uniform(0.05, 2.0, size=profile.stage_count)

    runs = []
    rid = 0
    for s in sizes:
        for c in cores:
            mean_t = law_oracle(law.law, s, c)
            if not mean_t > 0:
                raise ConfigError(f"law gives non-positive time {mean_t} at s={s}, c={c}")
            for _ in range(replicates):
                t = mean_t * float(np.exp(rng.normal(0.0, sigma))) if sigma else mean_t
                stages = None
                if with_stages and profile.stage_count:
                    stages = _stage_metrics(rng, weights, tasks_per_unit, t, s, c)
                rec = RunRecord(profile.workload_id, s, c, t, tf_cores, stages, rid)
                runs.append(validate_run(rec, profile))
                rid += 1
    return Dataset(profile, tuple(runs))


def law_to_dict(g: GenerativeLaw) -> dict:
    law = g.law
    if isinstance(law, IrregularLaw):
        body = {
            "kind": "irregular",
            "base": _ernest_dict(law.base),
            "step_penalty": law.step_penalty,
            "step_cores": sorted(law.step_cores),
            "saturation_cores": law.saturation_cores,
        }
    else:
        body = dict(kind="ernest", **_ernest_dict(law))
    return {"law": body, "noise_cv": g.noise_cv, "seed": g.seed}


def _ernest_dict(law: ErnestLaw) -> dict:
    return {"theta": list(law.theta), "serial_coef": law.serial_coef, "serial_exponent": law.serial_exponent}


def law_from_dict(d: dict) -> GenerativeLaw:
    """Parse a law spec; ``seed`` is mandatory."""
    if "seed" not in d:
        raise ConfigError("law spec needs an explicit seed")
    try:
        body = dict(d["law"])
        kind = body.pop("kind")
        if kind == "ernest":
            law = ErnestLaw(**body)
        elif kind == "irregular":
            law = IrregularLaw(
                ErnestLaw(**body["base"]),
                float(body.get("step_penalty", 0.0)),
                frozenset(body.get("step_cores", ())),
                body.get("saturation_cores"),
            )
        else:
            raise ConfigError(f"unknown law kind {kind!r}")
        return GenerativeLaw(law, float(d.get("noise_cv", 0.0)), int(d["seed"]))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad law spec: {exc!r}") from None
