# %% [markdown]
# # Where the Ernest model holds and where it breaks
#
# With data drawn from the Ernest law itself, NNLS on the Ernest terms is hard
# to beat. A step penalty plus a saturation point (no gain past 12 cores) lies
# outside that basis: Ernest's error explodes while a regression tree adapts.

# %%
from sparkperf import KMEANS, QUERY26, ErnestLaw, ExperimentSpec, GenerativeLaw, IrregularLaw, build_splits, generate_runs, run_experiment
from sparkperf.synthgen import law_oracle

grid = list(range(6, 46, 2))


def compare(ds, workload, splits, other):
    for sp in splits:
        e = run_experiment(ds, sp, ExperimentSpec.make(workload, sp, "ernest", "nnls")).mean_mape
        o = run_experiment(ds, sp, ExperimentSpec.make(workload, sp, "blackbox", other, seeds=[0]),
                           {"dt": {"max_depth": [5, None]}, "lr": {"alpha": [0.01, 0.1]}}[other]).mean_mape
        print(f"{sp.case_id}: ernest {e:6.1f}%   blackbox {other} {o:6.1f}%")


# %% [markdown]
# Regular regime (Ernest law, 2 % noise).

# %%
regular = generate_runs(GenerativeLaw(ErnestLaw((2, 5, 1, 0.0005)), 0.02, 5), grid, [250, 750, 1000], 3, QUERY26,
                        with_stages=False)
compare(regular, "query26", build_splits("CoreInterpolation", grid, 3, [20], [250, 750, 1000]), "lr")

# %% [markdown]
# Irregular regime.

# %%
law = IrregularLaw(ErnestLaw((1, 0, 0, 0), 0.3, 2.0), step_penalty=2.0, step_cores={6}, saturation_cores=12)
print([round(law_oracle(law, 10, c), 2) for c in (6, 8, 12, 24, 44)])
irregular = generate_runs(GenerativeLaw(law, 0.02, 15), grid, [5, 10, 15, 20], 3, KMEANS, with_stages=False)
compare(irregular, "kmeans", build_splits("CoreInterpolation", grid, 3, (), [5, 10, 15, 20]), "dt")

# %% [markdown]
# Extrapolation with a superlinear serial term: linear regression on the
# black-box features tracks the growth better than Ernest's fixed basis.

# %%
law = GenerativeLaw(ErnestLaw((2, 5, 1, 0.0005), 0.05, 1.5), 0.02, 11)
ds = generate_runs(law, grid, [250, 750, 1000], 3, QUERY26, with_stages=False)
compare(ds, "query26", build_splits("DataExtrapolation", grid, 3, [20], [250, 750], [1000]), "lr")
