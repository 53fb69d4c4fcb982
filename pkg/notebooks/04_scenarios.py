# %% [markdown]
# # Train/test scenarios
#
# Core interpolation keeps the data size fixed and predicts core counts lying
# between those used for training; case `Ck` trains on every `(k+1)`-th count.
# Data extrapolation trains on small inputs and predicts a larger one.

# %%
from sparkperf import QUERY26, ErnestLaw, GenerativeLaw, apply_split, build_splits, generate_runs
from sparkperf.scenarios import dumps_scenario_config

grid = list(range(6, 46, 2))
cases = build_splits("CoreInterpolation", grid, 6, excluded=[20], train_sizes=[250, 750, 1000])
for c in cases:
    print(c.case_id, sorted(c.train_cores))

# %% [markdown]
# Applying a split partitions a dataset; runs at excluded core counts fall out.

# %%
ds = generate_runs(GenerativeLaw(ErnestLaw((2, 5, 1, 0.0005)), 0.02, 1), grid, [750], 6, QUERY26, with_stages=False)
train, test = apply_split(ds, build_splits("CoreInterpolation", grid, 1, excluded=[20], train_sizes=[750])[0])
print(len(ds), len(train), len(test))

# %%
extrap = build_splits("DataExtrapolation", grid, 2, excluded=[20], train_sizes=[250, 750], test_sizes=[1000])
print(dumps_scenario_config("query26", extrap)[:300])
