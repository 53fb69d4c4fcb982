# %% [markdown]
# # Grid search and MAPE evaluation
#
# Hyper-parameters are picked by mean validation MSE: 5-fold cross-validation
# for black-box and Ernest models, a 25 % hold-out for gray-box models.
# Each experiment cell reports MAPE averaged over seeds.

# %%
from sparkperf import (
    QUERY26,
    ErnestLaw,
    ExperimentSpec,
    FeatureSetKind,
    GenerativeLaw,
    KFold,
    ModelFamily,
    build_matrix,
    build_splits,
    compare_models,
    generate_runs,
    grid_search,
    run_experiment,
)

grid = list(range(6, 46, 2))
ds = generate_runs(GenerativeLaw(ErnestLaw((2, 5, 1, 0.0005)), 0.02, 5), grid, [250, 750, 1000], 3, QUERY26)

res = grid_search(build_matrix(ds, FeatureSetKind.BLACKBOX), ModelFamily.LR, {"alpha": [0.001, 0.1, 10.0]}, KFold(5, 0))
print(res.to_csv())

# %%
splits = build_splits("CoreInterpolation", grid, 3, excluded=[20], train_sizes=[250, 750, 1000])
small_grids = {"lr": {"alpha": [0.01, 1.0]}, "dt": {"max_depth": [4, 8]}}
reports = []
for sp in splits:
    for kind, fam in [("ernest", "nnls"), ("blackbox", "lr"), ("blackbox", "dt"), ("graybox", "dt")]:
        spec = ExperimentSpec.make("query26", sp, kind, fam, seeds=[0, 1] if fam != "nnls" else None)
        reports.append(run_experiment(ds, sp, spec, small_grids.get(fam)))
print(compare_models(reports).to_text())
