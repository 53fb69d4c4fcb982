# %% [markdown]
# # Feature sets
#
# Three views of the same run:
#
# * Ernest terms `s/c`, `log c`, `sqrt(s/c)`, `s^2/c`, fitted with NNLS.
# * Black-box features known before the run: `s/c`, `log c`, data size, cores.
# * Gray-box features adding seven per-stage metrics, known only after a run.
#
# At prediction time the stage metrics of an unseen configuration are unknown,
# so they are replaced by their training means.

# %%
import numpy as np

from sparkperf import KMEANS, ErnestLaw, FeatureSetKind, GenerativeLaw, build_matrix, generate_runs, impute_dag_features
from sparkperf.features import standardize

law = GenerativeLaw(ErnestLaw((1.0, 2.0, 0.5, 0.01)), noise_cv=0.05, seed=3)
ds = generate_runs(law, range(6, 46, 2), [5, 10, 15, 20], 1, KMEANS)

for kind in FeatureSetKind:
    fm = build_matrix(ds, kind)
    print(f"{kind.value:9s} {fm.rows.shape} dag columns: {int(fm.dag_mask.sum())}")

# %% [markdown]
# Imputation: every stage column of the test matrix becomes the training mean.

# %%
fm = build_matrix(ds, FeatureSetKind.GRAYBOX)
train, test = fm.take(np.arange(0, 60)), fm.take(np.arange(60, 80))
imputed = impute_dag_features(train, test)
dag = fm.dag_mask
print(np.ptp(imputed.rows[:, dag], axis=0).max())
print(np.allclose(imputed.rows[0, dag], train.rows[:, dag].mean(0)))

# %% [markdown]
# LASSO and the MLP see standardized inputs; the scaler is fitted on the
# training rows only.

# %%
tr_s, te_s, scaler = standardize(train, imputed)
print(tr_s.rows.mean(0)[:4].round(12), tr_s.rows.std(0)[:4].round(12))
