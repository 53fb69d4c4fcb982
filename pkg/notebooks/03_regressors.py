# %% [markdown]
# # The five regressors
#
# All are written on top of numpy: NNLS (active set), LASSO (coordinate
# descent), CART, random forest and a fully connected network trained with
# Adam or SGD. They share `fit_model` / `predict`.

# %%
import numpy as np

from sparkperf import ModelFamily, fit_model, predict
from sparkperf.models.params import ForestParams, LassoParams, MlpParams, NnlsParams, TreeParams

rng = np.random.default_rng(0)
X = rng.uniform(1, 10, size=(80, 3))
y = 3 * X[:, 0] + 2 * np.log(X[:, 1]) + 0.5 * X[:, 2] ** 1.5 + rng.normal(scale=0.2, size=80)
Xtr, ytr, Xte, yte = X[:60], y[:60], X[60:], y[60:]

candidates = {
    ModelFamily.NNLS: NnlsParams(),
    ModelFamily.LR: LassoParams(alpha=0.01),
    ModelFamily.DT: TreeParams(max_depth=6),
    ModelFamily.RF: ForestParams(n_trees=20, max_depth=8),
    ModelFamily.NN: MlpParams(hidden=(8,), epochs=3000),
}
for family, hp in candidates.items():
    model = fit_model(Xtr, ytr, family, hp, seed=0)
    rmse = float(np.sqrt(np.mean((predict(model, Xte) - yte) ** 2)))
    print(f"{family.value:5s} test RMSE {rmse:.3f}")

# %% [markdown]
# NNLS keeps every coefficient non-negative; LASSO at `alpha = 0` is plain least
# squares.

# %%
from sparkperf.models.linear import fit_lasso, fit_nnls

print(fit_nnls(Xtr, ytr).coefficients)
ols = np.linalg.lstsq(np.column_stack([Xtr, np.ones(60)]), ytr, rcond=None)[0]
m = fit_lasso(Xtr, ytr, LassoParams(0.0))
print(np.max(np.abs(np.append(m.coefficients, m.intercept) - ols)))
