import numpy as np
import pytest

from sparkperf.errors import DataError, DivergenceError
from sparkperf.models import ModelFamily, dumps_model, fit_model, loads_model
from sparkperf.models.mlp import MlpModel, fit_mlp, forward, init_params, loss_and_grad
from sparkperf.models.params import MlpParams


def fd_gradient(params, X, y, activation, l2, h=1e-5):
    """Central finite differences over every weight and bias."""
    out = []
    for i, (W, b) in enumerate(params):
        grads = []
        for arr in (W, b):
            g = np.zeros_like(arr)
            for k in np.ndindex(arr.shape):
                old = arr[k]
                arr[k] = old + h
                up = loss_and_grad(params, X, y, activation, l2)[0]
                arr[k] = old - h
                down = loss_and_grad(params, X, y, activation, l2)[0]
                arr[k] = old
                g[k] = (up - down) / (2 * h)
            grads.append(g)
        out.append(tuple(grads))
    return out


def gradient_check(activation, seed, hidden=(4, 3), n=7, f=3, l2=0.01):
    """Max relative error between analytic and finite-difference gradients."""
    rng = np.random.default_rng(seed)
    params = [(W.copy(), rng.normal(size=b.shape) * 0.1) for W, b in init_params((f,) + hidden + (1,), rng)]
    X = rng.normal(size=(n, f))
    y = rng.normal(size=n)
    _, analytic = loss_and_grad(params, X, y, activation, l2)
    numeric = fd_gradient(params, X, y, activation, l2)
    a = np.concatenate([g.ravel() for pair in analytic for g in pair])
    d = np.concatenate([g.ravel() for pair in numeric for g in pair])
    return float(np.max(np.abs(a - d) / np.maximum(1e-7, np.abs(a) + np.abs(d))))


def mlp_gradient_sweep(n_nets=10, seed=0):
    worst = {}
    for act in ("sigmoid", "relu", "tanh"):
        worst[act] = max(gradient_check(act, seed * 1000 + k, hidden=((3,), (4, 3), (5, 4, 3))[k % 3])
                         for k in range(n_nets))
    return worst


class TestGradient:
    @pytest.mark.parametrize("activation", ["sigmoid", "relu", "tanh"])
    def test_finite_differences(self, activation):
        for seed in range(3):
            assert gradient_check(activation, seed) < 1e-4

    def test_loss_includes_weight_penalty_only(self):
        params = [(np.ones((1, 1)), np.full(1, 5.0)), (np.ones((1, 1)), np.full(1, 3.0))]
        X, y = np.zeros((2, 1)), np.array([0.0, 0.0])
        out = forward(params, X, "relu")
        np.testing.assert_array_equal(out, [8.0, 8.0])
        loss, _ = loss_and_grad(params, X, y, "relu", 0.5)
        assert loss == pytest.approx(64.0 + 0.5 * 2.0)


class TestTraining:
    def test_learns_linear_target(self):
        x = np.linspace(-1, 1, 40)[:, None]
        y = 2 * x[:, 0]
        hp = MlpParams(hidden=(3,), activation="relu", l2_penalty=0.0, epochs=10_000)
        m = fit_mlp(x, y, hp, seed=1)
        t = (y - y.mean()) / y.std()
        pred = (m.predict(x) - y.mean()) / y.std()
        assert np.mean((pred - t) ** 2) < 1e-3

    def test_zero_epochs_is_untrained_forward(self):
        rng = np.random.default_rng(0)
        X, y = rng.normal(size=(10, 2)), rng.normal(size=10)
        hp = MlpParams(hidden=(3,), epochs=0)
        a, b = fit_mlp(X, y, hp, seed=4), fit_mlp(X, y, hp, seed=4)
        np.testing.assert_array_equal(a.predict(X), b.predict(X))
        init = init_params((2, 3, 1), np.random.default_rng(4))
        want = forward(init, X, hp.activation) * y.std() + y.mean()
        np.testing.assert_allclose(a.predict(X), want, rtol=1e-14)

    def test_deterministic_under_seed(self):
        rng = np.random.default_rng(1)
        X, y = rng.normal(size=(15, 3)), rng.normal(size=15)
        hp = MlpParams(hidden=(4,), activation="tanh", epochs=200, optimizer="sgd")
        np.testing.assert_array_equal(fit_mlp(X, y, hp, 3).predict(X), fit_mlp(X, y, hp, 3).predict(X))

    def test_minibatches(self):
        rng = np.random.default_rng(2)
        X, y = rng.normal(size=(12, 2)), rng.normal(size=12)
        m = fit_mlp(X, y, MlpParams(hidden=(3,), minibatches=3, epochs=50), seed=0)
        assert np.all(np.isfinite(m.predict(X)))

    def test_divergence_names_epoch(self):
        rng = np.random.default_rng(3)
        X, y = rng.normal(size=(20, 2)) * 1e3, rng.normal(size=20)
        hp = MlpParams(hidden=(5, 5), activation="relu", optimizer="sgd", learning_rate=1e3, epochs=500)
        with pytest.raises(DivergenceError) as ei:
            fit_mlp(X, y, hp, seed=0)
        assert "epoch" in str(ei.value)

    def test_rejects_bad_input(self):
        with pytest.raises(DataError):
            fit_mlp(np.ones((3, 2)), [1.0, 2.0])

    def test_serialization_is_bit_exact(self):
        rng = np.random.default_rng(4)
        X, y = rng.uniform(0, 100, size=(20, 3)), rng.uniform(10, 20, size=20)
        model = fit_model(X, y, ModelFamily.NN, MlpParams(hidden=(3, 3), epochs=100), seed=2)
        back = loads_model(dumps_model(model))
        np.testing.assert_array_equal(back.predict(X), model.predict(X))
        assert isinstance(back.estimator, MlpModel)
