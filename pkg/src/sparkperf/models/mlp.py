"""Feed-forward regression network trained with Adam or plain gradient descent.

The loss is ``mean((f(X) - y)**2) + l2_penalty * sum(W**2)`` over all weight
matrices (biases are not penalized). The target is standardized internally
and mapped back on prediction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..errors import DataError, DivergenceError
from .params import MlpParams

ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def _act(kind, z):
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "tanh":
        return np.tanh(z)
    return 0.5 * (1.0 + np.tanh(0.5 * z))  # overflow-free logistic


def _act_grad(kind, z, a):
    if kind == "relu":
        return (z > 0).astype(float)
    if kind == "tanh":
        return 1.0 - a * a
    return a * (1.0 - a)


Params = List[Tuple[np.ndarray, np.ndarray]]


def init_params(sizes, rng) -> Params:
    """Glorot-uniform weights, zero biases."""
    out = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        out.append((rng.uniform(-limit, limit, size=(fan_in, fan_out)), np.zeros(fan_out)))
    return out


def forward(params: Params, X, activation: str) -> np.ndarray:
    a = X
    for W, b in params[:-1]:
        a = _act(activation, a @ W + b)
    W, b = params[-1]
    return (a @ W + b)[:, 0]


def loss_and_grad(params: Params, X, y, activation: str, l2: float):
    """Penalized MSE and its gradient with respect to every (W, b) pair."""
    zs, acts = [], [X]
    a = X
    for W, b in params[:-1]:
        z = a @ W + b
        a = _act(activation, z)
        zs.append(z)
        acts.append(a)
    W, b = params[-1]
    out = (a @ W + b)[:, 0]
    err = out - y
    n = len(y)
    loss = float(err @ err) / n + l2 * sum(float((W * W).sum()) for W, _ in params)

    grads = [None] * len(params)
    delta = (2.0 / n) * err[:, None]
    for i in range(len(params) - 1, -1, -1):
        W, _ = params[i]
        grads[i] = (acts[i].T @ delta + 2.0 * l2 * W, delta.sum(axis=0))
        if i:
            delta = (delta @ W.T) * _act_grad(activation, zs[i - 1], acts[i])
    return loss, grads


@dataclass(frozen=True)
class MlpModel:
    sizes: Tuple[int, ...]
    params: tuple
    activation: str
    y_mean: float
    y_scale: float

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.sizes[0]:
            raise DataError(f"expected {self.sizes[0]} columns, got shape {X.shape}")
        return forward(list(self.params), X, self.activation) * self.y_scale + self.y_mean

    def to_dict(self) -> dict:
        return {
            "sizes": list(self.sizes),
            "activation": self.activation,
            "y_mean": self.y_mean,
            "y_scale": self.y_scale,
            "weights": [W.tolist() for W, _ in self.params],
            "biases": [b.tolist() for _, b in self.params],
        }

    @classmethod
    def from_dict(cls, d) -> "MlpModel":
        sizes = tuple(d["sizes"])
        params = tuple(
            (np.array(W, dtype=float).reshape(i, o), np.array(b, dtype=float))
            for W, b, i, o in zip(d["weights"], d["biases"], sizes[:-1], sizes[1:])
        )
        return cls(sizes, params, d["activation"], float(d["y_mean"]), float(d["y_scale"]))


def fit_mlp(X, y, hp: MlpParams = MlpParams(), seed: int = 0) -> MlpModel:
    """Train for exactly ``hp.epochs`` epochs (no early stopping).

    With ``hp.minibatches == 1`` every epoch is one full-batch step;
    otherwise rows are reshuffled each epoch and split into that many batches.
    Raises :class:`DivergenceError` if the loss becomes non-finite.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.ndim != 2 or X.shape[0] != len(y) or len(y) == 0:
        raise DataError(f"X has shape {X.shape}, y has length {len(y)}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DataError("non-finite values in X or y")

    rng = np.random.default_rng(seed)
    y_mean = float(y.mean())
    y_scale = float(y.std()) or 1.0
    t = (y - y_mean) / y_scale

    sizes = (X.shape[1],) + tuple(hp.hidden) + (1,)
    params = init_params(sizes, rng)
    m = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
    v = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
    b1, b2, lr = hp.beta1, ADAM_BETA2, hp.learning_rate
    n_batches = min(hp.minibatches, len(y))
    step = 0

    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(hp.epochs):
            if n_batches == 1:
                batches = [slice(None)]
            else:
                batches = np.array_split(rng.permutation(len(y)), n_batches)
            for rows in batches:
                loss, grads = loss_and_grad(params, X[rows], t[rows], hp.activation, hp.l2_penalty)
                if not np.isfinite(loss):
                    raise DivergenceError(epoch)
                step += 1
                if hp.optimizer == "adam":
                    c1, c2 = 1.0 - b1**step, 1.0 - b2**step
                    new = []
                    for i, ((W, b), (gW, gb)) in enumerate(zip(params, grads)):
                        mW, mb = m[i]
                        vW, vb = v[i]
                        mW = b1 * mW + (1 - b1) * gW
                        mb = b1 * mb + (1 - b1) * gb
                        vW = b2 * vW + (1 - b2) * gW * gW
                        vb = b2 * vb + (1 - b2) * gb * gb
                        m[i], v[i] = (mW, mb), (vW, vb)
                        W = W - lr * (mW / c1) / (np.sqrt(vW / c2) + ADAM_EPS)
                        b = b - lr * (mb / c1) / (np.sqrt(vb / c2) + ADAM_EPS)
                        new.append((W, b))
                    params = new
                else:
                    params = [(W - lr * gW, b - lr * gb) for (W, b), (gW, gb) in zip(params, grads)]
        if hp.epochs and not all(np.all(np.isfinite(W)) and np.all(np.isfinite(b)) for W, b in params):
            raise DivergenceError(hp.epochs)

    return MlpModel(sizes, tuple(params), hp.activation, y_mean, y_scale)
