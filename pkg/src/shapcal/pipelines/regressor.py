"""A small two-layer ReLU network that maps features to valuations.

Plain numpy, full-batch gradient descent on mean squared error. Inputs and
targets are standardized with training statistics kept on the model, so
predictions come back in the original value units.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class RegressorError(RuntimeError):
    pass


@dataclass(frozen=True)
class RegressorConfig:
    hidden: int = 64
    lr: float = 1e-2
    epochs: int = 500
    seed: int = 0


@dataclass(eq=False)
class ValueRegressor:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: float
    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: float = 0.0
    y_std: float = 1.0
    config: RegressorConfig = field(default_factory=RegressorConfig)
    losses: list = field(default_factory=list)

    @property
    def final_loss(self):
        return self.losses[-1] if self.losses else None

    def params(self):
        return {"W1": self.W1, "b1": self.b1, "W2": self.W2, "b2": np.atleast_1d(self.b2)}


def init_params(dim, hidden, rng):
    a1 = 1.0 / np.sqrt(dim)
    a2 = 1.0 / np.sqrt(hidden)
    return {
        "W1": rng.uniform(-a1, a1, size=(dim, hidden)),
        "b1": rng.uniform(-a1, a1, size=hidden),
        "W2": rng.uniform(-a2, a2, size=hidden),
        "b2": rng.uniform(-a2, a2, size=1),
    }


def forward(p, X):
    z = X @ p["W1"] + p["b1"]
    h = np.maximum(z, 0.0)
    return h @ p["W2"] + p["b2"][0], (z, h)


def loss_and_grad(p, X, y):
    """Mean squared error and its gradient with respect to every parameter."""
    out, (z, h) = forward(p, X)
    err = out - y
    n = len(y)
    loss = float(np.mean(err ** 2))
    d_out = 2.0 * err / n
    d_h = np.outer(d_out, p["W2"]) * (z > 0)
    grads = {
        "W2": h.T @ d_out,
        "b2": np.array([d_out.sum()]),
        "W1": X.T @ d_h,
        "b1": d_h.sum(axis=0),
    }
    return loss, grads


def train_value_regressor(features, targets, config: RegressorConfig = RegressorConfig()):
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or len(X) == 0 or len(X) != len(y):
        raise ValueError("need a non-empty (n, d) feature matrix with n targets")
    if not np.all(np.isfinite(y)):
        raise ValueError("targets must be finite")
    x_mean, x_std = X.mean(axis=0), X.std(axis=0)
    x_std = np.where(x_std > 0, x_std, 1.0)
    y_mean, y_std = float(y.mean()), float(y.std())
    y_std = y_std if y_std > 0 else 1.0
    Xs, ys = (X - x_mean) / x_std, (y - y_mean) / y_std

    p = init_params(X.shape[1], config.hidden, np.random.default_rng(config.seed))
    losses = []
    # overflow is caught below as a non-finite loss, so keep numpy quiet about it
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(config.epochs):
            loss, g = loss_and_grad(p, Xs, ys)
            if not np.isfinite(loss):
                raise RegressorError(f"loss diverged (lr={config.lr}); try a smaller learning rate")
            losses.append(loss * y_std ** 2)
            for k in p:
                p[k] = p[k] - config.lr * g[k]
        loss, _ = loss_and_grad(p, Xs, ys)
    if not np.isfinite(loss):
        raise RegressorError(f"loss diverged (lr={config.lr}); try a smaller learning rate")
    losses.append(loss * y_std ** 2)
    return ValueRegressor(p["W1"], p["b1"], p["W2"], float(p["b2"][0]), x_mean, x_std,
                          y_mean, y_std, config, losses)


def predict_values(reg: ValueRegressor, features) -> np.ndarray:
    X = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if X.shape[1] != reg.W1.shape[0]:
        raise ValueError(f"feature dimension {X.shape[1]} != regressor input {reg.W1.shape[0]}")
    p = {"W1": reg.W1, "b1": reg.b1, "W2": reg.W2, "b2": np.atleast_1d(reg.b2)}
    out, _ = forward(p, (X - reg.x_mean) / reg.x_std)
    return out * reg.y_std + reg.y_mean
