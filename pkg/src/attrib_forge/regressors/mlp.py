from __future__ import annotations

import numpy as np

from .base import TrainedModel, frozen


def forward(params, X):
    W1, b1, W2, b2 = params
    Z = X @ W1 + b1
    H = np.maximum(Z, 0.0)
    return H @ W2 + b2, Z, H


def loss_and_grad(params, X, t):
    """Mean squared error of a one-hidden-layer ReLU net and its gradient."""
    W1, b1, W2, b2 = params
    out, Z, H = forward(params, X)
    r = out - t
    loss = float(np.mean(r**2))
    d_out = 2.0 * r / X.shape[0]
    gW2 = H.T @ d_out
    gb2 = d_out.sum()
    dZ = np.outer(d_out, W2) * (Z > 0)
    gW1 = X.T @ dZ
    gb1 = dZ.sum(axis=0)
    return loss, (gW1, gb1, gW2, gb2)


class MLP(TrainedModel):
    """One hidden ReLU layer trained by plain mini-batch gradient descent.

    Targets are standardized before training. Output weights start at zero,
    so the untrained net predicts the target mean, and a constant target is
    reproduced exactly.
    """

    def __init__(self, X, y, hidden=16, epochs=500, lr=0.01, batch_size=32, seed=0):
        n, d = X.shape
        self.feature_count = d
        rng = np.random.default_rng(seed)
        self.y_mean = float(y.mean())
        sd = float(y.std())
        self.y_scale = sd if sd > 0 else 1.0
        t = (y - self.y_mean) / self.y_scale

        bound = 1.0 / np.sqrt(d)
        params = [
            rng.uniform(-bound, bound, size=(d, hidden)),
            np.zeros(hidden),
            np.zeros(hidden),
            0.0,
        ]
        for _ in range(epochs):
            order = rng.permutation(n)
            for s in range(0, n, batch_size):
                batch = order[s:s + batch_size]
                _, grads = loss_and_grad(params, X[batch], t[batch])
                for k in range(4):
                    params[k] = params[k] - lr * grads[k]
        self.params = tuple(frozen(p) if k < 3 else float(p) for k, p in enumerate(params))

    def _predict(self, X):
        out, _, _ = forward(self.params, X)
        return self.y_mean + self.y_scale * out
