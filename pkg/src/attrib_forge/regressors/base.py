from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

KIND_ALIASES = {
    "knn": "knn",
    "dt": "dtree",
    "dtree": "dtree",
    "rf": "rforest",
    "rforest": "rforest",
    "svr": "svr",
    "mlp": "mlp",
    "ann": "mlp",
}

DEFAULTS: dict[str, dict[str, float]] = {
    "knn": {"k": 5},
    "dtree": {"max_depth": 8, "min_samples_leaf": 5},
    "rforest": {
        "n_trees": 100,
        "max_depth": 8,
        "min_samples_leaf": 5,
        "bootstrap": 1,
        "max_features": 0,  # 0 means ceil(d/3)
    },
    "svr": {"C": 10.0, "gamma": 1.0, "epsilon": 0.1, "tol": 1e-3, "max_iter": 100_000},
    "mlp": {"hidden": 16, "epochs": 500, "lr": 0.01, "batch_size": 32},
}

_INT_PARAMS = {"k", "max_depth", "min_samples_leaf", "n_trees", "bootstrap",
               "max_features", "max_iter", "hidden", "epochs", "batch_size"}


def _check_bounds(kind: str, p: Mapping[str, float]) -> None:
    checks = {
        "k": p.get("k", 1) >= 1,
        "max_depth": p.get("max_depth", 1) >= 1,
        "min_samples_leaf": p.get("min_samples_leaf", 1) >= 1,
        "n_trees": p.get("n_trees", 1) >= 1,
        "max_features": p.get("max_features", 0) >= 0,
        "C": p.get("C", 1.0) > 0,
        "gamma": p.get("gamma", 1.0) > 0,
        "epsilon": p.get("epsilon", 0.0) >= 0,
        "tol": p.get("tol", 1.0) > 0,
        "max_iter": p.get("max_iter", 1) >= 1,
        "hidden": p.get("hidden", 1) >= 1,
        "epochs": p.get("epochs", 0) >= 0,
        "lr": p.get("lr", 1.0) > 0,
        "batch_size": p.get("batch_size", 1) >= 1,
    }
    bad = [name for name, ok in checks.items() if name in p and not ok]
    if bad:
        raise ValueError(f"{kind}: hyperparameters out of bounds: {bad}")


@dataclass(frozen=True)
class RegressorSpec:
    """Declarative model choice. Missing hyperparameters take kind defaults."""

    kind: str
    hyperparams: Mapping[str, float] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        kind = KIND_ALIASES.get(str(self.kind).lower())
        if kind is None:
            raise ValueError(f"unknown regressor kind {self.kind!r}")
        unknown = set(self.hyperparams) - set(DEFAULTS[kind])
        if unknown:
            raise ValueError(f"{kind}: unknown hyperparameters {sorted(unknown)}")
        merged: dict[str, Any] = dict(DEFAULTS[kind])
        merged.update(self.hyperparams)
        for name in merged:
            if name in _INT_PARAMS:
                merged[name] = int(merged[name])
            else:
                merged[name] = float(merged[name])
        _check_bounds(kind, merged)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "hyperparams", merged)
        object.__setattr__(self, "seed", int(self.seed))

    def with_params(self, **params) -> "RegressorSpec":
        hp = dict(self.hyperparams)
        hp.update(params)
        return RegressorSpec(self.kind, hp, self.seed)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "hyperparams": dict(sorted(self.hyperparams.items())),
                "seed": self.seed}


class TrainedModel:
    """Common surface of fitted regressors."""

    feature_count: int

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.feature_count:
            raise ValueError(
                f"expected {self.feature_count} features, got shape {X.shape}"
            )
        return self._predict(X)

    def _predict(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def check_training_data(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D array")
    if y.shape != (X.shape[0],):
        raise ValueError("y must have one entry per row of X")
    if X.shape[0] < 2 or X.shape[1] < 1:
        raise ValueError(f"need n >= 2 and d >= 1, got shape {X.shape}")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("training data contains non-finite values")
    return X, y


def frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a
