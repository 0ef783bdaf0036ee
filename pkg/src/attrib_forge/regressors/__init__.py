"""From-scratch regressors sharing one ``fit``/``predict`` contract."""

from __future__ import annotations

import numpy as np

from .base import DEFAULTS, KIND_ALIASES, RegressorSpec, TrainedModel, check_training_data
from .knn import KNNRegressor
from .mlp import MLP
from .svr import SVR, rbf_kernel, smo_solve
from .tree import DecisionTree, RandomForest

KINDS = tuple(DEFAULTS)

__all__ = [
    "DEFAULTS", "KINDS", "KIND_ALIASES", "RegressorSpec", "TrainedModel",
    "KNNRegressor", "DecisionTree", "RandomForest", "SVR", "MLP",
    "rbf_kernel", "smo_solve", "fit", "predict",
]


def fit(spec: RegressorSpec, X, y) -> TrainedModel:
    """Fit the model described by ``spec``. Deterministic in (spec, X, y)."""
    X, y = check_training_data(X, y)
    hp = spec.hyperparams
    if spec.kind == "knn":
        return KNNRegressor(X, y, hp["k"])
    if spec.kind == "dtree":
        return DecisionTree(X, y, hp["max_depth"], hp["min_samples_leaf"])
    if spec.kind == "rforest":
        return RandomForest(X, y, hp["n_trees"], hp["max_depth"], hp["min_samples_leaf"],
                            bool(hp["bootstrap"]), hp["max_features"], spec.seed)
    if spec.kind == "svr":
        return SVR(X, y, hp["C"], hp["gamma"], hp["epsilon"], hp["tol"], hp["max_iter"])
    if spec.kind == "mlp":
        return MLP(X, y, hp["hidden"], hp["epochs"], hp["lr"], hp["batch_size"], spec.seed)
    raise ValueError(f"unknown kind {spec.kind!r}")


def predict(model: TrainedModel, X) -> np.ndarray:
    return model.predict(X)
