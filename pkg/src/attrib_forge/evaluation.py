"""Error metrics and the k-fold cross-validation harness."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import EncodedDataset, scale_column
from .regressors import RegressorSpec, fit


@dataclass(frozen=True)
class MetricTriple:
    mse: float
    rmse: float
    mae: float

    def to_dict(self) -> dict:
        return {"mse": self.mse, "rmse": self.rmse, "mae": self.mae}


def metrics(z, z_hat) -> MetricTriple:
    """MSE, RMSE and MAE between actual ``z`` and predicted ``z_hat``."""
    z = np.asarray(z, dtype=float)
    z_hat = np.asarray(z_hat, dtype=float)
    if z.shape != z_hat.shape or z.ndim != 1:
        raise ValueError("z and z_hat must be 1-D vectors of equal length")
    if z.size == 0:
        raise ValueError("cannot score empty vectors")
    r = z - z_hat
    mse = float(np.mean(r * r))
    return MetricTriple(mse=mse, rmse=math.sqrt(mse), mae=float(np.mean(np.abs(r))))


def average(triples) -> MetricTriple:
    """Arithmetic mean of per-fold MSE and MAE; RMSE is recomputed as sqrt(MSE).

    Recomputing RMSE keeps ``rmse == sqrt(mse)`` exact for averaged results.
    """
    triples = list(triples)
    mse = float(np.mean([t.mse for t in triples]))
    mae = float(np.mean([t.mae for t in triples]))
    return MetricTriple(mse=mse, rmse=math.sqrt(mse), mae=mae)


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: np.ndarray
    seed: int

    def __post_init__(self):
        self.assignments.setflags(write=False)

    @property
    def m(self) -> int:
        return self.assignments.size

    def fold_sizes(self) -> list[int]:
        return np.bincount(self.assignments, minlength=self.k).tolist()

    def split(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        test = self.assignments == fold
        return np.flatnonzero(~test), np.flatnonzero(test)


def make_folds(m: int, k: int, seed: int = 0) -> FoldPlan:
    """Shuffle ``range(m)`` with ``seed`` and deal the rows round-robin into k folds."""
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > m:
        raise ValueError(f"cannot make {k} folds from {m} rows")
    perm = np.random.default_rng(seed).permutation(m)
    assignments = np.empty(m, dtype=np.intp)
    assignments[perm] = np.arange(m) % k
    return FoldPlan(k=k, assignments=assignments, seed=seed)


def _mask_columns(mask, d: int) -> np.ndarray:
    bits = np.asarray(mask).astype(bool).ravel()
    if bits.size != d:
        raise ValueError(f"mask has {bits.size} bits, dataset has {d} features")
    cols = np.flatnonzero(bits)
    if cols.size == 0:
        raise ValueError("mask selects no features")
    return cols


def _fold_matrices(data: EncodedDataset, cols, train, test, strict_scaling):
    if not strict_scaling:
        return data.X[np.ix_(train, cols)], data.X[np.ix_(test, cols)]
    # refit min-max on the training rows only
    codes = data.codes[:, cols]
    Xtr = np.empty((train.size, cols.size))
    Xte = np.empty((test.size, cols.size))
    for j in range(cols.size):
        lo, hi = codes[train, j].min(), codes[train, j].max()
        Xtr[:, j] = scale_column(codes[train, j], lo, hi)
        Xte[:, j] = scale_column(codes[test, j], lo, hi)
    return Xtr, Xte


def fold_metrics(data: EncodedDataset, mask, spec: RegressorSpec, plan: FoldPlan,
                 strict_scaling: bool = False) -> list[MetricTriple]:
    """Per-fold metrics, in fold order."""
    if plan.m != data.n_samples:
        raise ValueError("fold plan and dataset disagree on the number of rows")
    cols = _mask_columns(mask, data.n_features)
    out = []
    for fold in range(plan.k):
        train, test = plan.split(fold)
        if train.size < 2:
            raise ValueError(f"fold {fold} leaves fewer than 2 training rows")
        Xtr, Xte = _fold_matrices(data, cols, train, test, strict_scaling)
        model = fit(spec, Xtr, data.y[train])
        out.append(metrics(data.y[test], model.predict(Xte)))
    return out


def cross_validate(data: EncodedDataset, mask, spec: RegressorSpec, plan: FoldPlan,
                   strict_scaling: bool = False) -> MetricTriple:
    """k-fold CV of ``spec`` on the masked columns; per-fold metrics then mean."""
    return average(fold_metrics(data, mask, spec, plan, strict_scaling))
