"""CART regression trees and bagged forests of them."""

from __future__ import annotations

import math

import numpy as np

from .base import TrainedModel, frozen


def _best_split(Xn: np.ndarray, yn: np.ndarray, features: np.ndarray, min_leaf: int):
    """Return ``(feature, threshold)`` maximising the variance reduction, or None.

    Ties go to the lowest feature index, then the lowest threshold.
    """
    n = yn.shape[0]
    cols = Xn[:, features]
    order = np.argsort(cols, axis=0, kind="stable")
    xs = np.take_along_axis(cols, order, axis=0)
    ys = yn[order]
    left_sum = np.cumsum(ys, axis=0)[:-1]
    total = yn.sum()
    n_left = np.arange(1, n, dtype=float)[:, None]
    score = left_sum**2 / n_left + (total - left_sum) ** 2 / (n - n_left)
    valid = xs[1:] > xs[:-1]
    valid[: min_leaf - 1] = False
    if min_leaf > 1:
        valid[n - min_leaf:] = False
    if not valid.any():
        return None
    score = np.where(valid, score, -np.inf)
    flat = np.argmax(score.T)  # feature-major, so first hit = lowest feature
    f_pos, row = divmod(int(flat), n - 1)
    gain = score[row, f_pos] - total**2 / n
    if not gain > 1e-12 * max(1.0, float(np.dot(yn, yn))):
        return None
    threshold = 0.5 * (xs[row, f_pos] + xs[row + 1, f_pos])
    if not threshold < xs[row + 1, f_pos]:  # adjacent floats
        threshold = xs[row, f_pos]
    return int(features[f_pos]), float(threshold)


class DecisionTree(TrainedModel):
    """Binary regression tree grown greedily on squared error.

    ``max_features`` features are drawn per split when given (forest mode);
    otherwise every feature is considered.
    """

    def __init__(self, X, y, max_depth=8, min_samples_leaf=5, max_features=None, rng=None):
        n, d = X.shape
        self.feature_count = d
        self.max_depth = max_depth
        feature, threshold, left, right, value = [], [], [], [], []

        def new_node(idx):
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(float(np.mean(y[idx])))
            return len(value) - 1

        all_features = np.arange(d)
        stack = [(np.arange(n), 0, new_node(np.arange(n)))]
        while stack:
            idx, depth, node = stack.pop()
            yn = y[idx]
            if depth >= max_depth or idx.size < 2 * min_samples_leaf or np.ptp(yn) == 0:
                continue
            if max_features is not None and max_features < d:
                feats = np.sort(rng.choice(d, size=max_features, replace=False))
            else:
                feats = all_features
            split = _best_split(X[idx], yn, feats, min_samples_leaf)
            if split is None:
                continue
            f, t = split
            go_left = X[idx, f] <= t
            li, ri = idx[go_left], idx[~go_left]
            feature[node], threshold[node] = f, t
            left[node], right[node] = new_node(li), new_node(ri)
            stack.append((ri, depth + 1, right[node]))
            stack.append((li, depth + 1, left[node]))

        self.feature = frozen(np.asarray(feature, dtype=np.intp))
        self.threshold = frozen(np.asarray(threshold))
        self.left = frozen(np.asarray(left, dtype=np.intp))
        self.right = frozen(np.asarray(right, dtype=np.intp))
        self.value = frozen(np.asarray(value))

    @property
    def n_nodes(self) -> int:
        return self.value.size

    def _predict(self, X):
        node = np.zeros(X.shape[0], dtype=np.intp)
        rows = np.arange(X.shape[0])
        for _ in range(self.max_depth):
            feat = self.feature[node]
            internal = feat >= 0
            if not internal.any():
                break
            x = X[rows, np.where(internal, feat, 0)]
            nxt = np.where(x <= self.threshold[node], self.left[node], self.right[node])
            node = np.where(internal, nxt, node)
        return self.value[node].copy()


class RandomForest(TrainedModel):
    """Bagged CART trees; prediction is the plain mean over trees.

    Tree ``t`` draws its randomness from ``default_rng([seed, t])`` so trees
    can be grown in any order with identical results.
    """

    def __init__(self, X, y, n_trees=100, max_depth=8, min_samples_leaf=5,
                 bootstrap=True, max_features=0, seed=0):
        n, d = X.shape
        self.feature_count = d
        mtry = max_features if max_features else math.ceil(d / 3)
        mtry = min(mtry, d)
        trees = []
        for t in range(n_trees):
            rng = np.random.default_rng([seed, t])
            idx = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
            trees.append(DecisionTree(X[idx], y[idx], max_depth, min_samples_leaf, mtry, rng))
        self.trees = tuple(trees)

    def tree_predictions(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.stack([t.predict(X) for t in self.trees])

    def _predict(self, X):
        return np.mean(np.stack([t._predict(X) for t in self.trees]), axis=0)
