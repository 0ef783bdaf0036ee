import numpy as np

from .base import TrainedModel, frozen

# Squared distances are rounded to this many decimals before ranking so that
# summation order (i.e. column order) cannot flip a tie.
_DIST_DECIMALS = 12
_CHUNK_ELEMS = 4_000_000


class KNNRegressor(TrainedModel):
    """Mean target of the k nearest training rows (Euclidean).

    Equal distances are resolved in favour of the lower training index.
    """

    def __init__(self, X: np.ndarray, y: np.ndarray, k: int):
        if X.shape[0] < k:
            raise ValueError(f"knn needs at least k={k} training rows, got {X.shape[0]}")
        self.X = frozen(X)
        self.y = frozen(y)
        self.k = k
        self.feature_count = X.shape[1]

    def _predict(self, X):
        out = np.empty(X.shape[0])
        step = max(1, _CHUNK_ELEMS // (self.X.shape[0] * self.feature_count))
        for start in range(0, X.shape[0], step):
            q = X[start:start + step]
            d2 = ((q[:, None, :] - self.X[None, :, :]) ** 2).sum(axis=2)
            d2 = np.round(d2, _DIST_DECIMALS)
            if self.k == 1:
                idx = np.argmin(d2, axis=1)[:, None]
            else:
                idx = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
            out[start:start + step] = self.y[idx].mean(axis=1)
        return out
