"""Model-agnostic Shapley attribution with a background reference set.

A coalition ``S`` is scored by averaging the model over background rows in
which the features of ``S`` are overwritten with the explained instance's
values. Exact attribution enumerates all ``2**d`` coalitions; beyond
``exact_cap`` features a permutation-sampling estimator is used instead.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from joblib import Parallel, delayed

EXACT_CAP = 15
_CHUNK_ROWS = 65_536


def _as_function(model) -> Callable[[np.ndarray], np.ndarray]:
    if hasattr(model, "predict"):
        return model.predict
    if callable(model):
        return model
    raise TypeError("model must have a predict method or be callable")


@dataclass(frozen=True)
class ShapMatrix:
    values: np.ndarray
    base_value: float
    feature_names: tuple[str, ...]

    @property
    def shape(self):
        return self.values.shape


@dataclass
class SpecImportanceTable:
    """Mean Shapley value and support for each (feature, raw value) group."""

    entries: dict[tuple[str, str], tuple[float, int]] = field(default_factory=dict)

    def for_feature(self, feature: str) -> list[tuple[str, float, int]]:
        return [(v, mean, n) for (f, v), (mean, n) in self.entries.items() if f == feature]

    def to_dict(self) -> dict:
        out: dict[str, list] = {}
        for (f, v), (mean, n) in self.entries.items():
            out.setdefault(f, []).append({"value": v, "mean_shap": mean, "support": n})
        return out


def background_sample(X, size: int = 100, seed: int = 0) -> np.ndarray:
    """``min(size, n)`` distinct rows of ``X`` chosen with ``seed``, in row order."""
    X = np.asarray(X, dtype=float)
    b = min(size, X.shape[0])
    idx = np.sort(np.random.default_rng(seed).choice(X.shape[0], size=b, replace=False))
    return X[idx]


def _codes_to_masks(codes: np.ndarray, d: int) -> np.ndarray:
    return ((codes[:, None] >> np.arange(d, dtype=np.int64)) & 1).astype(bool)


def _coalition_values(f, x: np.ndarray, B: np.ndarray, codes: np.ndarray) -> np.ndarray:
    """Value of each coalition (given as bit codes) for instance ``x``."""
    d = x.size
    full = (1 << d) - 1
    b = B.shape[0]
    out = np.empty(codes.size)
    is_full = codes == full
    if is_full.any():
        out[is_full] = f(x[None, :])[0]
    rest = np.flatnonzero(~is_full)
    step = max(1, _CHUNK_ROWS // b)
    for s in range(0, rest.size, step):
        sel = rest[s:s + step]
        masks = _codes_to_masks(codes[sel], d)
        rows = np.where(masks[:, None, :], x[None, None, :], B[None, :, :])
        preds = np.asarray(f(rows.reshape(-1, d)), dtype=float).reshape(sel.size, b)
        out[sel] = preds.mean(axis=1)
    return out


def value_function(model, x, S: Sequence[int], B) -> float:
    """Mean model output over ``B`` with the features in ``S`` taken from ``x``."""
    x = np.asarray(x, dtype=float).ravel()
    B = np.atleast_2d(np.asarray(B, dtype=float))
    code = 0
    for j in set(int(j) for j in S):
        if not 0 <= j < x.size:
            raise IndexError(f"feature index {j} out of range")
        code |= 1 << j
    return float(_coalition_values(_as_function(model), x, B, np.array([code]))[0])


def _shapley_weights(d: int) -> np.ndarray:
    return np.array([
        math.factorial(s) * math.factorial(d - s - 1) / math.factorial(d) for s in range(d)
    ])


def exact_shapley(model, x, B, cap: int = EXACT_CAP) -> np.ndarray:
    """Shapley values by full enumeration of the ``2**d`` coalitions."""
    x = np.asarray(x, dtype=float).ravel()
    B = np.atleast_2d(np.asarray(B, dtype=float))
    d = x.size
    if d > cap:
        raise ValueError(
            f"{d} features exceeds the exact-mode cap of {cap}; use sampled_shapley"
        )
    codes = np.arange(1 << d, dtype=np.int64)
    v = _coalition_values(_as_function(model), x, B, codes)
    size = _codes_to_masks(codes, d).sum(axis=1)
    w = _shapley_weights(d)
    phi = np.empty(d)
    for i in range(d):
        bit = 1 << i
        without = codes[(codes & bit) == 0]
        phi[i] = np.sum(w[size[without]] * (v[without | bit] - v[without]))
    return phi


def _permutations(d: int, n: int, rng: np.random.Generator, antithetic: bool) -> np.ndarray:
    if not antithetic:
        return np.stack([rng.permutation(d) for _ in range(n)])
    half = [rng.permutation(d) for _ in range((n + 1) // 2)]
    perms = []
    for p in half:
        perms.append(p)
        perms.append(p[::-1])
    return np.stack(perms[:n])


def sampled_shapley(model, x, B, permutations: int, rng: np.random.Generator,
                    antithetic: bool = True) -> np.ndarray:
    """Permutation-sampling estimate of the Shapley values.

    Each ordering adds features one at a time and credits each with its gain
    in coalition value. With ``antithetic`` every ordering is paired with its
    reverse, which lowers variance without biasing the estimate. Coalition
    values are computed once per distinct coalition.
    """
    if permutations < 1:
        raise ValueError("permutations must be at least 1")
    x = np.asarray(x, dtype=float).ravel()
    B = np.atleast_2d(np.asarray(B, dtype=float))
    d = x.size
    if d > 62:
        raise ValueError("sampled_shapley supports at most 62 features")
    perms = _permutations(d, permutations, rng, antithetic)
    bits = np.left_shift(np.int64(1), perms.astype(np.int64))
    chain = np.concatenate([np.zeros((perms.shape[0], 1), np.int64), np.cumsum(bits, axis=1)], axis=1)
    uniq, inverse = np.unique(chain, return_inverse=True)
    v = _coalition_values(_as_function(model), x, B, uniq)[inverse.reshape(chain.shape)]
    gains = np.diff(v, axis=1)
    phi = np.zeros(d)
    np.add.at(phi, perms, gains)
    return phi / perms.shape[0]


def _explain_row(f, x, B, mode, permutations, seed, row, cap, antithetic):
    if mode == "exact":
        return exact_shapley(f, x, B, cap)
    rng = np.random.default_rng([seed, row])
    return sampled_shapley(f, x, B, permutations, rng, antithetic)


def shap_matrix(model, X, B, mode: str = "auto", permutations: int = 4096, seed: int = 0,
                feature_names: Sequence[str] | None = None, cap: int = EXACT_CAP,
                antithetic: bool = True, n_jobs: int = 1) -> ShapMatrix:
    """Attribution for every row of ``X``.

    ``mode`` is ``exact``, ``sampled`` or ``auto`` (exact up to ``cap``
    features). Row ``i`` of a sampled run uses the seed ``[seed, i]``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    m, d = X.shape
    if mode == "auto":
        mode = "exact" if d <= cap else "sampled"
    if mode not in ("exact", "sampled"):
        raise ValueError(f"unknown mode {mode!r}")
    f = _as_function(model)
    args = (B, mode, permutations, seed)
    if n_jobs == 1:
        rows = [_explain_row(f, X[i], *args, i, cap, antithetic) for i in range(m)]
    else:
        rows = Parallel(n_jobs=n_jobs)(
            delayed(_explain_row)(f, X[i], *args, i, cap, antithetic) for i in range(m)
        )
    values = np.vstack(rows) if rows else np.empty((0, d))
    base = float(np.mean(f(B)))
    names = tuple(feature_names or (f"x{j}" for j in range(d)))
    return ShapMatrix(values=values, base_value=base, feature_names=names)


def rank_features(S: ShapMatrix) -> list[tuple[str, float]]:
    """Features by mean |phi|, largest first; ties keep column order."""
    if S.values.shape[0] < 1:
        raise ValueError("need at least one explained row")
    score = np.abs(S.values).mean(axis=0)
    order = sorted(range(score.size), key=lambda j: (-score[j], j))
    return [(S.feature_names[j], float(score[j])) for j in order]


def _is_number(v) -> bool:
    return isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)


def _label(v) -> str:
    if _is_number(v):
        v = float(v)
        return str(int(v)) if v.is_integer() else repr(v)
    return str(v)


def spec_importance(S: ShapMatrix, raw_values, kinds: Sequence[str] | None = None,
                    max_distinct: int = 30, n_bins: int = 10) -> SpecImportanceTable:
    """Mean Shapley value per raw attribute value.

    Categorical features, and numeric ones with at most ``max_distinct``
    values, are grouped by exact value; other numeric features are grouped
    into ``n_bins`` quantile bins.
    """
    raw = np.asarray(raw_values, dtype=object)
    m, d = S.values.shape
    if raw.shape != (m, d):
        raise ValueError(f"raw values shape {raw.shape} does not match {S.values.shape}")
    table = SpecImportanceTable()
    for j, name in enumerate(S.feature_names):
        col = list(raw[:, j])
        numeric = (kinds[j] == "numeric") if kinds is not None else all(_is_number(v) for v in col)
        phi = S.values[:, j]
        if numeric:
            nums = np.asarray(col, dtype=float)
            if len(set(nums.tolist())) <= max_distinct:
                keys = nums
                groups = [(_label(v), keys == v) for v in sorted(set(nums.tolist()))]
            else:
                edges = np.unique(np.quantile(nums, np.linspace(0, 1, n_bins + 1)))
                bins = np.searchsorted(edges[1:-1], nums, side="right")
                groups = []
                for k in range(edges.size - 1):
                    sel = bins == k
                    if sel.any():
                        groups.append((f"[{_label(edges[k])}, {_label(edges[k + 1])}]", sel))
        else:
            labels = np.array([_label(v) for v in col], dtype=object)
            groups = [(v, labels == v) for v in sorted(Counter(labels.tolist()))]
        for label, sel in groups:
            table.entries[(name, label)] = (float(phi[sel].mean()), int(sel.sum()))
    return table


def beeswarm_points(S: ShapMatrix, scaled_values) -> list[dict]:
    """One record per (row, feature), features in ranking order."""
    scaled = np.asarray(scaled_values, dtype=float)
    if scaled.shape != S.values.shape:
        raise ValueError("scaled values must align with the Shapley matrix")
    index = {n: j for j, n in enumerate(S.feature_names)}
    points = []
    for rank, (name, _) in enumerate(rank_features(S)):
        j = index[name]
        for i in range(S.values.shape[0]):
            points.append({
                "feature": name,
                "rank": rank,
                "row": i,
                "shap": float(S.values[i, j]),
                "feature_value": float(scaled[i, j]),
            })
    return points


def _swarm_offsets(v: np.ndarray, n_bins: int = 60, spacing: float = 0.04) -> np.ndarray:
    offsets = np.zeros(v.size)
    if v.size == 0:
        return offsets
    lo, hi = v.min(), v.max()
    width = (hi - lo) / n_bins or 1.0
    bins = np.minimum(((v - lo) / width).astype(int), n_bins - 1)
    for b in np.unique(bins):
        idx = np.flatnonzero(bins == b)
        k = np.arange(idx.size)
        offsets[idx] = np.clip(np.where(k % 2, -1, 1) * ((k + 1) // 2) * spacing, -0.4, 0.4)
    return offsets


def beeswarm_export(S: ShapMatrix, scaled_values, csv_path, svg_path=None) -> list[dict]:
    """Write beeswarm plot data as CSV and, optionally, a static SVG figure."""
    points = beeswarm_points(S, scaled_values)
    csv_path = Path(csv_path)
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature", "rank", "row", "shap", "feature_value"])
        for p in points:
            w.writerow([p["feature"], p["rank"], p["row"], repr(p["shap"]), repr(p["feature_value"])])
    if svg_path is not None:
        _beeswarm_svg(points, Path(svg_path))
    return points


def _beeswarm_svg(points: list[dict], path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = list(dict.fromkeys(p["feature"] for p in points))
    with matplotlib.rc_context({"svg.hashsalt": "attrib-forge", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(7, 0.45 * max(len(names), 2) + 1.2))
        for rank, name in enumerate(names):
            pts = [p for p in points if p["feature"] == name]
            v = np.array([p["shap"] for p in pts])
            c = np.array([p["feature_value"] for p in pts])
            y = len(names) - 1 - rank + _swarm_offsets(v)
            sc = ax.scatter(v, y, c=c, cmap="coolwarm", vmin=0, vmax=1, s=10, linewidths=0)
        ax.set_yticks(range(len(names)))
        ax.set_yticklabels(names[::-1])
        ax.axvline(0.0, color="grey", linewidth=0.8)
        ax.set_xlabel("Shapley value (impact on model output)")
        if names:
            fig.colorbar(sc, ax=ax, label="feature value (scaled)")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
