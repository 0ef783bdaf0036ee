"""Loading, cleaning and encoding of raw product tables.

The pipeline is ``load_csv -> filter_min_ratings -> impute_missing ->
encode_and_scale``. Every step is a pure function of its inputs; the optional
:class:`PreprocessReport` collects what was dropped or imputed along the way.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

KINDS = ("categorical", "numeric")
ROLES = ("feature", "rating_count", "star_rating", "drop")


class DataError(ValueError):
    """Raised for malformed input data."""


class SchemaError(DataError):
    """Raised when the column schema is inconsistent with the table."""


@dataclass(frozen=True)
class RawTable:
    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "header", tuple(self.header))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        if len(set(self.header)) != len(self.header):
            dupes = sorted(n for n, c in Counter(self.header).items() if c > 1)
            raise DataError(f"duplicate header names: {dupes}")
        width = len(self.header)
        for i, row in enumerate(self.rows, start=1):
            if len(row) != width:
                raise DataError(
                    f"ragged row {i}: expected {width} cells, got {len(row)}"
                )

    def __len__(self) -> int:
        return len(self.rows)

    def index(self, name: str) -> int:
        try:
            return self.header.index(name)
        except ValueError:
            raise SchemaError(f"unknown column {name!r}") from None

    def column(self, name: str) -> list[str]:
        j = self.index(name)
        return [row[j] for row in self.rows]

    def with_rows(self, rows: Iterable[Sequence[str]]) -> "RawTable":
        return RawTable(self.header, tuple(tuple(r) for r in rows))


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: str = "categorical"
    role: str = "feature"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.role not in ROLES:
            raise SchemaError(f"column {self.name!r}: unknown role {self.role!r}")


@dataclass
class PreprocessReport:
    """Bookkeeping of every row and column removed or altered."""

    rows_loaded: int = 0
    dropped_unparseable_count: int = 0
    dropped_below_threshold: int = 0
    dropped_missing_target: int = 0
    dropped_columns: dict[str, str] = field(default_factory=dict)
    imputed: dict[str, int] = field(default_factory=dict)
    rows_out: int = 0

    def to_dict(self) -> dict:
        return {
            "rows_loaded": self.rows_loaded,
            "dropped_unparseable_count": self.dropped_unparseable_count,
            "dropped_below_threshold": self.dropped_below_threshold,
            "dropped_missing_target": self.dropped_missing_target,
            "dropped_columns": dict(self.dropped_columns),
            "imputed": dict(self.imputed),
            "rows_out": self.rows_out,
        }


def load_csv(path: str | Path) -> RawTable:
    """Read an RFC-4180 CSV file with a header row. Cells are kept verbatim."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8-sig") as fh:
            records = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not records or not records[0]:
        raise DataError(f"{path}: missing header")
    header = records[0]
    rows = []
    for i, rec in enumerate(records[1:], start=1):
        if not rec:  # blank line
            continue
        if len(rec) != len(header):
            raise DataError(
                f"{path}: ragged row {i}: expected {len(header)} cells, got {len(rec)}"
            )
        rows.append(rec)
    return RawTable(tuple(header), tuple(tuple(r) for r in rows))


def _is_missing(cell: str) -> bool:
    return cell.strip() == ""


def _parse_float(cell: str) -> float | None:
    try:
        v = float(cell.strip())
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def _parse_count(cell: str) -> int | None:
    text = cell.strip().replace(",", "")
    try:
        v = float(text)
    except ValueError:
        return None
    if not math.isfinite(v) or v < 0 or v != int(v):
        return None
    return int(v)


def _format_number(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def infer_kind(cells: Iterable[str]) -> str:
    """``numeric`` when every non-empty cell parses as a float."""
    seen = False
    for c in cells:
        if _is_missing(c):
            continue
        seen = True
        if _parse_float(c) is None:
            return "categorical"
    return "numeric" if seen else "categorical"


def build_schema(
    table: RawTable, overrides: Mapping[str, str] | None = None
) -> list[ColumnSchema]:
    """Build a schema for every column of ``table``.

    ``overrides`` maps a column name to a whitespace-separated spec such as
    ``"categorical feature"``, ``"rating_count"`` or ``"drop"``. Unlisted
    columns become features of inferred kind.
    """
    overrides = dict(overrides or {})
    unknown = sorted(set(overrides) - set(table.header))
    if unknown:
        raise SchemaError(f"schema names columns absent from the table: {unknown}")
    schema = []
    for name in table.header:
        kind, role = None, "feature"
        for token in overrides.get(name, "").split():
            token = token.lower()
            if token in KINDS:
                kind = token
            elif token in ROLES:
                role = token
            else:
                raise SchemaError(f"column {name!r}: bad schema token {token!r}")
        if kind is None:
            kind = "numeric" if role in ("rating_count", "star_rating") else infer_kind(table.column(name))
        schema.append(ColumnSchema(name, kind, role))
    validate_schema(table, schema)
    return schema


def validate_schema(table: RawTable, schema: Sequence[ColumnSchema]) -> None:
    names = [c.name for c in schema]
    if sorted(names) != sorted(table.header):
        raise SchemaError("schema must list every table column exactly once")
    for role in ("rating_count", "star_rating"):
        n = sum(c.role == role for c in schema)
        if n != 1:
            raise SchemaError(f"schema needs exactly one {role} column, found {n}")


def _role_column(schema: Sequence[ColumnSchema], role: str) -> ColumnSchema:
    cols = [c for c in schema if c.role == role]
    if len(cols) != 1:
        raise SchemaError(f"schema needs exactly one {role} column, found {len(cols)}")
    return cols[0]


def mix_rating(rating_count: int, star: float) -> float:
    """Star rating shrunk towards zero for products with few ratings."""
    if rating_count < 0:
        raise ValueError("rating_count must be non-negative")
    return rating_count * star / (rating_count + 1)


def filter_min_ratings(
    table: RawTable,
    schema: Sequence[ColumnSchema],
    threshold: int,
    report: PreprocessReport | None = None,
) -> RawTable:
    """Keep rows whose rating count is at least ``threshold``.

    Rows whose count does not parse as a non-negative integer are dropped and
    tallied separately; a missing count counts as unparseable.
    """
    col = _role_column(schema, "rating_count")
    j = table.index(col.name)
    kept, unparseable, below = [], 0, 0
    for row in table.rows:
        n = _parse_count(row[j])
        if n is None:
            unparseable += 1
        elif n < threshold:
            below += 1
        else:
            kept.append(row)
    if report is not None:
        report.dropped_unparseable_count += unparseable
        report.dropped_below_threshold += below
    return table.with_rows(kept)


def _median(values: Sequence[float]) -> float:
    return float(np.median(np.asarray(values, dtype=float)))


def _mode(values: Sequence[str]) -> str:
    counts = Counter(values)
    top = max(counts.values())
    return min(v for v, c in counts.items() if c == top)


def impute_missing(
    table: RawTable,
    schema: Sequence[ColumnSchema],
    report: PreprocessReport | None = None,
    max_missing: float = 0.4,
) -> tuple[RawTable, list[ColumnSchema]]:
    """Fill feature gaps and drop rows with an incomplete target.

    Numeric gaps take the column median, categorical gaps the column mode
    (ties go to the lexicographically smallest value). A feature column with
    more than ``max_missing`` of its cells empty is switched to role ``drop``.
    Returns the filled table and the updated schema.
    """
    validate_schema(table, schema)
    target_idx = [
        table.index(_role_column(schema, r).name) for r in ("rating_count", "star_rating")
    ]
    rows = [list(r) for r in table.rows if not any(_is_missing(r[j]) for j in target_idx)]
    if report is not None:
        report.dropped_missing_target += len(table.rows) - len(rows)

    new_schema = []
    for col in schema:
        if col.role != "feature" or not rows:
            new_schema.append(col)
            continue
        j = table.index(col.name)
        present = [r[j] for r in rows if not _is_missing(r[j])]
        n_missing = len(rows) - len(present)
        if n_missing / len(rows) > max_missing:
            new_schema.append(ColumnSchema(col.name, col.kind, "drop"))
            if report is not None:
                report.dropped_columns[col.name] = (
                    f"{n_missing}/{len(rows)} cells missing"
                )
            continue
        new_schema.append(col)
        if n_missing == 0:
            continue
        if col.kind == "numeric":
            parsed = []
            for c in present:
                v = _parse_float(c)
                if v is None:
                    raise DataError(f"column {col.name!r}: non-numeric cell {c!r}")
                parsed.append(v)
            fill = _format_number(_median(parsed))
        else:
            fill = _mode([c.strip() for c in present])
        for r in rows:
            if _is_missing(r[j]):
                r[j] = fill
        if report is not None:
            report.imputed[col.name] = n_missing
    return table.with_rows(rows), new_schema


@dataclass(frozen=True)
class EncodedDataset:
    """Numeric design matrix with everything needed to undo the encoding.

    ``codes`` holds the pre-scaling values (ordinal codes for categorical
    features, raw numbers for numeric ones); ``X`` is ``codes`` min-max scaled
    with ``scalers``. ``raw_values`` keeps the original cells, as ``str`` for
    categorical and ``float`` for numeric features.
    """

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]
    kinds: tuple[str, ...]
    encoders: dict[str, tuple[str, ...]]
    scalers: dict[str, tuple[float, float]]
    codes: np.ndarray
    raw_values: np.ndarray

    def __post_init__(self):
        for arr in (self.X, self.y, self.codes, self.raw_values):
            arr.setflags(write=False)

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def decode(self, feature: str, code: int) -> str:
        return self.encoders[feature][int(code)]

    def transform(self, table: RawTable) -> np.ndarray:
        """Encode and scale new rows with the fitted encoders and scalers."""
        out = np.empty((len(table), self.n_features))
        for j, (name, kind) in enumerate(zip(self.feature_names, self.kinds)):
            cells = table.column(name)
            if kind == "categorical":
                lookup = {c: i for i, c in enumerate(self.encoders[name])}
                codes = []
                for c in cells:
                    key = c.strip()
                    if key not in lookup:
                        raise DataError(f"feature {name!r}: unseen category {key!r}")
                    codes.append(lookup[key])
                col = np.asarray(codes, dtype=float)
            else:
                col = np.array([_parse_float(c) for c in cells], dtype=float)
            out[:, j] = scale_column(col, *self.scalers[name])
        return out


def scale_column(values: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Min-max scale; a zero-width range maps everything to 0."""
    values = np.asarray(values, dtype=float)
    if hi - lo <= 0:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def encode_and_scale(table: RawTable, schema: Sequence[ColumnSchema]) -> EncodedDataset:
    validate_schema(table, schema)
    if len(table) == 0:
        raise DataError("no rows left to encode")
    count_j = table.index(_role_column(schema, "rating_count").name)
    star_j = table.index(_role_column(schema, "star_rating").name)

    y = []
    for i, row in enumerate(table.rows, start=1):
        n, s = _parse_count(row[count_j]), _parse_float(row[star_j])
        if n is None or s is None:
            raise DataError(f"row {i}: unparseable rating count or star rating")
        y.append(mix_rating(n, s))

    features = [c for c in schema if c.role == "feature"]
    if not features:
        raise SchemaError("schema selects no feature columns")
    m, d = len(table), len(features)
    codes = np.empty((m, d))
    raw = np.empty((m, d), dtype=object)
    encoders, scalers = {}, {}
    for j, col in enumerate(features):
        cells = table.column(col.name)
        if any(_is_missing(c) for c in cells):
            raise DataError(f"feature {col.name!r} still has missing cells; impute first")
        if col.kind == "categorical":
            values = [c.strip() for c in cells]
            cats = tuple(sorted(set(values)))
            lookup = {c: i for i, c in enumerate(cats)}
            codes[:, j] = [lookup[v] for v in values]
            raw[:, j] = values
            encoders[col.name] = cats
        else:
            for i, c in enumerate(cells, start=1):
                v = _parse_float(c)
                if v is None:
                    raise DataError(f"feature {col.name!r}, row {i}: non-numeric cell {c!r}")
                codes[i - 1, j] = v
                raw[i - 1, j] = v
        scalers[col.name] = (float(codes[:, j].min()), float(codes[:, j].max()))

    X = np.column_stack(
        [scale_column(codes[:, j], *scalers[c.name]) for j, c in enumerate(features)]
    )
    return EncodedDataset(
        X=X,
        y=np.asarray(y, dtype=float),
        feature_names=tuple(c.name for c in features),
        kinds=tuple(c.kind for c in features),
        encoders=encoders,
        scalers=scalers,
        codes=codes,
        raw_values=raw,
    )


def from_arrays(
    X: np.ndarray, y: np.ndarray, feature_names: Sequence[str] | None = None
) -> EncodedDataset:
    """Wrap an already-numeric matrix as an :class:`EncodedDataset`.

    Columns are min-max scaled like numeric features; ``y`` is used verbatim.
    Handy for synthetic experiments.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise DataError("X must be 2-D and y must have one entry per row")
    names = tuple(feature_names or (f"x{j}" for j in range(X.shape[1])))
    scalers = {n: (float(X[:, j].min()), float(X[:, j].max())) for j, n in enumerate(names)}
    Xs = np.column_stack([scale_column(X[:, j], *scalers[n]) for j, n in enumerate(names)])
    return EncodedDataset(
        X=Xs,
        y=y.copy(),
        feature_names=names,
        kinds=("numeric",) * len(names),
        encoders={},
        scalers=scalers,
        codes=X.copy(),
        raw_values=X.astype(object),
    )


def build_dataset(
    table: RawTable,
    schema: Sequence[ColumnSchema],
    threshold: int = 10,
    report: PreprocessReport | None = None,
    max_missing: float = 0.4,
) -> tuple[EncodedDataset, list[ColumnSchema]]:
    """Filter, impute and encode in one go."""
    if report is not None:
        report.rows_loaded = len(table)
    table = filter_min_ratings(table, schema, threshold, report)
    table, schema = impute_missing(table, schema, report, max_missing)
    data = encode_and_scale(table, schema)
    if report is not None:
        report.rows_out = data.n_samples
    return data, schema


def describe(data: EncodedDataset) -> dict:
    """Descriptive statistics per feature and for the target.

    Numeric columns get mean, mode, median, dispersion (coefficient of
    variation), min and max; categorical columns get mode and dispersion
    (entropy in nats of the category distribution).
    """
    out = {}
    for j, (name, kind) in enumerate(zip(data.feature_names, data.kinds)):
        col = list(data.raw_values[:, j])
        if kind == "categorical":
            counts = np.array(list(Counter(col).values()), dtype=float)
            p = counts / counts.sum()
            out[name] = {
                "kind": kind,
                "mode": _mode(col),
                "dispersion": float(-(p * np.log(p)).sum()),
                "distinct": len(counts),
            }
        else:
            out[name] = {"kind": kind, **_numeric_stats(np.asarray(col, dtype=float))}
    out["mix_rating"] = {"kind": "target", **_numeric_stats(data.y)}
    return out


def _numeric_stats(v: np.ndarray) -> dict:
    counts = Counter(v.tolist())
    top = max(counts.values())
    mean = float(v.mean())
    return {
        "mean": mean,
        "mode": min(x for x, c in counts.items() if c == top),
        "median": float(np.median(v)),
        "dispersion": float(v.std() / mean) if mean != 0 else 0.0,
        "min": float(v.min()),
        "max": float(v.max()),
    }
