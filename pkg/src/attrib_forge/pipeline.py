"""End-to-end commands: ingest, select, explain, compare and report.

Every command writes its artifacts under ``cfg.out``. JSON artifacts embed
the resolved configuration; wall-clock timings go to a separate
``timings.json`` so that the reports themselves are byte-reproducible.
"""

from __future__ import annotations

import csv
import json
import time
from pathlib import Path

import numpy as np

from . import dataset as ds
from .config import RunConfig
from .evaluation import cross_validate, make_folds
from .genetic_search import GAResult, run_ga
from .regressors import RegressorSpec, fit
from .shapley import (background_sample, beeswarm_export, rank_features, shap_matrix,
                      spec_importance)


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, allow_nan=False) + "\n", encoding="utf-8")


def _out(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


class _Timer:
    def __init__(self, cfg):
        self.path = _out(cfg) / "timings.json"

    def record(self, name: str, seconds: float) -> None:
        data = json.loads(self.path.read_text()) if self.path.exists() else {}
        data[name] = round(seconds, 3)
        _write_json(self.path, data)


def _write_config(cfg: RunConfig) -> None:
    (_out(cfg) / "run_config.ini").write_text(cfg.to_ini(), encoding="utf-8")


def load_dataset(cfg: RunConfig) -> tuple[ds.EncodedDataset, ds.PreprocessReport, list]:
    table = ds.load_csv(cfg.input)
    schema = ds.build_schema(table, cfg.schema)
    report = ds.PreprocessReport()
    data, schema = ds.build_dataset(table, schema, cfg.rating_filter, report, cfg.max_missing)
    return data, report, schema


def cmd_ingest(cfg: RunConfig) -> tuple[ds.EncodedDataset, dict]:
    t0 = time.perf_counter()
    data, report, schema = load_dataset(cfg)
    out = _out(cfg)
    summary = {
        "config": cfg.to_dict(),
        "rows": data.n_samples,
        "features": list(data.feature_names),
        "schema": [{"name": c.name, "kind": c.kind, "role": c.role} for c in schema],
        "statistics": ds.describe(data),
    }
    _write_json(out / "preprocessing.json", {"config": cfg.to_dict(), **report.to_dict()})
    _write_json(out / "dataset_summary.json", summary)
    _write_config(cfg)
    _Timer(cfg).record("ingest", time.perf_counter() - t0)
    return data, report.to_dict()


def _subset_record(data, ind) -> dict:
    return {
        "mask": [int(b) for b in ind.mask],
        "features": [n for n, b in zip(data.feature_names, ind.mask) if b],
        "size": int(ind.mask.sum()),
        **ind.fitness.to_dict(),
    }


def _select(cfg: RunConfig, data, kind: str | None = None) -> GAResult:
    return run_ga(data, cfg.spec(kind), cfg.ga_config(),
                  plan=make_folds(data.n_samples, cfg.folds, cfg.seed),
                  strict_scaling=cfg.strict_scaling, tune_config=cfg.tuning,
                  per_mask_tuning=cfg.per_mask_tuning)


def cmd_select(cfg: RunConfig, data: ds.EncodedDataset | None = None) -> GAResult:
    t0 = time.perf_counter()
    if data is None:
        data, _, _ = load_dataset(cfg)
    result = _select(cfg, data)
    out = _out(cfg)
    _write_json(out / "subsets.json", {
        "config": cfg.to_dict(),
        "model": result.spec.to_dict(),
        "subsets": [_subset_record(data, ind) for ind in result.top],
        "progress": result.history,
    })
    with (out / "progress.jsonl").open("w", encoding="utf-8") as fh:
        for entry in result.history:
            fh.write(json.dumps(entry) + "\n")
    _write_config(cfg)
    _Timer(cfg).record("select", time.perf_counter() - t0)
    return result


def explain_mask(cfg: RunConfig, data: ds.EncodedDataset, mask, spec: RegressorSpec,
                 out_dir: Path | None = None) -> dict:
    """Refit on the full data restricted to ``mask`` and attribute every row."""
    mask = np.asarray(mask, dtype=bool)
    cols = np.flatnonzero(mask)
    X = data.X[:, cols]
    names = [data.feature_names[j] for j in cols]
    model = fit(spec, X, data.y)
    B = background_sample(X, cfg.shapley.background, cfg.seed)
    S = shap_matrix(model, X, B, mode=cfg.shapley.mode, permutations=cfg.shapley.permutations,
                    seed=cfg.seed, feature_names=names, cap=cfg.shapley.exact_cap,
                    n_jobs=cfg.n_jobs)
    ranking = rank_features(S)
    table = spec_importance(S, data.raw_values[:, cols], [data.kinds[j] for j in cols])
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        with (out_dir / "shap_matrix.csv").open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row", *names, "base_value"])
            for i, row in enumerate(S.values):
                w.writerow([i, *(repr(float(v)) for v in row), repr(S.base_value)])
        _write_json(out_dir / "ranking.json", {
            "config": cfg.to_dict(),
            "base_value": S.base_value,
            "ranking": [{"feature": f, "mean_abs_shap": s} for f, s in ranking],
        })
        _write_json(out_dir / "spec_importance.json", {
            "config": cfg.to_dict(), "features": table.to_dict()})
        beeswarm_export(S, X, out_dir / "beeswarm.csv", out_dir / "beeswarm.svg")
    return {"shap": S, "ranking": ranking, "spec_importance": table}


def cmd_explain(cfg: RunConfig, subset: int = 1, data: ds.EncodedDataset | None = None) -> dict:
    """Explain subset number ``subset`` (1-based) from ``subsets.json``."""
    t0 = time.perf_counter()
    path = _out(cfg) / "subsets.json"
    if not path.exists():
        raise FileNotFoundError(f"{path} not found; run select first")
    saved = json.loads(path.read_text(encoding="utf-8"))
    subsets = saved["subsets"]
    if not 1 <= subset <= len(subsets):
        raise IndexError(f"subset index {subset} out of range 1..{len(subsets)}")
    if data is None:
        data, _, _ = load_dataset(cfg)
    m = saved["model"]
    spec = RegressorSpec(m["kind"], m["hyperparams"], m["seed"])
    result = explain_mask(cfg, data, subsets[subset - 1]["mask"], spec,
                          _out(cfg) / f"explain_{subset}")
    _Timer(cfg).record(f"explain_{subset}", time.perf_counter() - t0)
    return result


def cmd_compare(cfg: RunConfig, data: ds.EncodedDataset | None = None,
                selected: dict[str, GAResult] | None = None) -> list[dict]:
    """Standalone (all features) vs. GA-wrapper metrics per model kind, on shared folds."""
    t0 = time.perf_counter()
    if data is None:
        data, _, _ = load_dataset(cfg)
    selected = dict(selected or {})
    plan = make_folds(data.n_samples, cfg.folds, cfg.seed)
    rows = []
    for kind in cfg.compare_models:
        result = selected.get(kind) or _select(cfg, data, kind)
        standalone = cross_validate(data, np.ones(data.n_features, bool), result.spec, plan,
                                    cfg.strict_scaling)
        wrapper = result.best.fitness
        rows.append({
            "model": kind,
            "wrapper": wrapper.to_dict(),
            "standalone": standalone.to_dict(),
            "wrapper_features": [n for n, b in zip(data.feature_names, result.best.mask) if b],
        })
    out = _out(cfg)
    _write_json(out / "comparison.json", {"config": cfg.to_dict(), "rows": rows})
    with (out / "comparison.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "wrapper_mse", "standalone_mse", "wrapper_rmse",
                    "standalone_rmse", "wrapper_mae", "standalone_mae"])
        for r in rows:
            w.writerow([r["model"]] + [repr(r[arm][k]) for k in ("mse", "rmse", "mae")
                                        for arm in ("wrapper", "standalone")])
    _write_config(cfg)
    _Timer(cfg).record("compare", time.perf_counter() - t0)
    return rows


def cmd_report(cfg: RunConfig) -> dict:
    """Run the whole pipeline and write ``report.json``."""
    data, prep = cmd_ingest(cfg)
    result = cmd_select(cfg, data)
    explained = []
    for k in range(1, len(result.top) + 1):
        e = cmd_explain(cfg, k, data)
        explained.append({
            "subset": k,
            "ranking": [{"feature": f, "mean_abs_shap": s} for f, s in e["ranking"]],
            "spec_importance": e["spec_importance"].to_dict(),
        })
    rows = cmd_compare(cfg, data, {result.spec.kind: result})
    report = {
        "config": cfg.to_dict(),
        "preprocessing": prep,
        "model": result.spec.to_dict(),
        "subsets": [_subset_record(data, ind) for ind in result.top],
        "progress": result.history,
        "explanations": explained,
        "comparison": rows,
    }
    _write_json(_out(cfg) / "report.json", report)
    return report
