import csv
import json

import numpy as np
import pytest

from attrib_forge import pipeline
from attrib_forge.cli import main
from attrib_forge.config import OUT_ENV, ConfigError, RunConfig, load_config
from attrib_forge.dataset import SchemaError, from_arrays
from attrib_forge.genetic_search import GAConfig
from attrib_forge.synthetic import write_csv


def _files(root):
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file() and p.name != "timings.json"}


def test_ingest(run_config, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["ingest", "--config", str(run_config()), "--out", str(out)]) == 0
    prep = json.loads((out / "preprocessing.json").read_text())
    summary = json.loads((out / "dataset_summary.json").read_text())
    assert prep["config"]["seed"] == 11
    assert summary["rows"] == prep["rows_out"]
    assert "processor_gnrtn" in prep["dropped_columns"]
    assert (out / "run_config.ini").exists()
    assert json.loads(capsys.readouterr().out) == {k: v for k, v in prep.items() if k != "config"}


def test_ingest_clean_fixture_has_no_imputation(tmp_path):
    rows = [["A", str(i % 7), str(20 + i), f"{3 + (i % 3) * 0.5}"] for i in range(30)]
    write_csv(tmp_path / "clean.csv", ["brand", "ram", "ratings", "star_rating"], rows)
    cfg = RunConfig(input=str(tmp_path / "clean.csv"), out=str(tmp_path / "o"),
                    schema={"ratings": "rating_count", "star_rating": "star_rating"})
    data, prep = pipeline.cmd_ingest(cfg)
    assert data.n_samples == 30
    assert all(v == 0 for v in prep["imputed"].values())
    assert prep["dropped_columns"] == {}


def test_missing_target_column(tmp_path):
    write_csv(tmp_path / "bad.csv", ["brand", "ratings"], [["A", "20"], ["B", "30"]])
    cfg_path = tmp_path / "bad.cfg"
    cfg_path.write_text("[dataset]\ninput = bad.csv\n[schema]\nratings = rating_count\n"
                        "star_rating = star_rating\n")
    cfg = load_config(cfg_path, out=str(tmp_path / "o"))
    with pytest.raises(SchemaError):
        pipeline.cmd_ingest(cfg)
    assert main(["ingest", "--config", str(cfg_path), "--out", str(tmp_path / "o")]) == 2


def test_select_top1_and_rerun_identical(run_config, tmp_path):
    cfg_path = run_config()
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["select", "--config", str(cfg_path), "--topk", "1", "--out", str(out)]) == 0
    saved = json.loads((a / "subsets.json").read_text())
    assert len(saved["subsets"]) == 1
    assert saved["config"]["ga"]["top_k"] == 1
    assert (a / "subsets.json").read_bytes() == (b / "subsets.json").read_bytes()
    log = [json.loads(line) for line in (a / "progress.jsonl").read_text().splitlines()]
    assert [e["generation"] for e in log] == list(range(len(log)))


def test_explain_twice_identical_and_bad_index(run_config, tmp_path, capsys):
    cfg_path, out = run_config(), tmp_path / "out"
    args = ["--config", str(cfg_path), "--out", str(out)]
    assert main(["select", *args]) == 0
    assert main(["explain", *args, "--subset", "2"]) == 0
    first = _files(out / "explain_2")
    assert set(first) == {"shap_matrix.csv", "ranking.json", "spec_importance.json",
                          "beeswarm.csv", "beeswarm.svg"}
    assert main(["explain", *args, "--subset", "2"]) == 0
    assert _files(out / "explain_2") == first
    capsys.readouterr()
    assert main(["explain", *args, "--subset", "3"]) == 1
    assert "out of range" in capsys.readouterr().err


def test_explain_before_select_is_data_error(run_config, tmp_path):
    assert main(["explain", "--config", str(run_config()), "--out", str(tmp_path / "x")]) == 2


def test_shap_matrix_csv_efficiency(run_config, tmp_path):
    cfg = load_config(run_config(shapley={"mode": "exact"}), out=str(tmp_path / "out"))
    data, _ = pipeline.cmd_ingest(cfg)
    pipeline.cmd_select(cfg, data)
    res = pipeline.cmd_explain(cfg, 1, data)
    with (tmp_path / "out" / "explain_1" / "shap_matrix.csv").open() as fh:
        rows = list(csv.reader(fh))
    names = rows[0][1:-1]
    assert rows[0][0] == "row" and rows[0][-1] == "base_value"
    assert len(rows) == data.n_samples + 1
    assert names == list(res["shap"].feature_names)
    table = res["spec_importance"]
    for j, name in enumerate(names):
        assert sum(n for _, _, n in table.for_feature(name)) == data.n_samples
        assert sum(mean * n for _, mean, n in table.for_feature(name)) == pytest.approx(
            res["shap"].values[:, j].sum(), abs=1e-8)


def test_constant_target_gives_zero_spec_table(tmp_path):
    rows = [[("A", "B", "C")[i % 3], str(i % 5), "50", "4.0"] for i in range(40)]
    write_csv(tmp_path / "flat.csv", ["brand", "ram", "ratings", "star_rating"], rows)
    cfg = RunConfig(input=str(tmp_path / "flat.csv"), out=str(tmp_path / "o"), model="dtree",
                    schema={"ratings": "rating_count", "star_rating": "star_rating"},
                    ga=GAConfig(population=4, generations=2, top_k=1), folds=4)
    data, _ = pipeline.cmd_ingest(cfg)
    pipeline.cmd_select(cfg, data)
    res = pipeline.cmd_explain(cfg, 1, data)
    assert all(mean == 0.0 for mean, _ in res["spec_importance"].entries.values())
    saved = json.loads((tmp_path / "o" / "explain_1" / "spec_importance.json").read_text())
    assert all(e["mean_shap"] == 0.0 for es in saved["features"].values() for e in es)


def test_compare_single_model(run_config, tmp_path):
    cfg = load_config(run_config(compare={"models": "dt"}), out=str(tmp_path / "o"))
    rows = pipeline.cmd_compare(cfg)
    assert [r["model"] for r in rows] == ["dtree"]
    with (tmp_path / "o" / "comparison.csv").open() as fh:
        table = list(csv.reader(fh))
    assert len(table) == 2
    assert table[0][1:3] == ["wrapper_mse", "standalone_mse"]


def test_compare_noise_target(tmp_path):
    rng = np.random.default_rng(4)
    data = from_arrays(rng.random((120, 5)), rng.normal(size=120))
    cfg = RunConfig(input="unused.csv", out=str(tmp_path / "o"), folds=5,
                    ga=GAConfig(population=12, generations=5, top_k=1),
                    compare_models=("knn", "dtree"))
    for row in pipeline.cmd_compare(cfg, data):
        # the all-ones mask competes in the same archive, on the same folds
        assert row["wrapper"]["mae"] <= row["standalone"]["mae"] + 0.05


def test_report_and_exit_codes(run_config, tmp_path, capsys):
    out = tmp_path / "r"
    assert main(["report", "--config", str(run_config()), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert list(report) == ["config", "preprocessing", "model", "subsets", "progress",
                            "explanations", "comparison"]
    assert len(report["subsets"]) == 2
    assert [r["model"] for r in report["comparison"]] == ["knn", "dtree"]
    assert set(json.loads((out / "timings.json").read_text())) >= {"ingest", "select", "compare"}
    assert main(["bogus", "--config", "x"]) == 1
    assert main(["ingest", "--config", str(tmp_path / "missing.cfg")]) == 1
    assert main(["ingest"]) == 1


def test_env_var_output_dir(run_config, tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "from_env"))
    cfg = load_config(run_config())
    assert cfg.out == str(tmp_path / "from_env")
    assert load_config(run_config(), out="elsewhere").out == "elsewhere"
    monkeypatch.delenv(OUT_ENV)
    monkeypatch.chdir(tmp_path)
    assert load_config(run_config()).out == "out"


def test_config_round_trip(run_config, tmp_path):
    cfg = load_config(run_config(svr_tuning={"enabled": "true", "population": 6}),
                      model="svr", seed=5, generations=3)
    again_path = tmp_path / "again.cfg"
    again_path.write_text(cfg.to_ini())
    again = load_config(again_path)
    assert again.to_dict() == cfg.to_dict()


def test_config_errors(run_config, tmp_path):
    with pytest.raises(ConfigError):
        load_config(run_config(model={"kind": "xgboost"}))
    with pytest.raises(ConfigError):
        load_config(run_config(ga={"population": "many"}))
    with pytest.raises(ConfigError):
        load_config(run_config(shapley={"mode": "kernel"}))
    with pytest.raises(ConfigError):
        load_config(run_config(model={"depth": 3}))
