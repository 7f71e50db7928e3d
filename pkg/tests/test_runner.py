from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from crimelab.cli import main
from crimelab.config import RunConfig
from crimelab.errors import DataError, TrainingError
from crimelab.ingest import ingest_csv
from crimelab.metrics import accuracy
from crimelab.models import load_model
from crimelab.runner import compare_runs, report_json, run_experiment, stage, train_final
from crimelab.synth import generate_synthetic

RF_BEFORE = [0.66, 0.66, 0.67, 0.66, 0.70, 0.69, 0.72, 0.74, 0.72, 0.71]
DT_BEFORE = [0.99] * 10


@pytest.fixture(scope="module")
def data300(tmp_path_factory):
    d = tmp_path_factory.mktemp("data")
    return generate_synthetic(d / "s300.csv", [200, 70, 30], spread=0.15, seed=1, vary_time=True)


def _cfg(path, **kw):
    raw = {"dataset": str(path), "model": {"kind": "knn"}}
    raw.update(kw)
    return RunConfig.from_dict(raw)


def test_structural_report(data300, tmp_path):
    rep = run_experiment(_cfg(data300), out_dir=tmp_path)
    cv = rep["cv10"]
    assert len(cv["fold_accuracies"]) == 10
    for key in ("accuracy", "mse", "confusion_matrix", "prf", "auc", "mean_fold_accuracy", "audit"):
        assert key in cv
    assert rep["dataset"]["class_counts"] == [200, 70, 30]
    assert all(a["overlap"] == 0 and a["covers_all_rows"] for a in cv["audit"])
    for f in ("report.json", "timings.json", "cv10_folds.csv", "cv10_confusion.csv", "cv10_prf.csv", "cv10_roc.csv"):
        assert (tmp_path / f).exists()
    rows = list(csv.reader((tmp_path / "cv10_folds.csv").open()))
    assert rows[0] == ["fold", "accuracy"] and len(rows) == 12 and rows[-1][0] == "accuracy"
    assert "seconds" not in (tmp_path / "report.json").read_text()


def test_report_accuracy_matches_confusion_matrix(data300):
    rep = run_experiment(_cfg(data300, protocol="both"))
    for section in ("cv10", "holdout"):
        counts = np.array(rep[section]["confusion_matrix"]["counts"])
        assert rep[section]["accuracy"] == int(np.trace(counts)) / int(counts.sum())
    assert rep["holdout"]["audit"]["n_test"] == pytest.approx(0.34 * 300, abs=1.5)


def test_report_deterministic_across_runs_and_threads(data300, tmp_path):
    cfg = _cfg(data300, sampler={"kind": "smote"}, model={"kind": "random_forest", "params": {"n_trees": 5}})
    a = run_experiment(cfg, threads=1, out_dir=tmp_path / "a")
    b = run_experiment(cfg, threads=4, out_dir=tmp_path / "b")
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()
    assert report_json(a) == report_json(b)


def test_sampling_changes_fit_rows_but_not_eval_rows(data300):
    none = run_experiment(_cfg(data300))
    over = run_experiment(_cfg(data300, sampler={"kind": "random_over"}))
    assert [a["n_test"] for a in none["cv10"]["audit"]] == [a["n_test"] for a in over["cv10"]["audit"]]
    assert all(o > n for o, n in zip(over["cv10"]["fit_rows"], none["cv10"]["fit_rows"]))


def test_leaky_exclusion_and_subsample(data300):
    rep = run_experiment(_cfg(data300, exclude_leaky_features=True, subsample=150))
    names = rep["dataset"]["feature_names"]
    assert "offense_code" not in names and "offense_type_id" not in names
    assert rep["dataset"]["n_rows"] == 150
    assert rep["dataset"]["class_counts"] == [100, 35, 15]


def test_feature_selection_recorded(data300):
    rep = run_experiment(_cfg(data300, feature_selector={"kind": "anova_k_best", "k": 2}))
    assert all(len(s) == 2 for s in rep["cv10"]["selected_features"])


def test_legacy_presample_note(data300):
    rep = run_experiment(_cfg(data300, sampler={"kind": "random_over"}, legacy_presample=True))
    assert any("legacy_presample" in n for n in rep["notes"])
    assert rep["dataset"]["n_rows_evaluated"] == 600


def test_stage_tags_errors(tmp_path):
    with pytest.raises(DataError, match=r"^\[ingest\]"):
        run_experiment(_cfg(tmp_path / "nope.csv"))
    with pytest.raises(TrainingError, match=r"^\[fit\]"):
        with stage("fit"):
            raise ValueError("boom")


def test_compare_self_and_columns(data300, tmp_path):
    rep = run_experiment(_cfg(data300))
    same = compare_runs(rep, rep)
    assert same.t_statistic == 0.0 and same.p_value == 1.0
    a = {"seed": 1, "config": {"model": {"kind": "decision_tree"}}, "cv10": {"fold_accuracies": DT_BEFORE}}
    b = {"seed": 2, "config": {"model": {"kind": "random_forest"}}, "cv10": {"fold_accuracies": RF_BEFORE}}
    (tmp_path / "a.json").write_text(json.dumps(a))
    r = compare_runs(tmp_path / "a.json", b, tmp_path / "cmp.csv")
    assert r.t_statistic == pytest.approx(31.9, abs=0.1)
    row = next(csv.DictReader((tmp_path / "cmp.csv").open()))
    assert row["model_a"] == "decision_tree" and row["seed_b"] == "2" and row["folds"] == "10"
    assert json.loads(row["config_b"]) == b["config"]
    with pytest.raises(ValueError):
        compare_runs(a, {"cv10": {"fold_accuracies": [0.5]}})
    with pytest.raises(ValueError):
        compare_runs(a, {})


def test_train_final_roundtrip(data300, tmp_path):
    path = train_final(_cfg(data300), tmp_path)
    model = load_model(path)
    meta = json.loads((tmp_path / "model.bin.json").read_text())
    assert meta["metadata"]["class_names"] == ["aggravated-assault", "all-other-crimes", "arson"]
    t = ingest_csv(data300)
    assert accuracy(t.labels, model.predict(t.matrix)) > 0.8


# --- cli ---------------------------------------------------------------------

def test_cli_end_to_end(tmp_path, capsys):
    data = tmp_path / "syn.csv"
    assert main(["synth", "--counts", "60", "30", "--seed", "2", "--vary-time", "--out", str(data)]) == 0
    assert main(["ingest", str(data), "--out", str(tmp_path / "t.npz")]) == 0
    assert main(["stats", str(tmp_path / "t.npz"), "--out", str(tmp_path / "stats")]) == 0
    assert (tmp_path / "stats" / "index.json").exists()
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dataset": "syn.csv", "model": {"kind": "decision_tree"}}))
    assert main(["evaluate", "--config", str(cfg), "--out", str(tmp_path / "r1")]) == 0
    assert main(["evaluate", "--config", str(cfg), "--seed", "3", "--threads", "2", "--out", str(tmp_path / "r2")]) == 0
    assert main(["compare", str(tmp_path / "r1" / "report.json"), str(tmp_path / "r2" / "report.json"),
                 "--out", str(tmp_path / "cmp.csv")]) == 0
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "m")]) == 0
    assert (tmp_path / "m" / "model.bin").exists()
    capsys.readouterr()


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["evaluate", "--config", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"dataset": "x.csv", "model": {"kind": "svm"}}))
    assert main(["train", "--config", str(bad)]) == 2
    nodata = tmp_path / "nodata.json"
    nodata.write_text(json.dumps({"dataset": "absent.csv", "model": {"kind": "knn"}}))
    assert main(["evaluate", "--config", str(nodata), "--out", str(tmp_path / "o")]) == 3
    assert main(["ingest", str(tmp_path / "absent.csv")]) == 3
    (tmp_path / "r.json").write_text("{}")
    assert main(["compare", str(tmp_path / "r.json"), str(tmp_path / "r.json")]) == 4
    err = capsys.readouterr().err
    assert "config error" in err and "data error" in err
