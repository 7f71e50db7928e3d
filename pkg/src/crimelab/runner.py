"""Config-driven experiments: ingest, fold, fit, evaluate, report."""

from __future__ import annotations

import contextlib
import csv
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from crimelab.config import RunConfig
from crimelab.errors import CrimeLabError, DataError, TrainingError
from crimelab.featsel import fit_selector
from crimelab.ingest import LEAKY_FEATURES, ingest_csv
from crimelab.metrics import (accuracy, confusion_matrix, mse_labels, paired_t_test, precision_recall_f1,
                              roc_all, write_roc_csv)
from crimelab.models import build_model, save_model
from crimelab.preprocess import (apply_minmax, fit_minmax, shuffle_rows, stratified_holdout_split,
                                 stratified_kfold_plan, stratified_subsample)
from crimelab.resample import resample
from crimelab.rng import derive_seed
from crimelab.table import FeatureTable

log = logging.getLogger(__name__)

REPORT_VERSION = 1
HOLDOUT_ID = 1_000

# seed stream keys under the master seed
_S_SUBSAMPLE, _S_SHUFFLE, _S_FOLDS, _S_HOLDOUT, _S_SAMPLER, _S_MODEL, _S_PRESAMPLE = range(1, 8)


@contextlib.contextmanager
def stage(name: str):
    """Prefix errors raised inside the block with the pipeline stage."""
    try:
        yield
    except CrimeLabError as exc:
        raise type(exc)(f"[{name}] {exc}") from exc
    except OSError as exc:
        raise DataError(f"[{name}] {exc}") from exc
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise TrainingError(f"[{name}] {exc}") from exc


def load_table(cfg: RunConfig) -> FeatureTable:
    """Dataset named by ``cfg`` with leak columns and subsampling applied (not shuffled)."""
    path = Path(cfg.dataset)
    with stage("ingest"):
        if path.suffix == ".npz":
            table = FeatureTable.load_npz(path)
        else:
            table = ingest_csv(path, cfg.cleaning)
        if table.n_rows == 0:
            raise DataError(f"{path} produced no usable rows")
    if cfg.exclude_leaky_features:
        table = table.drop_columns([c for c in LEAKY_FEATURES if c in table.feature_names])
    if cfg.subsample is not None and cfg.subsample < table.n_rows:
        with stage("subsample"):
            table = table.take(stratified_subsample(table, cfg.subsample, derive_seed(cfg.seed, _S_SUBSAMPLE)))
    return table


@dataclass
class FoldOutcome:
    fold: int
    test_indices: np.ndarray
    y_true: np.ndarray
    y_pred: np.ndarray
    scores: np.ndarray
    selected: list
    n_fit_rows: int
    audit: dict
    seconds: float = 0.0


@dataclass
class FittedPipeline:
    """Everything needed to score new rows: normalization, column selection and model."""

    normalization: object
    selected: np.ndarray
    model: object
    n_fit_rows: int
    feature_names: list = field(default_factory=list)

    def transform(self, X) -> np.ndarray:
        return apply_minmax(np.asarray(X, dtype=np.float64), self.normalization)[:, self.selected]

    def predict(self, X):
        return self.model.predict(self.transform(X))

    def summary(self) -> dict:
        return {"model": self.model.summary(), "selected_features": list(self.feature_names)}


def fit_pipeline(cfg: RunConfig, X, y, n_classes: int, unit: int, presampled: bool = False,
                 feature_names=()) -> FittedPipeline:
    """min-max on the given rows, then resample, select columns and fit the model."""
    with stage("normalize"):
        norm = fit_minmax(X)
        Xn = apply_minmax(X, norm)
    yr = y
    if not presampled:
        with stage("resample"):
            spec = replace(cfg.sampler, seed=derive_seed(cfg.seed, _S_SAMPLER, unit))
            Xn, yr = resample(spec, Xn, y)
    with stage("feature_select"):
        selected = fit_selector(cfg.feature_selector, Xn, yr)
    with stage("fit"):
        model = build_model(cfg.model.kind, cfg.model.params, derive_seed(cfg.seed, _S_MODEL, unit))
        model.fit(Xn[:, selected], yr, n_classes)
    return FittedPipeline(norm, selected, model, int(yr.size), [feature_names[i] for i in selected]
                          if len(feature_names) else [])


def _audit(train_idx, test_idx, n_rows) -> dict:
    overlap = np.intersect1d(train_idx, test_idx).size
    if overlap:
        raise TrainingError(f"{overlap} evaluation rows are also in the training rows")
    if np.unique(test_idx).size != test_idx.size:
        raise TrainingError("evaluation rows repeat")
    return {"n_train": int(train_idx.size), "n_test": int(test_idx.size), "overlap": 0,
            "covers_all_rows": bool(train_idx.size + test_idx.size == n_rows)}


def _run_unit(cfg, X, y, n_classes, train_idx, test_idx, unit, presampled, names) -> FoldOutcome:
    t0 = time.perf_counter()
    audit = _audit(train_idx, test_idx, y.size) if not presampled else {
        "n_train": int(train_idx.size), "n_test": int(test_idx.size), "overlap": "not audited (presampled)"}
    pipe = fit_pipeline(cfg, X[train_idx], y[train_idx], n_classes, unit, presampled, names)
    with stage("evaluate"):
        Xt = pipe.transform(X[test_idx])
        pred = pipe.model.predict(Xt)
        scores = pipe.model.roc_scores(Xt)
    return FoldOutcome(unit, test_idx, y[test_idx], pred, scores, pipe.feature_names, pipe.n_fit_rows, audit,
                       time.perf_counter() - t0)


def _summarize(y_true, y_pred, scores, table: FeatureTable, out_dir, prefix) -> dict:
    K = table.n_classes
    cm = confusion_matrix(y_true, y_pred, K, table.class_names)
    prf = precision_recall_f1(cm)
    curves = roc_all(y_true, scores, K)
    if out_dir is not None:
        cm.to_csv(out_dir / f"{prefix}_confusion.csv")
        prf.to_csv(out_dir / f"{prefix}_prf.csv")
        write_roc_csv(curves, out_dir / f"{prefix}_roc.csv", table.class_names)
    return {
        "accuracy": cm.accuracy(),
        "mse": mse_labels(y_true, y_pred),
        "confusion_matrix": cm.to_dict(),
        "prf": prf.to_dict(),
        "auc": {table.class_names[c]: curves[c].auc for c in sorted(curves)},
    }


def _presample(cfg, X, y):
    spec = replace(cfg.sampler, seed=derive_seed(cfg.seed, _S_PRESAMPLE))
    with stage("resample"):
        return resample(spec, X, y)


def _header_notes(cfg: RunConfig) -> list[str]:
    notes = [
        f"holdout test_fraction={cfg.test_fraction}; train share is 1 - test_fraction "
        f"= {1 - cfg.test_fraction:.2f}",
        f"missing values: policy={cfg.cleaning.missing_row_action}, sentinel={cfg.cleaning.sentinel_value}",
        "mse is computed on integer class codes (lexicographic category order)",
        "min-max, resampling and feature selection are refit on training rows of every fold",
    ]
    if cfg.legacy_presample:
        notes.append("legacy_presample: resampling ran before splitting, so evaluation rows may leak into training")
    return notes


def run_experiment(cfg: RunConfig, threads: int = 1, out_dir=None) -> dict:
    """Run the configured protocol and return the report dictionary.

    When ``out_dir`` (or ``cfg.output_dir``) is set, writes ``report.json``,
    ``timings.json`` and CSV tables there.  The report holds no timings, so it
    is byte-identical across runs and thread counts.
    """
    out = Path(out_dir or cfg.output_dir) if (out_dir or cfg.output_dir) else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    t_start = time.perf_counter()
    table = load_table(cfg)
    with stage("shuffle"):
        table = shuffle_rows(table, derive_seed(cfg.seed, _S_SHUFFLE))
    X = np.asarray(table.matrix)
    y = np.asarray(table.labels)
    K = table.n_classes
    names = table.feature_names
    presampled = cfg.legacy_presample and cfg.sampler.kind != "none"
    if presampled:
        X, y = _presample(cfg, X, y)

    report = {
        "format_version": REPORT_VERSION,
        "seed": cfg.seed,
        # output_dir is left out so relocating a run does not change its report
        "config": {k: v for k, v in cfg.to_dict().items() if k != "output_dir"},
        "notes": _header_notes(cfg),
        "dataset": {
            "n_rows": int(table.n_rows), "n_rows_evaluated": int(y.size), "feature_names": names,
            "class_names": list(table.class_names),
            "class_counts": np.bincount(table.labels, minlength=K).tolist(),
            "ingest_counts": dict(sorted(table.counts.items())),
        },
    }
    timings = {"load_seconds": time.perf_counter() - t_start}

    if cfg.protocol in ("cv10", "both"):
        with stage("split"):
            plan = stratified_kfold_plan(y, cfg.folds, derive_seed(cfg.seed, _S_FOLDS))
        units = list(plan.folds())

        def work(unit):
            f, tr, te = unit
            return _run_unit(cfg, X, y, K, tr, te, f, presampled, names)

        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                outcomes = list(pool.map(work, units))
        else:
            outcomes = [work(u) for u in units]
        y_true = np.concatenate([o.y_true for o in outcomes])
        y_pred = np.concatenate([o.y_pred for o in outcomes])
        scores = np.vstack([o.scores for o in outcomes])
        fold_acc = [accuracy(o.y_true, o.y_pred) for o in outcomes]
        cv = _summarize(y_true, y_pred, scores, table, out, "cv10")
        cv.update(
            fold_accuracies=fold_acc,
            mean_fold_accuracy=float(np.mean(fold_acc)),
            std_fold_accuracy=float(np.std(fold_acc, ddof=1)) if len(fold_acc) > 1 else 0.0,
            folds=cfg.folds,
            selected_features=[o.selected for o in outcomes],
            fit_rows=[o.n_fit_rows for o in outcomes],
            audit=[o.audit for o in outcomes],
        )
        report["cv10"] = cv
        timings["cv10_fold_seconds"] = [o.seconds for o in outcomes]
        if out is not None:
            _write_fold_table(out / "cv10_folds.csv", fold_acc)

    if cfg.protocol in ("holdout", "both"):
        with stage("split"):
            split = stratified_holdout_split(y, cfg.test_fraction, derive_seed(cfg.seed, _S_HOLDOUT))
        o = _run_unit(cfg, X, y, K, split.train_indices, split.test_indices, HOLDOUT_ID, presampled, names)
        ho = _summarize(o.y_true, o.y_pred, o.scores, table, out, "holdout")
        ho.update(selected_features=o.selected, fit_rows=o.n_fit_rows, audit=o.audit)
        report["holdout"] = ho
        timings["holdout_seconds"] = o.seconds

    timings["total_seconds"] = time.perf_counter() - t_start
    if out is not None:
        (out / "report.json").write_text(report_json(report), encoding="utf-8")
        (out / "timings.json").write_text(json.dumps(timings, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return report


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write_fold_table(path, fold_acc) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fold", "accuracy"])
        for i, a in enumerate(fold_acc, start=1):
            w.writerow([i, repr(a)])
        w.writerow(["accuracy", repr(float(np.mean(fold_acc)))])


def train_final(cfg: RunConfig, out_dir) -> Path:
    """Fit the configured pipeline on every row and save it."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table = load_table(cfg)
    with stage("shuffle"):
        table = shuffle_rows(table, derive_seed(cfg.seed, _S_SHUFFLE))
    pipe = fit_pipeline(cfg, np.asarray(table.matrix), np.asarray(table.labels), table.n_classes, 0,
                        feature_names=table.feature_names)
    meta = {"seed": cfg.seed, "config": cfg.to_dict(), "normalization": pipe.normalization.to_dict(),
            "selected_features": pipe.feature_names, "class_names": list(table.class_names),
            "fit_rows": pipe.n_fit_rows}
    return save_model(pipe, out / "model.bin", meta)


# --- run comparison ----------------------------------------------------------

COMPARE_FIELDS = ("model_a", "seed_a", "model_b", "seed_b", "folds", "t_statistic", "p_value",
                  "degrees_of_freedom", "mean_difference", "decision", "config_a", "config_b")


def _as_report(r) -> dict:
    if isinstance(r, dict):
        return r
    return json.loads(Path(r).read_text(encoding="utf-8"))


def compare_runs(report_a, report_b, out_csv=None):
    """Paired t-test on the cv fold accuracies of two reports."""
    a, b = _as_report(report_a), _as_report(report_b)
    try:
        fa = a["cv10"]["fold_accuracies"]
        fb = b["cv10"]["fold_accuracies"]
    except (KeyError, TypeError):
        raise ValueError("both reports need cv10 fold accuracies") from None
    if len(fa) != len(fb):
        raise ValueError(f"fold counts differ: {len(fa)} vs {len(fb)}")
    result = paired_t_test(fa, fb)
    if out_csv is not None:
        ca, cb = a.get("config", {}), b.get("config", {})
        row = {
            "model_a": ca.get("model", {}).get("kind", ""), "seed_a": a.get("seed", ""),
            "model_b": cb.get("model", {}).get("kind", ""), "seed_b": b.get("seed", ""),
            "folds": len(fa), **result.to_dict(),
            "config_a": json.dumps(ca, sort_keys=True), "config_b": json.dumps(cb, sort_keys=True),
        }
        with open(out_csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, COMPARE_FIELDS, lineterminator="\n")
            w.writeheader()
            w.writerow(row)
    return result
