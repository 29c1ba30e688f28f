"""The three experiment suites and their file outputs.

Each suite is computed in memory as an :class:`EvaluationReport` plus a
mapping of file name to text; :func:`write_outputs` then writes the files
and a manifest.  Fit times live only in ``timings_<suite>.json`` so that
every other output is a pure function of the configuration and data.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import data as D
from . import metrics as M
from .boosting import (BoostConfig, fit_gradient_boosting_classifier, fit_gradient_boosting_regressor,
                       fit_ordered_boosting, fit_second_order_boosting)
from .config import RunConfig
from .ensembles import CLASSIFICATION, REGRESSION, ForestConfig, fit_adaboost, fit_extra_trees, fit_random_forest
from .errors import ConfigError, DataError, UnsupportedOperationError
from .linear import KNNClassifier, LogisticParams, fit_logistic, fit_sgd_classifier
from .physics import PhysicsSpec, PinnTrainConfig, response_surface, train_pinn
from .svg import render_svg
from .svm import SvmParams, fit_svc, fit_svr
from .tree import fit_cart_classifier, fit_cart_regressor

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
REPORT_SCHEMA_PATH = Path(__file__).resolve().parent / "schemas" / "report.schema.json"
PREDICTED_TEMPERATURE = "Predicted peak temperature (degree Celsius)"

REGRESSION_ROWS = (
    ("Support Vector Regression", "svr"),
    ("Decision Tree", "decision_tree"),
    ("Random Forest", "random_forest"),
    ("Second-Order Boosting", "second_order_boosting"),
    ("Ordered Boosting", "ordered_boosting"),
    ("AdaBoost", "adaboost"),
    ("Extra Trees", "extra_trees"),
    ("Gradient Boosting", "gradient_boosting"),
)
PINN_ROWS = (
    ("Transport PINN", "transport"),
    ("Wave PINN", "wave"),
    ("Heat PINN", "heat"),
    ("Schrodinger PINN", "schrodinger"),
)
CLASSIFICATION_ROWS = (
    ("Logistic Regression", "logistic"),
    ("K-Nearest Neighbors", "knn"),
    ("Support Vector Classifier", "svc"),
    ("Stochastic Gradient Descent", "sgd"),
    ("Decision Tree", "decision_tree"),
    ("Random Forest", "random_forest"),
    ("AdaBoost", "adaboost"),
    ("Gradient Boosting", "gradient_boosting"),
    ("Stochastic Gradient Boosting", "stochastic_gradient_boosting"),
)
CSV_COLUMNS = {
    "regress": ("algorithm", "mse", "mae", "rmse", "r2", "train_mse"),
    "pinn": ("algorithm", "rmse", "mae", "mse", "r2", "initial_loss", "final_loss", "smoothed_final_loss"),
    "classify": ("algorithm", "train_accuracy", "test_accuracy", "f1", "roc_auc", "tn", "fp", "fn", "tp"),
}


@dataclass
class ReportRow:
    algorithm: str
    slug: str
    metrics: dict
    seconds: float

    def to_dict(self):
        return {"algorithm": self.algorithm, "slug": self.slug, "metrics": self.metrics}


@dataclass
class EvaluationReport:
    suite: str
    fingerprint: str
    rows: list
    context: dict = field(default_factory=dict)

    def to_dict(self):
        return {"schema_version": SCHEMA_VERSION, "suite": self.suite, "config_fingerprint": self.fingerprint,
                **self.context, "rows": [r.to_dict() for r in self.rows]}

    def timings(self):
        return {"suite": self.suite, "unit": "seconds",
                "fit_seconds": {r.slug: round(r.seconds, 4) for r in self.rows}}

    def csv_text(self):
        cols = CSV_COLUMNS[self.suite]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in self.rows:
            flat = dict(r.metrics)
            flat.update(flat.pop("confusion", {}) or {})
            w.writerow([r.algorithm] + [_cell(flat.get(c)) for c in cols[1:]])
        return buf.getvalue()


@dataclass
class SuiteResult:
    report: EvaluationReport
    files: dict  # file name -> text


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


def _run_all(jobs, parallel):
    """Run ``(key, thunk)`` jobs; results come back in job order."""
    if parallel and len(jobs) > 1:
        with ThreadPoolExecutor() as pool:
            futures = [pool.submit(_timed, fn) for _, fn in jobs]
            return [f.result() for f in futures]
    return [_timed(fn) for _, fn in jobs]


def _load(cfg: RunConfig, suite: str) -> D.Dataset:
    path = cfg.data_path(suite)
    if not path.is_file():
        raise ConfigError(f"data file {str(path)!r} does not exist", "$.data")
    return D.load_csv(path)


def _split(cfg: RunConfig, ds: D.Dataset):
    return D.train_test_split(ds, D.SplitSpec(cfg["split"]["train_fraction"], cfg.split_seed))


def _correlation_plot(ds: D.Dataset, suite: str) -> dict:
    cm = D.pearson_correlation_matrix(ds)
    labels = [D.SHORT_NAMES.get(lab, str(lab)) for lab in cm.labels]
    svg = render_svg("correlation_heatmap", {"values": cm.values, "labels": labels,
                                             "title": f"Pearson correlation ({suite} data)"})
    return {f"plot_correlation_heatmap_{suite}_dataset.svg": svg}


def _importance_plot(model, features, suite, slug, name) -> dict:
    try:
        imp = model.feature_importances()
    except UnsupportedOperationError:
        return {}
    if not np.any(imp > 0):
        return {}
    labels = [D.SHORT_NAMES.get(f, f) for f in features]
    svg = render_svg("feature_importance_bars", {"values": imp, "labels": labels,
                                                 "title": f"{name}: feature importance"})
    return {f"plot_feature_importance_bars_{suite}_{slug}.svg": svg}


def _model_file(suite, slug, model_dict, features, scaler=None) -> dict:
    payload = {"suite": suite, "name": slug, "features": list(features), "model": model_dict,
               "input_scaler": None if scaler is None else {"mean": scaler.mean.tolist(), "std": scaler.std.tolist()}}
    return {f"model_{suite}_{slug}.json": dumps(payload)}


def _finish(suite, cfg, rows, files, context) -> SuiteResult:
    report = EvaluationReport(suite, cfg.fingerprint, rows, context)
    files[f"report_{suite}.json"] = dumps(report.to_dict())
    files[f"report_{suite}.csv"] = report.csv_text()
    files[f"timings_{suite}.json"] = dumps(report.timings())
    return SuiteResult(report, files)


# regression ----------------------------------------------------------------

def _regression_jobs(cfg, Xtr, Xs, ytr, names):
    p = cfg["regression"]
    seed = cfg.seed

    def forest(key):
        q = p[key]
        return ForestConfig(q["n_trees"], q["max_depth"], q["min_samples_leaf"], q["feature_subset_size"],
                            q["bootstrap"], seed)

    so, ob, gb = p["second_order_boosting"], p["ordered_boosting"], p["gradient_boosting"]
    jobs = {
        "svr": lambda: fit_svr(Xs, ytr, SvmParams(**p["svr"])),
        "decision_tree": lambda: fit_cart_regressor(Xtr, ytr, feature_names=names, **p["decision_tree"]),
        "random_forest": lambda: fit_random_forest(Xtr, ytr, forest("random_forest"), REGRESSION, names),
        "second_order_boosting": lambda: fit_second_order_boosting(Xtr, ytr, BoostConfig(
            n_stages=so["n_stages"], learning_rate=so["learning_rate"], max_depth=so["max_depth"],
            min_samples_leaf=so["min_samples_leaf"], lambda_l2=so["lambda_l2"], gamma=so["gamma"], seed=seed), names),
        "ordered_boosting": lambda: fit_ordered_boosting(Xtr, ytr, BoostConfig(
            n_stages=ob["n_stages"], learning_rate=ob["learning_rate"], max_depth=ob["max_depth"],
            lambda_l2=ob["lambda_l2"], n_permutations=ob["n_permutations"], seed=seed), names),
        "adaboost": lambda: fit_adaboost(Xtr, ytr, p["adaboost"]["n_stages"], p["adaboost"]["max_depth"],
                                         REGRESSION, feature_names=names),
        "extra_trees": lambda: fit_extra_trees(Xtr, ytr, forest("extra_trees"), REGRESSION, names),
        "gradient_boosting": lambda: fit_gradient_boosting_regressor(Xtr, ytr, BoostConfig(
            n_stages=gb["n_stages"], learning_rate=gb["learning_rate"], max_depth=gb["max_depth"],
            min_samples_leaf=gb["min_samples_leaf"], subsample=gb["subsample"], seed=seed), names),
    }
    return [(slug, jobs[slug]) for _, slug in REGRESSION_ROWS]


def run_regression_suite(cfg: RunConfig, parallel=False) -> SuiteResult:
    """Fit the eight regressors on one split; score on the held-out rows."""
    ds = _load(cfg, "regress")
    if ds.target_temperature is None:
        raise DataError("the regression suite needs the peak temperature column")
    features = tuple(cfg["features"]["regression"])
    train, test = _split(cfg, ds.select(features))
    scaler = D.fit_array_scaler(train.X, features)
    Xtr, Xte = train.X, test.X
    Xs_tr, Xs_te = scaler.transform(Xtr), scaler.transform(Xte)
    ytr, yte = train.target_temperature, test.target_temperature

    results = _run_all(_regression_jobs(cfg, Xtr, Xs_tr, ytr, features), parallel)
    rows, files = [], dict(_correlation_plot(ds, "regress"))
    for (name, slug), (model, seconds) in zip(REGRESSION_ROWS, results):
        scaled = slug == "svr"
        pred = model.predict(Xs_te if scaled else Xte)
        fit = model.predict(Xs_tr if scaled else Xtr)
        m = M.regression_metrics(yte, pred)
        metrics = m.to_dict()
        metrics["train_mse"] = M.regression_metrics(ytr, fit).mse
        rows.append(ReportRow(name, slug, metrics, seconds))
        files.update(_model_file("regress", slug, model.to_dict(), features, scaler if scaled else None))
        tag = f"regress_{slug}"
        files[f"plot_actual_vs_predicted_{tag}.svg"] = render_svg(
            "actual_vs_predicted", {"actual": yte, "predicted": pred, "title": f"{name}: actual vs predicted",
                                    "xlabel": "Actual peak temperature (C)", "ylabel": "Predicted peak temperature (C)"})
        series = M.residual_series(yte, pred)
        files[f"plot_residual_{tag}.svg"] = render_svg(
            "residual", {"predicted": [s[0] for s in series], "residual": [s[1] for s in series],
                         "title": f"{name}: residuals"})
        if len(yte) >= 3:
            files[f"plot_qq_{tag}.svg"] = render_svg(
                "qq", {"points": M.qq_points([s[1] for s in series]), "title": f"{name}: normal Q-Q"})
        files.update(_importance_plot(model, features, "regress", slug, name))
    context = {"features": list(features), "target": D.PEAK_TEMPERATURE, "n_train": train.n_samples,
               "n_test": test.n_samples}
    return _finish("regress", cfg, rows, files, context)


# physics-informed ------------------------------------------------------------

def run_pinn_suite(cfg: RunConfig, parallel=False) -> SuiteResult:
    """Train the four PDE-regularised networks on one split."""
    ds = _load(cfg, "pinn")
    if ds.target_temperature is None:
        raise DataError("the physics suite needs the peak temperature column")
    features = tuple(cfg["features"]["regression"])
    for name in (D.RR, D.TS):
        if name not in features:
            raise DataError(f"the physics suite needs {name!r} among the regression features")
    train, test = _split(cfg, ds.select(features))
    p = cfg["pinn"]
    tcfg = PinnTrainConfig(p["epochs"], p["learning_rate"], p["physics_weight"], cfg.seed, tuple(p["hidden"]),
                           features)

    def job(eq):
        spec = PhysicsSpec(eq, p["c"], p["k"], p["hbar"], p["mass"], collocation=p["collocation"],
                           grid_size=p["grid_size"], textbook_wave=p["textbook_wave"])
        return lambda: train_pinn(train, test, spec, tcfg)

    results = _run_all([(slug, job(slug)) for _, slug in PINN_ROWS], parallel)
    rows, files = [], {}
    for (name, slug), (res, _) in zip(PINN_ROWS, results):
        model = res.model
        pred = model.predict(test.X)
        reg = M.regression_metrics(test.target_temperature, pred)
        totals = [h[3] for h in res.history]
        surf = response_surface(model, p["surface_grid"])
        metrics = {"rmse": res.test_rmse, "mae": res.test_mae, "mse": reg.mse, "r2": reg.r2,
                   "r2_undefined": reg.r2_undefined, "n": reg.n, "initial_loss": totals[0],
                   "final_loss": res.final.total, "final_physics_loss": res.final.physics,
                   "final_data_loss": res.final.data, "smoothed_final_loss": float(np.mean(totals[-10:])),
                   "epochs": len(res.history), "surface_roughness": surf.roughness}
        rows.append(ReportRow(name, slug, metrics, res.seconds))
        files.update(_model_file("pinn", slug, model.to_dict(), features))
        files[f"loss_pinn_{slug}.csv"] = _table_csv(("epoch", "physics", "data", "total"), res.history)
        grid_rows = [(float(xv), float(tv), float(surf.grid[i, j]))
                     for i, xv in enumerate(surf.x_values) for j, tv in enumerate(surf.t_values)]
        files[f"surface_pinn_{slug}.csv"] = _table_csv((D.RR, D.TS, PREDICTED_TEMPERATURE), grid_rows)
        plot = {"grid": surf.grid, "x": surf.x_values, "y": surf.t_values, "xlabel": "Rotational rate (RPM)",
                "ylabel": "Travel speed (mm/min)"}
        files[f"plot_contour_pinn_{slug}.svg"] = render_svg("contour", dict(plot, title=f"{name}: response contour"))
        files[f"plot_surface_isometric_pinn_{slug}.svg"] = render_svg(
            "surface_isometric", dict(plot, title=f"{name}: response surface"))
        files[f"plot_actual_vs_predicted_pinn_{slug}.svg"] = render_svg(
            "actual_vs_predicted", {"actual": test.target_temperature, "predicted": pred,
                                    "title": f"{name}: actual vs predicted"})
    context = {"features": list(features), "target": D.PEAK_TEMPERATURE, "n_train": train.n_samples,
               "n_test": test.n_samples, "coordinates": {"x": D.RR, "t": D.TS}}
    return _finish("pinn", cfg, rows, files, context)


# classification ------------------------------------------------------------

def _classification_jobs(cfg, Xtr, Xs, ytr, names):
    p = cfg["classification"]
    seed = cfg.seed
    rf = p["random_forest"]
    gb, sgb = p["gradient_boosting"], p["stochastic_gradient_boosting"]

    def boost(q, subsample=1.0):
        return BoostConfig(n_stages=q["n_stages"], learning_rate=q["learning_rate"], max_depth=q["max_depth"],
                           min_samples_leaf=q["min_samples_leaf"], subsample=subsample, seed=seed)

    jobs = {
        "logistic": lambda: fit_logistic(Xs, ytr, LogisticParams(**p["logistic"])),
        "knn": lambda: KNNClassifier(Xs, ytr, p["knn"]["k"]),
        "svc": lambda: fit_svc(Xs, ytr, SvmParams(**p["svc"])),
        "sgd": lambda: fit_sgd_classifier(Xs, ytr, p["sgd"]["learning_rate"], p["sgd"]["n_epochs"], seed),
        "decision_tree": lambda: fit_cart_classifier(Xtr, ytr, feature_names=names, **p["decision_tree"]),
        "random_forest": lambda: fit_random_forest(Xtr, ytr, ForestConfig(
            rf["n_trees"], rf["max_depth"], rf["min_samples_leaf"], rf["feature_subset_size"], rf["bootstrap"], seed),
            CLASSIFICATION, names),
        "adaboost": lambda: fit_adaboost(Xtr, ytr, p["adaboost"]["n_stages"], p["adaboost"]["max_depth"],
                                         CLASSIFICATION, feature_names=names),
        "gradient_boosting": lambda: fit_gradient_boosting_classifier(Xtr, ytr, boost(gb), names),
        "stochastic_gradient_boosting": lambda: fit_gradient_boosting_classifier(
            Xtr, ytr, boost(sgb, sgb["subsample"]), names),
    }
    return [(slug, jobs[slug]) for _, slug in CLASSIFICATION_ROWS]


SCALED_CLASSIFIERS = frozenset({"logistic", "knn", "svc", "sgd"})


def run_classification_suite(cfg: RunConfig, parallel=False) -> SuiteResult:
    """Fit the nine classifiers of deposition quality."""
    ds = _load(cfg, "classify")
    if ds.target_quality is None:
        raise DataError("the classification suite needs the deposition quality column")
    features = tuple(cfg["features"]["classification"])
    train, test = _split(cfg, ds.select(features))
    if np.unique(train.target_quality).size < 2:
        raise DataError("the training split contains a single quality class")
    scaler = D.fit_array_scaler(train.X, features)
    Xtr, Xte = train.X, test.X
    Xs_tr, Xs_te = scaler.transform(Xtr), scaler.transform(Xte)
    ytr, yte = train.target_quality, test.target_quality
    both = np.unique(yte).size == 2

    results = _run_all(_classification_jobs(cfg, Xtr, Xs_tr, ytr, features), parallel)
    rows, files = [], dict(_correlation_plot(ds, "classify"))
    for (name, slug), (model, seconds) in zip(CLASSIFICATION_ROWS, results):
        scaled = slug in SCALED_CLASSIFIERS
        A_tr, A_te = (Xs_tr, Xs_te) if scaled else (Xtr, Xte)
        pred = model.predict(A_te)
        score = model.decision_score(A_te)
        cm = M.classification_metrics(yte, pred, score if both else None)
        metrics = cm.to_dict()
        metrics["test_accuracy"] = metrics.pop("accuracy")
        metrics["train_accuracy"] = M.classification_metrics(ytr, model.predict(A_tr)).accuracy
        rows.append(ReportRow(name, slug, metrics, seconds))
        files.update(_model_file("classify", slug, model.to_dict(), features, scaler if scaled else None))
        tag = f"classify_{slug}"
        tn, fp, fn, tp = cm.confusion
        files[f"plot_confusion_heatmap_{tag}.svg"] = render_svg(
            "confusion_heatmap", {"matrix": [[tn, fp], [fn, tp]], "title": f"{name}: confusion matrix"})
        if both:
            pts = M.roc_points(yte, score)
            files[f"roc_{tag}.csv"] = _table_csv(("fpr", "tpr"), pts)
            files[f"plot_roc_{tag}.svg"] = render_svg(
                "roc", {"points": pts, "auc": cm.roc_auc, "title": f"{name}: ROC"})
        files.update(_importance_plot(model, features, "classify", slug, name))
    context = {"features": list(features), "target": D.DEPOSITION_QUALITY, "n_train": train.n_samples,
               "n_test": test.n_samples, "dropped_features": [c for c in D.FEATURE_COLUMNS if c not in features]}
    return _finish("classify", cfg, rows, files, context)


def run_plots(cfg: RunConfig) -> dict:
    """Dataset-level plots (correlation heatmaps) for every configured input."""
    files = {}
    seen = set()
    for suite in cfg.suites:
        path = cfg.data_path(suite)
        if path in seen:
            continue
        seen.add(path)
        files.update(_correlation_plot(_load(cfg, suite), suite))
    return files


RUNNERS = {"regress": run_regression_suite, "pinn": run_pinn_suite, "classify": run_classification_suite}


# output --------------------------------------------------------------------

def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_outputs(out_dir, files: dict) -> Path:
    """Write every file plus ``manifest.json``; returns the manifest path.

    Timing files are listed without a hash since their content varies.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for name in sorted(files):
        with (out / name).open("w", encoding="utf-8", newline="\n") as fh:
            fh.write(files[name])
        volatile = name.startswith("timings_")
        entries.append({"path": name, "sha256": None if volatile else _sha256(files[name])})
    manifest = out / "manifest.json"
    manifest.write_text(dumps({"files": entries}), encoding="utf-8")
    verify_manifest(out)
    return manifest


def verify_manifest(out_dir) -> list:
    """Check every manifest entry exists and matches its hash."""
    out = Path(out_dir)
    listed = json.loads((out / "manifest.json").read_text(encoding="utf-8"))["files"]
    for entry in listed:
        path = out / entry["path"]
        if not path.is_file():
            raise DataError(f"manifest lists missing file {entry['path']}")
        if entry["sha256"] is not None and _sha256(path.read_text(encoding="utf-8")) != entry["sha256"]:
            raise DataError(f"manifest hash mismatch for {entry['path']}")
    return [e["path"] for e in listed]
