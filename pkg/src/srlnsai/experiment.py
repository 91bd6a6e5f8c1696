"""End-to-end comparison pipeline writing a deterministic report bundle.

Per replicate seed: load or synthesise data, label each target, make a
stratified holdout (plus folds of the train part), then for every model run
cross-validation with per-fold scaling, refit on the whole train part and
score the untouched test part. Explanations come from the first replicate.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .baselines.bayesnet import SparseDataWarning
from .config import ExperimentConfig, seed_table
from .dataset import (SRL_SCHEMA, Balance, DataError, LabelPolicy, LabelSpec, SchemaError,
                      StratificationError, discretize_label, fit_scaler, load_table, stratified_split,
                      synth_generate)
from .explain import model_artifacts, shap_artifacts
from .kbann import DivergenceError
from .baselines.mlp import DivergenceError as MlpDivergenceError
from .metrics import EvaluationError, compute_metrics
from .models import MODEL_INFO, TrainingError, fit_model
from .rules import RuleStructureError, RuleSyntaxError, load_rules, parse_rules, SRL_RULES_TEXT, validate_rules

log = logging.getLogger(__name__)

BUNDLE_VERSION = 1
METRIC_ROWS = (("AUC (%)", "auc"), ("Accuracy (%)", "accuracy"), ("Precision (%)", "precision"),
               ("Recall (%)", "recall"))


class ExperimentError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass(frozen=True)
class PreparedTarget:
    target: str
    threshold: float
    class_counts: tuple[int, int]
    x_raw: np.ndarray
    y: np.ndarray
    train: np.ndarray
    test: np.ndarray
    folds: tuple[tuple[int, ...], ...]


def _rules(cfg: ExperimentConfig):
    path = cfg["data"]["rules"]
    try:
        rules = load_rules(path) if path else parse_rules(SRL_RULES_TEXT)
        validate_rules(rules, SRL_SCHEMA)
    except (OSError, RuleSyntaxError, RuleStructureError) as exc:
        raise ExperimentError("data", f"rules: {exc}") from exc
    return rules


def load_data(cfg: ExperimentConfig, seed: int):
    d = cfg["data"]
    try:
        if d["source"] == "csv":
            return load_table(d["path"], SRL_SCHEMA)
        return synth_generate(SRL_SCHEMA, _rules(cfg), d["n"], Balance(d["balance"]), seed_table(seed)["synth"])
    except (OSError, SchemaError, DataError, ValueError) as exc:
        raise ExperimentError("data", str(exc)) from exc


def prepare(cfg: ExperimentConfig, table, seed: int, target: str) -> PreparedTarget:
    lab = cfg["label"]
    spec = LabelSpec(target, LabelPolicy(lab["policy"]), True, lab["quantile_method"], lab["threshold"])
    try:
        result = discretize_label(table, spec)
        plan = stratified_split(result.labels, cfg["split"]["test_fraction"], seed_table(seed)["split"],
                                cfg["split"]["n_folds"])
    except (DataError, StratificationError, ValueError) as exc:
        raise ExperimentError("data", f"{target}: {exc}") from exc
    return PreparedTarget(target, result.threshold, result.class_counts, table.matrix(), result.labels,
                          np.array(plan.train_indices), np.array(plan.test_indices), plan.folds)


def _scaled(x_raw, fit_rows, *apply_rows):
    scaler = fit_scaler(x_raw[fit_rows], SRL_SCHEMA.predictors)
    return [scaler.transform(x_raw[r]) for r in (fit_rows, *apply_rows)]


def run_model(task) -> dict:
    """CV, final fit, test metrics and (optionally) explanations for one model and target."""
    cfg_values, seed, prep, model_id, explain = task
    cfg = ExperimentConfig(cfg_values)
    seeds = seed_table(seed)
    names = SRL_SCHEMA.predictors
    rules = _rules(cfg) if model_id == "kbann" else None
    options = cfg[model_id]

    def fit(x, y):
        try:
            return fit_model(model_id, x, y, names, options, seeds[model_id], prep.target, rules)
        except (TrainingError, DivergenceError, MlpDivergenceError) as exc:
            raise ExperimentError("training", f"{model_id}/{prep.target}: {exc}") from exc

    def score(model, x, y, dataset):
        try:
            return compute_metrics(model.predict_proba(x), y, 0.5, model_id, dataset)
        except (EvaluationError, ValueError) as exc:
            raise ExperimentError("evaluation", f"{model_id}/{prep.target}: {exc}") from exc

    cv_rows = []
    fold_sets = [np.array(f) for f in prep.folds]
    for k, held in enumerate(fold_sets):
        inner = np.setdiff1d(prep.train, held)
        x_in, x_held = _scaled(prep.x_raw, inner, held)
        report = score(fit(x_in, prep.y[inner]), x_held, prep.y[held], f"fold{k}")
        cv_rows.append(report.to_dict())
    x_train, x_test = _scaled(prep.x_raw, prep.train, prep.test)
    model = fit(x_train, prep.y[prep.train])
    test = score(model, x_test, prep.y[prep.test], "test")
    files: dict[str, str] = {}
    if explain:
        ex = cfg["explain"]
        files.update(model_artifacts(model, ex["tau"], ex["top_k"]))
        if model_id in ex["shap_models"]:
            files.update(shap_artifacts(model, x_train, x_test, names, ex["shap_background"], ex["shap_rows"],
                                        ex["shap_samples"], seeds["shap"]))
    return {"seed": seed, "target": prep.target, "model": model_id, "cv": cv_rows,
            "test": test.to_dict(), "files": files}


# Bundle writing


def _pct(v: float) -> str:
    return str(int(math.floor(100 * v + 0.5)))


def _mean_report(reports: list[dict]) -> dict:
    def mean(get):
        vals = [get(r) for r in reports]
        vals = [v for v in vals if v is not None]
        return float(np.mean(vals)) if vals else None
    return {"auc": mean(lambda r: r["auc"]), "accuracy": mean(lambda r: r["accuracy"]),
            "precision": {c: mean(lambda r, c=c: r["precision"][c]) for c in ("0", "1")},
            "recall": {c: mean(lambda r, c=c: r["recall"][c]) for c in ("0", "1")}}


def _stamp_text(name: str, text: str, stamp: str) -> str:
    if name.endswith(".svg"):
        head, _, rest = text.partition("\n")
        return f"{head}\n<!-- {stamp} -->\n{rest}"
    if name.endswith(".json"):
        return json.dumps({"stamp": stamp, **json.loads(text)}, indent=1) + "\n"
    if name.endswith(".dot"):
        return f"// {stamp}\n{text}"
    return f"# {stamp}\n{text}"


def metrics_table(summary: dict, models, targets) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["family", "method", "metric"]
    for t in targets:
        header += [f"{t} Low", f"{t} High"]
    w.writerow(header)
    for m in models:
        info = MODEL_INFO[m]
        for label, key in METRIC_ROWS:
            row = [info.family, info.method, label]
            for t in targets:
                mean = summary[m][t]["mean"]
                if key in ("auc", "accuracy"):
                    row += [_pct(mean[key]) if mean[key] is not None else "", ""]
                else:
                    row += [_pct(mean[key]["0"]), _pct(mean[key]["1"])]
            w.writerow(row)
    return buf.getvalue()


def cv_table(results: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed", "target", "model", "fold", "auc", "accuracy", "precision_0", "precision_1",
                "recall_0", "recall_1"])
    for r in results:
        for k, c in enumerate(r["cv"]):
            auc = "" if c["auc"] is None else f"{c['auc']:.6f}"
            w.writerow([r["seed"], r["target"], r["model"], k, auc, f"{c['accuracy']:.6f}",
                        f"{c['precision']['0']:.6f}", f"{c['precision']['1']:.6f}",
                        f"{c['recall']['0']:.6f}", f"{c['recall']['1']:.6f}"])
    return buf.getvalue()


def run_experiment(cfg: ExperimentConfig, out_dir, jobs: int = 1) -> dict:
    """Run the comparison and write the bundle to ``out_dir``; returns the metrics summary."""
    out = Path(out_dir)
    seeds = cfg["experiment"]["seeds"]
    targets = cfg["label"]["targets"]
    models = cfg["models"]["include"]
    chash = cfg.hash()
    stamp = f"config_hash={chash} seeds={','.join(map(str, seeds))}"

    tasks, labels_info = [], []
    for r, seed in enumerate(seeds):
        table = load_data(cfg, seed)
        for target in targets:
            prep = prepare(cfg, table, seed, target)
            labels_info.append({"seed": seed, "target": target, "threshold": prep.threshold,
                                "class_counts": list(prep.class_counts),
                                "n_train": int(prep.train.size), "n_test": int(prep.test.size)})
            for m in models:
                tasks.append((cfg.values, seed, prep, m, r == 0))
    log.info("running %d model fits (%d seeds x %d targets x %d models)", len(tasks), len(seeds),
             len(targets), len(models))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SparseDataWarning)
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(run_model, tasks))
        else:
            results = [run_model(t) for t in tasks]

    summary: dict = {m: {t: {"replicates": []} for t in targets} for m in models}
    for res in results:
        summary[res["model"]][res["target"]]["replicates"].append({"seed": res["seed"], **res["test"]})
    for m in models:
        for t in targets:
            summary[m][t]["mean"] = _mean_report(summary[m][t]["replicates"])

    out.mkdir(parents=True, exist_ok=True)
    files = {
        "metrics.csv": metrics_table(summary, models, targets),
        "cv.csv": cv_table(results),
        "metrics.json": json.dumps({"labels": labels_info, "models": summary}, indent=1, sort_keys=True) + "\n",
    }
    for res in results:
        for name, text in res["files"].items():
            files[f"explanations/{res['target']}/{res['model']}/{name}"] = text
    lock = {"format_version": BUNDLE_VERSION, "version": __version__, "config_hash": chash,
            "config": cfg.canonical(), "seeds": {str(s): seed_table(s) for s in seeds}}
    for name, text in sorted(files.items()):
        path = out / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(_stamp_text(name, text, stamp), encoding="utf-8")
    (out / "config.lock.json").write_text(json.dumps(lock, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return summary
