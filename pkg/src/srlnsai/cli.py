"""Command-line front end: ``srlnsai <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .baselines.mlp import DivergenceError as MlpDivergenceError
from .config import MODEL_IDS, ConfigError, ExperimentConfig, load_config, parse_config, seed_table
from .dataset import (SRL_SCHEMA, Balance, DataError, LabelPolicy, LabelSpec, SchemaError,
                      StratificationError, discretize_label, fit_scaler, load_table, stratified_split,
                      synth_generate)
from .experiment import ExperimentError, run_experiment
from .explain import model_artifacts, shap_artifacts
from .kbann import DivergenceError
from .metrics import EvaluationError, compute_metrics
from .models import TrainingError, fit_model
from .plots import bar_chart
from .rules import RuleStructureError, RuleSyntaxError, load_rules, parse_rules, SRL_RULES_TEXT
from .serialize import ModelFormatError, load_model, save_model

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_DATA, EXIT_TRAINING, EXIT_EVALUATION = range(6)
_STAGE_CODES = {"data": EXIT_DATA, "training": EXIT_TRAINING, "evaluation": EXIT_EVALUATION}

log = logging.getLogger("srlnsai")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _config(args) -> ExperimentConfig:
    overrides = list(getattr(args, "set", None) or [])
    if getattr(args, "config", None):
        return load_config(args.config, overrides)
    return parse_config("", overrides)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


# synth / prep


def cmd_synth(args) -> int:
    rules = load_rules(args.rules) if args.rules else parse_rules(SRL_RULES_TEXT)
    table = synth_generate(SRL_SCHEMA, rules, args.n, Balance(args.balance), seed_table(args.seed)["synth"])
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(args.out)
    print(f"wrote {table.n_rows} rows to {args.out}")
    return EXIT_OK


def _matrix_csv(path: Path, ids, x, y, names) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", *names, "label"])
        for i, row, lab in zip(ids, x, y):
            w.writerow([i, *[repr(float(v)) for v in row], int(lab)])


def _read_matrix(path: Path):
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    names = header[1:-1]
    x = np.array([[float(v) for v in r[1:-1]] for r in body]).reshape(len(body), len(names))
    y = np.array([int(r[-1]) for r in body])
    return names, x, y


def cmd_prep(args) -> int:
    cfg = _config(args)
    table = load_table(args.data, SRL_SCHEMA)
    lab = cfg["label"]
    target = args.target or lab["targets"][0]
    spec = LabelSpec(target, LabelPolicy(lab["policy"]), True, lab["quantile_method"], lab["threshold"])
    labels = discretize_label(table, spec)
    seeds = seed_table(args.seed)
    plan = stratified_split(labels.labels, cfg["split"]["test_fraction"], seeds["split"], cfg["split"]["n_folds"])
    train, test = np.array(plan.train_indices), np.array(plan.test_indices)
    x = table.matrix()
    scaler = fit_scaler(x[train], SRL_SCHEMA.predictors)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "split_plan.json").write_text(plan.to_json() + "\n", encoding="utf-8")
    (out / "scaler.json").write_text(scaler.to_json() + "\n", encoding="utf-8")
    ids = np.array(table.row_ids)
    _matrix_csv(out / "train.csv", ids[train], scaler.transform(x[train]), labels.labels[train],
                SRL_SCHEMA.predictors)
    _matrix_csv(out / "test.csv", ids[test], scaler.transform(x[test]), labels.labels[test],
                SRL_SCHEMA.predictors)
    meta = {"target": target, "policy": lab["policy"], "threshold": labels.threshold,
            "class_counts": list(labels.class_counts), "seed": args.seed, "config_hash": cfg.hash()}
    (out / "prep.json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    low, high = labels.class_counts
    print(f"{target} > {labels.threshold:g} is High: {low} low / {high} high; "
          f"{train.size} train, {test.size} test rows in {out}")
    return EXIT_OK


def _prep_dir(path):
    d = Path(path)
    meta = json.loads((d / "prep.json").read_text(encoding="utf-8"))
    return d, meta


# train / eval / explain


def cmd_train(args) -> int:
    cfg = _config(args)
    d, meta = _prep_dir(args.prep)
    names, x, y = _read_matrix(d / "train.csv")
    rules = load_rules(args.rules) if args.rules else None
    seed = seed_table(args.seed)[args.model]
    try:
        model = fit_model(args.model, x, y, names, cfg[args.model], seed, meta["target"], rules)
    except (DivergenceError, MlpDivergenceError) as exc:
        raise TrainingError(str(exc)) from exc
    save_model(model, args.out, seed, {"target": meta["target"], "config_hash": cfg.hash()})
    print(f"saved {args.model} to {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    d, meta = _prep_dir(args.prep)
    model = load_model(args.model_file)
    _, x, y = _read_matrix(d / args.split)
    report = compute_metrics(model.predict_proba(x), y, args.threshold, Path(args.model_file).stem, args.split)
    text = json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n"
    if args.out:
        _write(Path(args.out), text)
    print(text, end="")
    return EXIT_OK


def cmd_explain(args) -> int:
    d, meta = _prep_dir(args.prep)
    model = load_model(args.model_file)
    names, x_train, _ = _read_matrix(d / "train.csv")
    _, x_test, _ = _read_matrix(d / "test.csv")
    files = model_artifacts(model, args.tau)
    if args.shap:
        files.update(shap_artifacts(model, x_train, x_test, names, args.background, args.rows,
                                    args.samples, seed_table(args.seed)["shap"]))
    out = Path(args.out)
    for name, text in sorted(files.items()):
        _write(out / name, text)
    print(f"wrote {len(files)} file(s) to {out}")
    return EXIT_OK


# compare / report


def cmd_compare(args) -> int:
    cfg = _config(args)
    summary = run_experiment(cfg, args.out, args.jobs)
    print(f"wrote bundle for {len(summary)} model(s) to {args.out}")
    return EXIT_OK


def cmd_report(args) -> int:
    bundle = Path(args.bundle)
    try:
        doc = json.loads((bundle / "metrics.json").read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read {bundle / 'metrics.json'}: {exc}") from exc
    stamp = doc.get("stamp", "")
    out = bundle / "report"
    rows = [["target", "model", "auc", "accuracy", "precision_0", "precision_1", "recall_0", "recall_1"]]
    for model, per_target in doc["models"].items():
        for target, block in per_target.items():
            m = block["mean"]
            rows.append([target, model, m["auc"], m["accuracy"], m["precision"]["0"], m["precision"]["1"],
                         m["recall"]["0"], m["recall"]["1"]])
    with_header = "\n".join(",".join(str(v) if not isinstance(v, float) else f"{v:.6f}" for v in r)
                            for r in rows) + "\n"
    _write(out / "summary.csv", f"# {stamp}\n{with_header}" if stamp else with_header)
    targets = sorted({r[0] for r in rows[1:]})
    for target in targets:
        sub = [r for r in rows[1:] if r[0] == target]
        for col, key, title in ((2, "auc", "AUC"), (6, "recall_0", "Recall of the Low class")):
            vals = [r[col] if r[col] is not None else 0.0 for r in sub]
            _write(out / f"{target}_{key}.svg", bar_chart([r[1] for r in sub], vals, f"{title} ({target})"))
    print(f"wrote report to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="srlnsai", description="Neural-symbolic and baseline models for SRL data.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    def with_config(sp):
        sp.add_argument("--config", help="INI experiment configuration")
        sp.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override a config key")

    s = sub.add_parser("synth", help="write a synthetic cohort CSV")
    s.add_argument("--n", type=int, default=453)
    s.add_argument("--balance", choices=[b.value for b in Balance], default="imbalanced")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--rules", help="rule file (default: the bundled SRL rules)")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("prep", help="label, split and scale a CSV")
    with_config(s)
    s.add_argument("--data", required=True)
    s.add_argument("--target")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_prep)

    s = sub.add_parser("train", help="fit one model on a prepared directory")
    with_config(s)
    s.add_argument("--prep", required=True)
    s.add_argument("--model", required=True, choices=MODEL_IDS)
    s.add_argument("--rules")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="score a saved model")
    s.add_argument("--prep", required=True)
    s.add_argument("--model-file", required=True)
    s.add_argument("--split", choices=["test.csv", "train.csv"], default="test.csv")
    s.add_argument("--threshold", type=float, default=0.5)
    s.add_argument("--out")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("explain", help="write explanations for a saved model")
    s.add_argument("--prep", required=True)
    s.add_argument("--model-file", required=True)
    s.add_argument("--tau", type=float, default=0.25)
    s.add_argument("--shap", action="store_true", help="add KernelSHAP summaries")
    s.add_argument("--background", type=int, default=100)
    s.add_argument("--rows", type=int, default=20)
    s.add_argument("--samples", type=int, default=0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_explain)

    s = sub.add_parser("compare", help="run the full model comparison")
    with_config(s)
    s.add_argument("--out", required=True)
    s.add_argument("--jobs", type=int, default=1, help="worker processes (results do not depend on it)")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("report", help="render summary CSV and SVG charts from a bundle")
    s.add_argument("--bundle", required=True)
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with warnings.catch_warnings():
            if not args.verbose:
                warnings.simplefilter("ignore")
            return args.func(args)
    except ConfigError as exc:
        print(f"error [config] {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ExperimentError as exc:
        print(f"error {exc}", file=sys.stderr)
        return _STAGE_CODES.get(exc.stage, EXIT_DATA)
    except (DataError, SchemaError, StratificationError, RuleSyntaxError, RuleStructureError,
            ModelFormatError, OSError) as exc:
        print(f"error [data] {exc}", file=sys.stderr)
        return EXIT_DATA
    except TrainingError as exc:
        print(f"error [training] {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except (EvaluationError, ValueError) as exc:
        print(f"error [evaluation] {exc}", file=sys.stderr)
        return EXIT_EVALUATION


if __name__ == "__main__":
    sys.exit(main())
