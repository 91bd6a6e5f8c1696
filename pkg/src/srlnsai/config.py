"""Experiment configuration: INI files with typed, validated keys.

Every section and key is declared below; anything else is rejected. Values
can be overridden with ``section.key=value`` strings (the CLI ``--set`` flag).
"""

from __future__ import annotations

import configparser
import hashlib
import json
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class ConfigError(ValueError):
    pass


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.replace(",", " ").split()]


def _str_list(text: str) -> list[str]:
    return [t for t in text.replace(",", " ").split()]


def _opt_float(text: str):
    return None if text.strip().lower() in ("", "none") else float(text)


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _choice(*options):
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    return parse


def _features(text: str):
    t = text.strip()
    return t if t in ("sqrt", "all") else int(t)


MODEL_IDS = ("decision_tree", "rule_induction", "random_forest", "klr", "bayes_net", "mlp", "kbann")

# section -> key -> (parser, default text)
SCHEMA: dict[str, dict[str, tuple]] = {
    "experiment": {
        "name": (str, "experiment"),
        "seeds": (_int_list, "0"),
    },
    "data": {
        "source": (_choice("synth", "csv"), "synth"),
        "path": (str, ""),
        "n": (int, "453"),
        "balance": (_choice("balanced", "imbalanced"), "imbalanced"),
        "rules": (str, ""),
    },
    "label": {
        "targets": (_str_list, "MF"),
        "policy": (_choice("mean", "quartile"), "quartile"),
        "threshold": (_opt_float, ""),
        "quantile_method": (str, "linear"),
    },
    "split": {
        "test_fraction": (float, "0.2"),
        "n_folds": (int, "10"),
    },
    "models": {
        "include": (_str_list, " ".join(MODEL_IDS)),
    },
    "kbann": {
        "omega": (float, "4.0"), "eps0": (float, "0.05"), "lam": (float, "0.01"),
        "dropout": (float, "0.2"), "lr": (float, "0.001"), "epochs": (int, "100"),
        "bias_mode": (_choice("conjunctive", "soft", "midpoint"), "conjunctive"),
        "output_bias_mode": (_choice("zero", "conjunctive", "soft", "midpoint"), "zero"),
        "n_free_heads": (int, "1"),
    },
    "decision_tree": {
        "max_depth": (int, "10"), "pruning_confidence": (float, "0.1"), "min_leaf": (int, "2"),
        "prune": (_bool, "true"),
    },
    "rule_induction": {
        "sample_ratio": (float, "0.9"), "pureness": (float, "0.9"), "min_pure_benefit": (float, "0.25"),
    },
    "random_forest": {
        "n_trees": (int, "100"), "max_depth": (int, "10"), "pruning_confidence": (float, "0.1"),
        "min_leaf": (int, "2"), "max_features": (_features, "sqrt"),
    },
    "klr": {
        "C": (float, "1.0"), "epsilon": (float, "0.001"), "max_iter": (int, "100000"),
        "kernel": (_choice("dot"), "dot"), "kernel_cache": (int, "200"),
    },
    "mlp": {
        "hidden": (lambda t: tuple(_int_list(t)), "64 32"), "lr": (float, "0.001"), "epochs": (int, "100"),
        "batch_size": (int, "32"),
    },
    "bayes_net": {
        "alpha": (float, "0.07"), "max_cond": (int, "3"), "n_bins": (int, "3"),
        "min_expected": (float, "1.0"),
    },
    "explain": {
        "tau": (float, "0.25"),
        "top_k": (int, "7"),
        "shap_models": (_str_list, "mlp"),
        "shap_background": (int, "100"),
        "shap_rows": (int, "20"),
        "shap_samples": (int, "0"),  # 0: 2 * M + 2048, the usual KernelSHAP budget
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    values: dict[str, dict]

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    def canonical(self) -> dict:
        def plain(v):
            return list(v) if isinstance(v, tuple) else v
        return {s: {k: plain(v) for k, v in sorted(kv.items())} for s, kv in sorted(self.values.items())}

    def to_json(self) -> str:
        return json.dumps(self.canonical(), indent=1, sort_keys=True)

    def hash(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]

    def to_ini(self) -> str:
        lines = []
        for section, keys in SCHEMA.items():
            lines.append(f"[{section}]")
            for key in keys:
                v = self.values[section][key]
                if isinstance(v, (list, tuple)):
                    v = " ".join(str(t) for t in v)
                elif v is None:
                    v = ""
                elif isinstance(v, bool):
                    v = "true" if v else "false"
                lines.append(f"{key} = {v}")
            lines.append("")
        return "\n".join(lines)


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    cp.optionxform = str  # keep key case ("C")
    return cp


def parse_config(text: str = "", overrides=()) -> ExperimentConfig:
    cp = _parser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    raw = {s: dict(cp[s]) for s in cp.sections()}
    problems = []
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot:
            problems.append(f"override {item!r} is not of the form section.key=value")
            continue
        raw.setdefault(section, {})[name] = value.strip()
    for section, keys in raw.items():
        if section not in SCHEMA:
            problems.append(f"unknown section [{section}]")
            continue
        problems += [f"unknown key {section}.{k}" for k in keys if k not in SCHEMA[section]]
    values: dict[str, dict] = {}
    for section, keys in SCHEMA.items():
        values[section] = {}
        for key, (parse, default) in keys.items():
            text_value = raw.get(section, {}).get(key, default)
            try:
                values[section][key] = parse(text_value)
            except (ValueError, TypeError) as exc:
                problems.append(f"bad value for {section}.{key} = {text_value!r}: {exc}")
    if not problems:
        problems += _semantic_checks(values)
    if problems:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(problems))
    return ExperimentConfig(values)


def _semantic_checks(v) -> list[str]:
    out = []
    unknown = [m for m in v["models"]["include"] if m not in MODEL_IDS]
    if unknown:
        out.append(f"unknown models in models.include: {', '.join(unknown)}")
    if not v["experiment"]["seeds"]:
        out.append("experiment.seeds must list at least one seed")
    if v["data"]["source"] == "csv" and not v["data"]["path"]:
        out.append("data.path is required when data.source = csv")
    if not 0 < v["split"]["test_fraction"] < 1:
        out.append("split.test_fraction must lie in (0, 1)")
    if v["split"]["n_folds"] == 1 or v["split"]["n_folds"] < 0:
        out.append("split.n_folds must be 0 (no CV) or at least 2")
    bad_shap = [m for m in v["explain"]["shap_models"] if m not in MODEL_IDS]
    if bad_shap:
        out.append(f"unknown models in explain.shap_models: {', '.join(bad_shap)}")
    return out


def load_config(path, overrides=()) -> ExperimentConfig:
    try:
        text = Path(path).read_text("utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, overrides)


STREAMS = ("synth", "split", "cv", "shap", *MODEL_IDS)


def derive_seed(master: int, stream: str) -> int:
    """Independent 32-bit seed for a named component, derived from the master seed."""
    return int(np.random.SeedSequence([master, zlib.crc32(stream.encode("utf-8"))]).generate_state(1)[0])


def seed_table(master: int) -> dict[str, int]:
    return {name: derive_seed(master, name) for name in STREAMS}
