"""Uniform fit interface over every model family."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baselines.bayesnet import BnParams, train_bayes_net
from .baselines.decision_list import RuleListParams, train_rule_list
from .baselines.forest import ForestParams, train_random_forest
from .baselines.klr import KlrParams, train_klr
from .baselines.mlp import MlpParams, train_mlp
from .baselines.tree import TreeParams, train_decision_tree
from .dataset import SRL_SCHEMA, FeatureSchema
from .kbann import KbannParams, compile_network, init_weights, train_kbann
from .rules import RuleSet, parse_rules, SRL_RULES_TEXT


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModelInfo:
    family: str
    method: str


MODEL_INFO = {
    "decision_tree": ModelInfo("Symbolic", "Decision tree"),
    "rule_induction": ModelInfo("Symbolic", "Rule induction"),
    "random_forest": ModelInfo("Symbolic", "Random forest"),
    "klr": ModelInfo("Sub-symbolic", "Kernel logistic regression"),
    "bayes_net": ModelInfo("Sub-symbolic", "Bayesian network"),
    "mlp": ModelInfo("Sub-symbolic", "Neural network"),
    "kbann": ModelInfo("Neural-symbolic", "KBANN"),
}


def fit_model(model_id: str, x, y, feature_names, options: dict | None = None, seed: int = 0,
              target: str = "MF", rules: RuleSet | None = None, schema: FeatureSchema = SRL_SCHEMA):
    """Train ``model_id`` on scaled features ``x`` with binary labels ``y``.

    ``options`` holds the model's hyperparameters by name (a config section).
    """
    o = dict(options or {})
    x = np.asarray(x, dtype=float)
    y = np.asarray(y).astype(int)
    names = tuple(feature_names)
    try:
        if model_id == "decision_tree":
            return train_decision_tree(x, y, names, TreeParams(**o), np.random.default_rng(seed))
        if model_id == "rule_induction":
            return train_rule_list(x, y, names, RuleListParams(seed=seed, **o))
        if model_id == "random_forest":
            return train_random_forest(x, y, names, ForestParams(seed=seed, **o))
        if model_id == "klr":
            return train_klr(x, y, names, KlrParams(**o))
        if model_id == "mlp":
            return train_mlp(x, y, names, MlpParams(seed=seed, **o))
        if model_id == "bayes_net":
            return train_bayes_net(x, y, names, BnParams(target=target, **o))
        if model_id == "kbann":
            rules = rules or parse_rules(SRL_RULES_TEXT)
            if names != tuple(schema.predictors):
                raise TrainingError("KBANN expects the schema's predictor columns in schema order")
            spec = compile_network(rules, schema, o.get("n_free_heads", 1), target=target)
            return train_kbann(init_weights(spec, KbannParams(seed=seed, **o)), x, y)
    except TrainingError:
        raise
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        raise TrainingError(f"{model_id}: {exc}") from exc
    raise TrainingError(f"unknown model {model_id!r}")
