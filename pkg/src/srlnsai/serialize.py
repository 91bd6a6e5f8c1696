"""Versioned JSON persistence for trained models."""

from __future__ import annotations

import json
from pathlib import Path

from .baselines.bayesnet import BnClassifier
from .baselines.decision_list import DecisionList
from .baselines.forest import Forest
from .baselines.klr import KernelLrModel
from .baselines.mlp import MlpModel
from .baselines.tree import DecisionTree
from .kbann import KbannModel

FORMAT_VERSION = 1

KINDS = {
    "kbann": KbannModel,
    "decision_tree": DecisionTree,
    "rule_induction": DecisionList,
    "random_forest": Forest,
    "klr": KernelLrModel,
    "mlp": MlpModel,
    "bayes_net": BnClassifier,
}


class ModelFormatError(ValueError):
    pass


class ModelVersionError(ModelFormatError):
    def __init__(self, found, expected=FORMAT_VERSION):
        super().__init__(f"model file has format_version {found}; this build reads version {expected}")
        self.found, self.expected = found, expected


def kind_of(model) -> str:
    for kind, cls in KINDS.items():
        if isinstance(model, cls):
            return kind
    raise TypeError(f"cannot serialise {type(model).__name__}")


def model_to_json(model, seed: int | None = None, extra: dict | None = None) -> str:
    doc = {"format_version": FORMAT_VERSION, "kind": kind_of(model), "seed": seed,
           "model": model.to_dict()}
    if extra:
        doc["meta"] = extra
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def model_from_json(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("model file must hold a JSON object")
    missing = [k for k in ("format_version", "kind", "model") if k not in doc]
    if missing:
        raise ModelFormatError(f"model file lacks field(s): {', '.join(missing)}")
    if doc["format_version"] != FORMAT_VERSION:
        raise ModelVersionError(doc["format_version"])
    cls = KINDS.get(doc["kind"])
    if cls is None:
        raise ModelFormatError(f"unknown model kind {doc['kind']!r}")
    try:
        return cls.from_dict(doc["model"])
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ModelFormatError(f"corrupt {doc['kind']} model: {exc!r}") from exc


def save_model(model, path, seed: int | None = None, extra: dict | None = None) -> None:
    Path(path).write_text(model_to_json(model, seed, extra), encoding="utf-8")


def load_model(path):
    return model_from_json(Path(path).read_text(encoding="utf-8"))
