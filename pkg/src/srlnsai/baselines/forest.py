"""Bagged gain-ratio trees with confidence voting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .tree import DecisionTree, TreeParams, train_decision_tree


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int = 10
    pruning_confidence: float = 0.1
    min_leaf: int = 2
    max_features: str | int = "sqrt"
    seed: int = 0


@dataclass
class Forest:
    trees: list[DecisionTree]
    feature_names: tuple[str, ...]
    params: ForestParams = field(default_factory=ForestParams)

    def predict_proba(self, x) -> np.ndarray:
        """Confidence voting: the mean of the trees' class-1 probabilities."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.mean([t.predict_proba(x) for t in self.trees], axis=0)

    def feature_importance(self) -> np.ndarray:
        imp = np.sum([t.feature_importance() for t in self.trees], axis=0)
        total = imp.sum()
        return imp / total if total > 0 else np.full(len(self.feature_names), 1 / len(self.feature_names))

    def to_dict(self) -> dict:
        return {"feature_names": list(self.feature_names), "params": self.params.__dict__.copy(),
                "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d: dict) -> "Forest":
        return cls([DecisionTree.from_dict(t) for t in d["trees"]], tuple(d["feature_names"]),
                   ForestParams(**d["params"]))


def _n_features(spec, total: int) -> int:
    if spec == "sqrt":
        return max(1, int(math.sqrt(total)))
    if spec in (None, "all"):
        return total
    return max(1, min(int(spec), total))


def train_random_forest(x, y, feature_names=None, params: ForestParams | None = None) -> Forest:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y).astype(int)
    params = params or ForestParams()
    names = tuple(feature_names) if feature_names is not None else tuple(f"x{j}" for j in range(x.shape[1]))
    tree_params = TreeParams(params.max_depth, params.pruning_confidence, params.min_leaf,
                             True, _n_features(params.max_features, x.shape[1]))
    # one independent stream per tree, so results do not depend on training order
    streams = np.random.SeedSequence(params.seed).spawn(params.n_trees)
    trees = []
    for ss in streams:
        rng = np.random.default_rng(ss)
        idx = rng.integers(0, y.size, size=y.size)
        trees.append(train_decision_tree(x[idx], y[idx], names, tree_params, rng))
    return Forest(trees, names, params)
