"""Classification metrics at a fixed threshold, plus rank-based AUC."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    auc: float | None
    precision: tuple[float, float]  # (class 0, class 1)
    recall: tuple[float, float]
    confusion: dict[str, int]       # tn, fp, fn, tp
    threshold: float = 0.5
    undefined: tuple[str, ...] = ()  # metrics reported as 0 because of a 0/0
    model: str = ""
    dataset: str = ""

    def to_dict(self) -> dict:
        return {"model": self.model, "dataset": self.dataset, "threshold": self.threshold,
                "accuracy": self.accuracy, "auc": self.auc,
                "precision": {"0": self.precision[0], "1": self.precision[1]},
                "recall": {"0": self.recall[0], "1": self.recall[1]},
                "confusion": dict(self.confusion), "undefined": list(self.undefined)}


def _ratio(num: int, den: int, name: str, undefined: list[str]) -> float:
    if den == 0:
        undefined.append(name)
        return 0.0
    return num / den


def compute_metrics(scores, labels, threshold: float = 0.5, model: str = "", dataset: str = "") -> MetricsReport:
    s = np.asarray(scores, dtype=float).ravel()
    y = np.asarray(labels).astype(int).ravel()
    if s.shape != y.shape:
        raise EvaluationError(f"length mismatch: {s.size} scores vs {y.size} labels")
    pred = (s > threshold).astype(int)
    tp = int(np.sum((pred == 1) & (y == 1)))
    tn = int(np.sum((pred == 0) & (y == 0)))
    fp = int(np.sum((pred == 1) & (y == 0)))
    fn = int(np.sum((pred == 0) & (y == 1)))
    undefined: list[str] = []
    precision = (_ratio(tn, tn + fn, "precision_0", undefined), _ratio(tp, tp + fp, "precision_1", undefined))
    recall = (_ratio(tn, tn + fp, "recall_0", undefined), _ratio(tp, tp + fn, "recall_1", undefined))
    accuracy = _ratio(tp + tn, y.size, "accuracy", undefined)
    auc = compute_auc(s, y) if 0 < y.sum() < y.size else None
    return MetricsReport(accuracy, auc, precision, recall, {"tn": tn, "fp": fp, "fn": fn, "tp": tp},
                         threshold, tuple(undefined), model, dataset)


def compute_auc(scores, labels) -> float:
    """Probability that a random positive outscores a random negative (ties count half)."""
    s = np.asarray(scores, dtype=float).ravel()
    y = np.asarray(labels).astype(int).ravel()
    if s.shape != y.shape:
        raise EvaluationError(f"length mismatch: {s.size} scores vs {y.size} labels")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise EvaluationError("AUC needs both classes present")
    ranks = rankdata(s)  # average ranks give the half-credit for ties
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2
    return float(u / (n_pos * n_neg))
