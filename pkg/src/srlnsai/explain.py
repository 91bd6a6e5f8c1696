"""Per-model explanation artefacts as ``{filename: text}`` maps."""

from __future__ import annotations

import csv
import io

import numpy as np

from .baselines.bayesnet import BnClassifier
from .baselines.decision_list import DecisionList
from .baselines.forest import Forest
from .baselines.klr import KernelLrModel
from .baselines.tree import DecisionTree
from .extraction import build_report, extract_rules
from .kbann import KbannModel
from .plots import bar_chart
from .shap import kernel_shap_local, sample_background, shap_global


def _ranked_csv(header, names, values) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    order = sorted(range(len(names)), key=lambda j: (-abs(values[j]), j))
    for j in order:
        w.writerow([names[j], f"{values[j]:.6f}"])
    return buf.getvalue()


def model_artifacts(model, tau: float = 0.25, top_k: int = 7) -> dict[str, str]:
    """Native explanations: extracted rules, trees, weights, graphs."""
    if isinstance(model, KbannModel):
        report = build_report(model, top_k)
        rules = extract_rules(model, tau)
        return {"rules.txt": "\n".join(str(r) for r in rules) + "\n",
                "knowledge.json": report.to_json() + "\n",
                "low_level.csv": report.low_level_csv(),
                "high_level.svg": report.high_level_svg(),
                "global.svg": report.global_svg()}
    if isinstance(model, DecisionTree):
        names = list(model.feature_names)
        imp = model.feature_importance()
        return {"tree.txt": model.to_text(), "tree.svg": model.to_svg(),
                "importance.csv": _ranked_csv(["feature", "importance"], names, imp)}
    if isinstance(model, DecisionList):
        return {"rules.txt": model.to_text()}
    if isinstance(model, Forest):
        imp = model.feature_importance()
        order = np.argsort(-imp, kind="stable")
        return {"importance.csv": _ranked_csv(["feature", "importance"], list(model.feature_names), imp),
                "importance.svg": bar_chart([model.feature_names[j] for j in order], imp[order].tolist(),
                                            "Forest feature importance")}
    if isinstance(model, KernelLrModel):
        w = model.weights
        order = sorted(range(w.size), key=lambda j: (-abs(w[j]), j))
        return {"weights.csv": _ranked_csv(["feature", "weight"], list(model.feature_names), w),
                "weights.svg": bar_chart([model.feature_names[j] for j in order], [float(w[j]) for j in order],
                                         "Attribute weights")}
    if isinstance(model, BnClassifier):
        return {"bn.json": model.to_json() + "\n", "bn.dot": model.net.to_dot(),
                "influence.csv": model.net.influence_csv()}
    return {}


def shap_artifacts(model, x_train, x_explain, feature_names, background: int = 100, rows: int = 20,
                   n_samples: int = 0, seed: int = 0) -> dict[str, str]:
    """KernelSHAP global summary over the first ``rows`` rows plus a local plot of the first."""
    m = len(feature_names)
    budget = n_samples or 2 * m + 2048
    bg = sample_background(x_train, background, seed)
    rows_x = np.asarray(x_explain, float)[:rows]
    g = shap_global(model.predict_proba, bg, rows_x, budget, seed, feature_names)
    local = kernel_shap_local(model.predict_proba, bg, rows_x[0], budget,
                              np.random.default_rng(seed), feature_names)
    return {"shap_global.csv": g.ranking_csv(), "shap_beeswarm.csv": g.beeswarm_csv(),
            "shap_global.svg": g.to_svg("SHAP global explanation"),
            "shap_local.json": local.to_json() + "\n", "shap_local.svg": local.to_svg("SHAP local explanation")}
