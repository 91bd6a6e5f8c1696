"""Rule extraction and weight-based explanations for trained KBANN models."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .kbann import KbannModel
from .plots import bar_chart
from .rules import HornClause, RuleSet


@dataclass(frozen=True)
class WeightedRule:
    head: str
    antecedents: tuple[tuple[str, float], ...]
    bias: float

    def __str__(self) -> str:
        body = ", ".join(f"{s} ({w:+.3f})" for s, w in self.antecedents)
        return f"{self.head} : - {body}.  [bias {self.bias:+.3f}]"


def _ranked(pairs, key):
    # stable sort keeps source order among ties
    return sorted(pairs, key=key)


def extract_rules(model: KbannModel, tau: float = 0.25) -> list[WeightedRule]:
    """Keep, per unit, the links whose magnitude reaches ``tau`` times the unit's largest.

    Units with no non-zero incoming link yield a rule with an empty body.
    """
    if not 0 < tau <= 1:
        raise ValueError("tau must lie in (0, 1]")
    spec = model.spec
    out = []
    for li, units in enumerate(spec.layers):
        names = spec.sources(li)
        w, mask = model.weights[li], spec.masks[li]
        for ui, unit in enumerate(units):
            row = np.where(mask[ui], w[ui], 0.0)
            top = np.abs(row).max() if row.size else 0.0
            kept = []
            if top > 0:
                kept = [(names[j], float(row[j])) for j in np.flatnonzero(mask[ui])
                        if abs(row[j]) >= tau * top]
            kept = _ranked(kept, key=lambda p: -abs(p[1]))
            out.append(WeightedRule(unit.name, tuple(kept), float(model.biases[li][ui])))
    return out


def rules_to_ruleset(rules: list[WeightedRule]) -> RuleSet:
    """Drop the weights (and empty rules) to compare against the injected knowledge."""
    return RuleSet(tuple(HornClause(r.head, tuple(s for s, _ in r.antecedents))
                         for r in rules if r.antecedents))


def same_rules(a: RuleSet, b: RuleSet) -> bool:
    """Equality of clause sets, ignoring clause and antecedent order."""
    def norm(rs):
        return {c.head: frozenset(c.body) for c in rs.clauses}
    return norm(a) == norm(b)


@dataclass(frozen=True)
class KnowledgeReport:
    inputs: tuple[str, ...]
    latents: tuple[str, ...]
    high_level: dict[str, float]
    low_level: np.ndarray  # signed weights, latents x inputs
    global_importance: tuple[tuple[str, float], ...]  # ranked, sums to 1
    free_heads: dict[str, tuple[tuple[str, float], ...]]

    def to_dict(self) -> dict:
        return {
            "inputs": list(self.inputs),
            "latents": list(self.latents),
            "high_level": [[k, v] for k, v in self.high_level.items()],
            "low_level": self.low_level.tolist(),
            "global": [[k, v] for k, v in self.global_importance],
            "free_heads": {k: [[s, w] for s, w in v] for k, v in self.free_heads.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def low_level_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["latent"] + list(self.inputs))
        for name, row in zip(self.latents, self.low_level):
            writer.writerow([name] + [repr(float(v)) for v in row])
        return buf.getvalue()

    def high_level_svg(self) -> str:
        items = sorted(self.high_level.items(), key=lambda kv: -kv[1])
        return bar_chart([k for k, _ in items], [v for _, v in items],
                         "Latent contribution to the output")

    def global_svg(self) -> str:
        return bar_chart([k for k, _ in self.global_importance],
                         [v for _, v in self.global_importance], "Global feature importance")


def build_report(model: KbannModel, top_k: int = 7) -> KnowledgeReport:
    """Weight-based explanation of a trained network.

    Global importance of an input is the sum over all paths to the output of
    the product of absolute link weights, normalised to sum to one (uniform if
    every path is zero).
    """
    spec = model.spec
    inputs = tuple(spec.inputs)
    hidden = spec.hidden_units
    latents = tuple(u.name for u in hidden)

    out_li = len(spec.layers) - 1
    out_sources = spec.sources(out_li)
    out_w = np.where(spec.masks[out_li][0], model.weights[out_li][0], 0.0)
    high = {name: float(abs(out_w[out_sources.index(name)])) for name in latents
            if name in out_sources}

    low = np.zeros((len(latents), len(inputs)))
    for k, name in enumerate(latents):
        li, ui = spec.locate(name)
        row = np.where(spec.masks[li][ui], model.weights[li][ui], 0.0)
        low[k] = row[:len(inputs)]

    # back-propagate path products from the output to every source
    reach = {name: 0.0 for name in spec.sources(out_li)}
    reach[spec.output.name] = 1.0
    for li in range(out_li, -1, -1):
        names = spec.sources(li)
        for ui, unit in enumerate(spec.layers[li]):
            g = reach.get(unit.name, 0.0)
            if g == 0.0:
                continue
            row = np.abs(np.where(spec.masks[li][ui], model.weights[li][ui], 0.0))
            for j in np.flatnonzero(row):
                reach[names[j]] = reach.get(names[j], 0.0) + row[j] * g
    raw = np.array([reach.get(name, 0.0) for name in inputs])
    total = raw.sum()
    imp = raw / total if total > 0 else np.full(len(inputs), 1.0 / len(inputs))
    order = sorted(range(len(inputs)), key=lambda j: (-imp[j], j))
    global_importance = tuple((inputs[j], float(imp[j])) for j in order)

    free = {}
    for unit in spec.free_units:
        k = latents.index(unit.name)
        order = sorted(range(len(inputs)), key=lambda j: (-abs(low[k, j]), j))[:top_k]
        free[unit.name] = tuple((inputs[j], float(low[k, j])) for j in order)

    return KnowledgeReport(inputs, latents, high, low, global_importance, free)
