"""Ordered rule lists learned by sequential covering.

Each round splits the uncovered rows into a growing and a pruning part. For
every class a conjunction is grown greedily by FOIL information gain until it
is pure enough, then its trailing atoms are pruned on the held-out part. The
candidate with the largest pureness benefit over the class prior is kept if
that benefit reaches ``min_pure_benefit``; covered rows are removed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Atom:
    feature: int
    op: str  # "<=" or ">"
    threshold: float

    def holds(self, x: np.ndarray) -> np.ndarray:
        col = x[:, self.feature]
        return col <= self.threshold if self.op == "<=" else col > self.threshold


@dataclass(frozen=True)
class Rule:
    atoms: tuple[Atom, ...]
    prediction: int
    counts: tuple[int, int]  # (class-1 covered, class-0 covered) on training data

    def covers(self, x: np.ndarray) -> np.ndarray:
        mask = np.ones(x.shape[0], dtype=bool)
        for a in self.atoms:
            mask &= a.holds(x)
        return mask

    def proba(self) -> float:
        ones, zeros = self.counts
        return (ones + 1) / (ones + zeros + 2)


@dataclass(frozen=True)
class RuleListParams:
    sample_ratio: float = 0.9
    pureness: float = 0.9
    min_pure_benefit: float = 0.25
    seed: int = 0


@dataclass
class DecisionList:
    rules: list[Rule]  # the last rule has no atoms and acts as the default
    feature_names: tuple[str, ...]
    params: RuleListParams = field(default_factory=RuleListParams)
    n_train: int = 0
    n_correct: int = 0

    def match(self, x) -> np.ndarray:
        """Index of the first rule covering each row."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != len(self.feature_names):
            raise ValueError(f"expected {len(self.feature_names)} features, got {x.shape[1]}")
        out = np.full(x.shape[0], len(self.rules) - 1)
        free = np.ones(x.shape[0], dtype=bool)
        for i, rule in enumerate(self.rules[:-1]):
            hit = free & rule.covers(x)
            out[hit] = i
            free &= ~hit
        return out

    def predict_proba(self, x) -> np.ndarray:
        probs = np.array([r.proba() for r in self.rules])
        return probs[self.match(x)]

    def to_text(self, digits: int | None = 3) -> str:
        def num(v):
            return repr(float(v)) if digits is None else f"{v:.{digits}f}"

        lines = []
        for rule in self.rules[:-1]:
            conds = " and ".join(
                f"{self.feature_names[a.feature]} {'≤' if a.op == '<=' else '>'} {num(a.threshold)}"
                for a in rule.atoms)
            lines.append(f"if {conds} then {rule.prediction} ({rule.counts[0]} / {rule.counts[1]})")
        default = self.rules[-1]
        lines.append(f"else {default.prediction} ({default.counts[0]} / {default.counts[1]})")
        lines.append(f"correct: {self.n_correct} out of {self.n_train} training examples")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "params": self.params.__dict__.copy(),
            "n_train": self.n_train, "n_correct": self.n_correct,
            "rules": [{"atoms": [[a.feature, a.op, a.threshold] for a in r.atoms],
                       "prediction": r.prediction, "counts": list(r.counts)} for r in self.rules],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionList":
        rules = [Rule(tuple(Atom(f, op, t) for f, op, t in r["atoms"]), r["prediction"],
                      tuple(r["counts"])) for r in d["rules"]]
        return cls(rules, tuple(d["feature_names"]), RuleListParams(**d["params"]),
                   d["n_train"], d["n_correct"])


_RULE_LINE = re.compile(r"^if (?P<conds>.+) then (?P<cls>[01]) \((?P<a>\d+) / (?P<b>\d+)\)$")
_ELSE_LINE = re.compile(r"^else (?P<cls>[01]) \((?P<a>\d+) / (?P<b>\d+)\)$")
_ATOM = re.compile(r"^(?P<name>[A-Za-z_][A-Za-z0-9_]*) (?P<op>≤|<=|>) (?P<t>\S+)$")


def parse_decision_list(text: str, feature_names) -> DecisionList:
    """Inverse of :meth:`DecisionList.to_text`."""
    names = list(feature_names)
    rules, n_train, n_correct = [], 0, 0
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("correct:"):
            m = re.match(r"correct: (\d+) out of (\d+)", line)
            n_correct, n_train = int(m.group(1)), int(m.group(2))
            continue
        m = _RULE_LINE.match(line)
        if m:
            atoms = []
            for cond in m.group("conds").split(" and "):
                am = _ATOM.match(cond.strip())
                if am is None:
                    raise ValueError(f"cannot parse condition {cond!r}")
                op = "<=" if am.group("op") in ("≤", "<=") else ">"
                atoms.append(Atom(names.index(am.group("name")), op, float(am.group("t"))))
            rules.append(Rule(tuple(atoms), int(m.group("cls")), (int(m.group("a")), int(m.group("b")))))
            continue
        m = _ELSE_LINE.match(line)
        if m:
            rules.append(Rule((), int(m.group("cls")), (int(m.group("a")), int(m.group("b")))))
            continue
        raise ValueError(f"cannot parse line {line!r}")
    if not rules or rules[-1].atoms:
        raise ValueError("a decision list must end with an else rule")
    return DecisionList(rules, tuple(names), RuleListParams(), n_train, n_correct)


def _foil_gain(p0, n0, p1, n1):
    with np.errstate(divide="ignore", invalid="ignore"):
        before = np.log2(p0 / (p0 + n0))
        after = np.log2(np.where(p1 > 0, p1, 1) / np.where(p1 + n1 > 0, p1 + n1, 1))
        return np.where(p1 > 0, p1 * (after - before), -np.inf)


def _best_atom(x: np.ndarray, pos: np.ndarray):
    """Atom with the highest FOIL gain for the positives ``pos`` among rows ``x``."""
    p0, n0 = pos.sum(), (~pos).sum()
    best = None
    for f in range(x.shape[1]):
        order = np.argsort(x[:, f], kind="stable")
        xs, ps = x[order, f], pos[order]
        cut = np.flatnonzero(xs[1:] > xs[:-1])
        if cut.size == 0:
            continue
        cum_p = np.cumsum(ps)[cut]
        cum_n = (cut + 1) - cum_p
        thresholds = (xs[cut] + xs[cut + 1]) / 2
        for op, p1, n1 in (("<=", cum_p, cum_n), (">", p0 - cum_p, n0 - cum_n)):
            gains = _foil_gain(p0, n0, p1.astype(float), n1.astype(float))
            k = int(np.argmax(gains))
            if best is None or gains[k] > best[0] + 1e-12:
                best = (float(gains[k]), Atom(f, op, float(thresholds[k])))
    return best


def _grow_rule(x, y, target: int, pureness: float) -> list[Atom]:
    atoms: list[Atom] = []
    covered = np.ones(y.size, dtype=bool)
    while covered.any():
        pos = y[covered] == target
        if pos.mean() >= pureness or pos.all():
            break
        best = _best_atom(x[covered], pos)
        if best is None or best[0] <= 1e-12:
            break
        atoms.append(best[1])
        covered &= best[1].holds(x)
    return atoms


def _prune_rule(atoms, x, y, target: int) -> list[Atom]:
    """Keep the prefix maximising (p - n) / (p + n) on the pruning rows."""
    if not atoms or y.size == 0:
        return atoms
    best_len, best_val = len(atoms), -np.inf
    covered = np.ones(y.size, dtype=bool)
    values = []
    for a in atoms:
        covered &= a.holds(x)
        p = int((y[covered] == target).sum())
        n = int(covered.sum()) - p
        values.append((p - n) / (p + n) if p + n else 0.0)
    for k, v in enumerate(values, start=1):
        if v >= best_val:  # ties favour the longer prefix
            best_len, best_val = k, v
    return atoms[:best_len]


def train_rule_list(x, y, feature_names=None, params: RuleListParams | None = None) -> DecisionList:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y).astype(int)
    params = params or RuleListParams()
    names = tuple(feature_names) if feature_names is not None else tuple(f"x{j}" for j in range(x.shape[1]))
    rng = np.random.default_rng(params.seed)
    remaining = np.arange(y.size)
    rules: list[Rule] = []

    while remaining.size and 0 < y[remaining].sum() < remaining.size:
        perm = rng.permutation(remaining)
        n_grow = max(1, int(round(params.sample_ratio * perm.size)))
        grow, prune = perm[:n_grow], perm[n_grow:]
        xr, yr = x[remaining], y[remaining]
        # rarer class first; ties resolved by class index
        classes = sorted((0, 1), key=lambda c: ((yr == c).sum(), c))
        best = None
        for c in classes:
            atoms = _grow_rule(x[grow], y[grow], c, params.pureness)
            atoms = _prune_rule(atoms, x[prune], y[prune], c)
            if not atoms:
                continue
            rule = Rule(tuple(atoms), c, (0, 0))
            cov = rule.covers(xr)
            if not cov.any():
                continue
            benefit = (yr[cov] == c).mean() - (yr == c).mean()
            if benefit >= params.min_pure_benefit and (best is None or benefit > best[0] + 1e-12):
                best = (benefit, rule, cov)
        if best is None:
            break
        _, rule, cov = best
        ones = int(yr[cov].sum())
        rules.append(Rule(rule.atoms, rule.prediction, (ones, int(cov.sum()) - ones)))
        remaining = remaining[~cov]

    if remaining.size:
        ones = int(y[remaining].sum())
        counts = (ones, remaining.size - ones)
        default_cls = int(ones > remaining.size - ones)
    else:
        counts = (0, 0)
        default_cls = int(y.sum() > y.size - y.sum())
    rules.append(Rule((), default_cls, counts))
    model = DecisionList(rules, names, params, int(y.size))
    pred = np.array([r.prediction for r in rules])[model.match(x)]
    model.n_correct = int((pred == y).sum())
    return model
