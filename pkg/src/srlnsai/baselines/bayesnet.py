"""Discrete Bayesian network classifier with PC-stable structure learning.

Continuous predictors are cut into equal-frequency bins, the graph is learned
with G-squared conditional-independence tests under background constraints,
CPTs are Laplace-smoothed counts and posteriors come from variable elimination.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2


class SparseDataWarning(UserWarning):
    """Some independence tests were skipped because cells were too thin."""


# Discretisation

@dataclass(frozen=True)
class Discretizer:
    """Per-variable cut points; a value v lands in bin ``#{edges < v}``."""

    edges: tuple[tuple[float, ...], ...]

    @property
    def cards(self) -> tuple[int, ...]:
        return tuple(len(e) + 1 for e in self.edges)

    def transform(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != len(self.edges):
            raise ValueError(f"expected {len(self.edges)} columns, got {x.shape[1]}")
        out = np.empty(x.shape, dtype=np.int64)
        for j, e in enumerate(self.edges):
            out[:, j] = np.searchsorted(np.asarray(e, float), x[:, j], side="left")
        return out


def fit_discretizer(x, n_bins: int = 3) -> Discretizer:
    x = np.asarray(x, dtype=float)
    edges = []
    for j in range(x.shape[1]):
        values = np.unique(x[:, j])
        if values.size <= 2:
            cuts = [] if values.size < 2 else [float((values[0] + values[1]) / 2)]
        else:
            qs = np.quantile(x[:, j], np.arange(1, n_bins) / n_bins)
            # a cut at the maximum would leave the top bin empty
            cuts = sorted({float(q) for q in qs if q < values[-1]})
        edges.append(tuple(cuts))
    return Discretizer(tuple(edges))


# Background knowledge

@dataclass(frozen=True)
class Constraints:
    no_parents: frozenset[str] = frozenset()
    no_children: frozenset[str] = frozenset()
    forbidden: frozenset[tuple[str, str]] = frozenset()  # (from, to)

    def allows(self, u: str, v: str) -> bool:
        return u not in self.no_children and v not in self.no_parents and (u, v) not in self.forbidden


def default_constraints(names, sinks=("MF", "MC"), roots=("Gender",)) -> Constraints:
    """Roots take no parents, outcomes take no children, X2 never points at Y1."""
    names = list(names)
    first = [n for n in names if n.endswith("1")]
    second = [n for n in names if n.endswith("2")]
    return Constraints(frozenset(r for r in roots if r in names),
                       frozenset(s for s in sinks if s in names),
                       frozenset((a, b) for a in second for b in first))


def violations(parents: dict[str, tuple[str, ...]], constraints: Constraints) -> list[str]:
    """Human-readable list of constraint breaches and cycles (empty when valid)."""
    out = [f"{p} -> {c}" for c, ps in parents.items() for p in ps if not constraints.allows(p, c)]
    if _topological_order(parents) is None:
        out.append("graph has a cycle")
    return out


def _topological_order(parents: dict[str, tuple[str, ...]]):
    order, state = [], {}

    def visit(n):
        if state.get(n) == 1:
            return False
        if state.get(n) == 2:
            return True
        state[n] = 1
        for p in parents.get(n, ()):
            if not visit(p):
                return False
        state[n] = 2
        order.append(n)
        return True

    for n in parents:
        if not visit(n):
            return None
    return order


# Independence testing

def g2_test(data: np.ndarray, cards, i: int, j: int, cond=(), min_expected: float = 1.0):
    """G-squared test of X_i independent of X_j given X_cond.

    Returns ``(p_value, tested)``; when the average expected cell count
    ``n / (r_i * r_j * prod r_cond)`` is below ``min_expected`` the test is
    skipped and ``(0.0, False)`` is returned so the edge is kept.
    """
    n = data.shape[0]
    ri, rj = cards[i], cards[j]
    n_strata = int(np.prod([cards[k] for k in cond])) if cond else 1
    if n / (ri * rj * n_strata) < min_expected:
        return 0.0, False
    s = np.zeros(n, dtype=np.int64)
    for k in cond:
        s = s * cards[k] + data[:, k]
    table = np.bincount((s * ri + data[:, i]) * rj + data[:, j],
                        minlength=n_strata * ri * rj).reshape(n_strata, ri, rj).astype(float)
    n_s = table.sum(axis=(1, 2))
    keep = n_s > 0
    table, n_s = table[keep], n_s[keep]
    row = table.sum(axis=2, keepdims=True)
    col = table.sum(axis=1, keepdims=True)
    expected = row * col / n_s[:, None, None]
    nz = table > 0
    g2 = 2.0 * float(np.sum(table[nz] * np.log(table[nz] / expected[nz])))
    # degrees of freedom count only the levels actually observed in each stratum
    df = int(np.sum(np.maximum((row[:, :, 0] > 0).sum(axis=1) - 1, 0)
                    * np.maximum((col[:, 0, :] > 0).sum(axis=1) - 1, 0)))
    if df <= 0:
        return 1.0, True
    return float(chi2.sf(g2, df)), True


# Structure learning

@dataclass
class PcResult:
    names: tuple[str, ...]
    parents: dict[str, tuple[str, ...]]
    skeleton: frozenset[frozenset[str]]
    sepsets: dict[frozenset[str], tuple[str, ...]]
    n_tests: int = 0
    n_skipped: int = 0

    def edges(self) -> list[tuple[str, str]]:
        return sorted((p, c) for c, ps in self.parents.items() for p in ps)


def pc_learn_structure(data, names, cards=None, alpha: float = 0.07, max_cond: int = 3,
                       constraints: Constraints | None = None, min_expected: float = 1.0) -> PcResult:
    """PC-stable skeleton search, v-structures, Meek rules, then constrained orientation."""
    data = np.asarray(data, dtype=np.int64)
    names = tuple(names)
    m = len(names)
    cards = tuple(cards) if cards is not None else tuple(int(data[:, k].max()) + 1 for k in range(m))
    constraints = constraints or Constraints()
    adj = {k: set(range(m)) - {k} for k in range(m)}
    # pairs that no orientation can satisfy are dropped up front
    for a, b in itertools.combinations(range(m), 2):
        if not constraints.allows(names[a], names[b]) and not constraints.allows(names[b], names[a]):
            adj[a].discard(b)
            adj[b].discard(a)
    sepsets: dict[frozenset[int], tuple[int, ...]] = {}
    n_tests = n_skipped = 0
    for level in range(max_cond + 1):
        snapshot = {k: sorted(v) for k, v in adj.items()}
        if all(len(v) - 1 < level for v in snapshot.values()):
            break
        for i in range(m):
            for j in snapshot[i]:
                if j not in adj[i]:
                    continue
                others = [k for k in snapshot[i] if k != j]
                if len(others) < level:
                    continue
                for cond in itertools.combinations(others, level):
                    p, tested = g2_test(data, cards, i, j, cond, min_expected)
                    n_tests += 1
                    n_skipped += not tested
                    if tested and p > alpha:
                        adj[i].discard(j)
                        adj[j].discard(i)
                        sepsets[frozenset((i, j))] = cond
                        break
    if n_skipped:
        warnings.warn(f"{n_skipped} of {n_tests} independence tests skipped "
                      f"(average expected count below {min_expected})", SparseDataWarning, stacklevel=2)

    directed: set[tuple[int, int]] = set()

    def undirected(a, b):
        return b in adj[a] and (a, b) not in directed and (b, a) not in directed

    def orient(a, b) -> bool:
        if not undirected(a, b) or not constraints.allows(names[a], names[b]):
            return False
        directed.add((a, b))
        return True

    for k in range(m):
        for i, j in itertools.combinations(sorted(adj[k]), 2):
            if j in adj[i]:
                continue
            if k not in sepsets.get(frozenset((i, j)), ()):
                # collider i -> k <- j; keep earlier orientations on conflict
                if (k, i) not in directed and (k, j) not in directed and \
                        constraints.allows(names[i], names[k]) and constraints.allows(names[j], names[k]):
                    directed.update({(i, k), (j, k)})
    for a in range(m):
        for b in sorted(adj[a]):
            if undirected(a, b) and not constraints.allows(names[a], names[b]):
                orient(b, a)

    changed = True
    while changed:
        changed = False
        for a in range(m):
            for b in sorted(adj[a]):
                if not undirected(a, b):
                    continue
                # R1: c -> a - b, c and b non-adjacent
                if any((c, a) in directed and b not in adj[c] and c != b for c in adj[a]):
                    changed |= orient(a, b)
                # R2: a -> c -> b with a - b
                elif any((a, c) in directed and (c, b) in directed for c in adj[a] & adj[b]):
                    changed |= orient(a, b)
                # R3: a - c -> b, a - d -> b, c and d non-adjacent
                else:
                    mids = [c for c in adj[a] & adj[b] if undirected(a, c) and (c, b) in directed]
                    if any(d not in adj[c] for c, d in itertools.combinations(mids, 2)):
                        changed |= orient(a, b)

    # final DAG: directed edges first, then the rest from the earlier variable
    parents: dict[str, list[str]] = {nm: [] for nm in names}

    def creates_cycle(u, v):
        stack, seen = [u], set()
        while stack:  # is v an ancestor of u?
            w = stack.pop()
            if w == v:
                return True
            if w not in seen:
                seen.add(w)
                stack.extend(names.index(p) for p in parents[names[w]])
        return False

    def insert(u, v):
        for a, b in ((u, v), (v, u)):
            if constraints.allows(names[a], names[b]) and not creates_cycle(a, b):
                parents[names[b]].append(names[a])
                return

    for u, v in sorted(directed):
        insert(u, v)
    for a in range(m):
        for b in sorted(adj[a]):
            if a < b and undirected(a, b):
                insert(a, b)
    skeleton = frozenset(frozenset((names[a], names[b])) for a in range(m) for b in adj[a])
    return PcResult(names, {c: tuple(sorted(ps, key=names.index)) for c, ps in parents.items()},
                    skeleton, {frozenset(names[k] for k in key): tuple(names[k] for k in val)
                               for key, val in sepsets.items()}, n_tests, n_skipped)


# Parameters and inference

@dataclass
class BayesNet:
    names: tuple[str, ...]
    cards: tuple[int, ...]
    parents: dict[str, tuple[str, ...]]
    cpts: dict[str, np.ndarray]  # axes: parents in order, then the node itself

    def card(self, name: str) -> int:
        return self.cards[self.names.index(name)]

    def children(self, name: str) -> tuple[str, ...]:
        return tuple(c for c in self.names if name in self.parents[c])

    def query(self, target: str, evidence: dict[str, int]) -> np.ndarray:
        """P(target | evidence) by variable elimination."""
        factors = []
        for node in self.names:
            scope = list(self.parents[node]) + [node]
            table = self.cpts[node]
            index = tuple(int(evidence[v]) if v in evidence else slice(None) for v in scope)
            table = table[index]
            scope = [v for v in scope if v not in evidence]
            factors.append((scope, np.asarray(table, float)))
        hidden = [v for v in self.names if v != target and v not in evidence]
        for var in _elimination_order(hidden, factors):
            touching = [f for f in factors if var in f[0]]
            factors = [f for f in factors if var not in f[0]]
            scope, table = _product(touching)
            axis = scope.index(var)
            factors.append((scope[:axis] + scope[axis + 1:], table.sum(axis=axis)))
        scope, table = _product(factors)
        assert scope == [target]
        return table / table.sum()

    def influence_strength(self, parent: str, child: str) -> float:
        """Largest total-variation distance between child rows differing only in ``parent``."""
        ps = self.parents[child]
        if parent not in ps:
            raise ValueError(f"{parent} is not a parent of {child}")
        table = np.moveaxis(self.cpts[child], ps.index(parent), 0)
        best = 0.0
        for s, t in itertools.combinations(range(table.shape[0]), 2):
            tv = 0.5 * np.abs(table[s] - table[t]).sum(axis=-1)
            best = max(best, float(np.max(tv)))
        return best

    def influence_table(self) -> list[tuple[str, str, float]]:
        rows = [(p, c, self.influence_strength(p, c)) for c in self.names for p in self.parents[c]]
        return sorted(rows, key=lambda r: (-r[2], r[0], r[1]))

    def to_dict(self) -> dict:
        return {"names": list(self.names), "cards": list(self.cards),
                "parents": {k: list(v) for k, v in self.parents.items()},
                "cpts": {k: v.tolist() for k, v in self.cpts.items()}}

    @classmethod
    def from_dict(cls, d: dict) -> "BayesNet":
        return cls(tuple(d["names"]), tuple(d["cards"]), {k: tuple(v) for k, v in d["parents"].items()},
                   {k: np.array(v, float) for k, v in d["cpts"].items()})

    def to_dot(self, strengths: bool = True) -> str:
        lines = ["digraph bn {", "  rankdir=LR;"]
        for n in self.names:
            lines.append(f'  "{n}";')
        for p, c, s in sorted(self.influence_table(), key=lambda r: (r[0], r[1])):
            label = f' [label="{s:.3f}"]' if strengths else ""
            lines.append(f'  "{p}" -> "{c}"{label};')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def influence_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["parent", "child", "maximum"])
        for p, c, s in self.influence_table():
            w.writerow([p, c, f"{s:.6f}"])
        return buf.getvalue()


def _product(factors):
    scope: list[str] = []
    for s, _ in factors:
        scope += [v for v in s if v not in scope]
    letters = {v: chr(97 + k) for k, v in enumerate(scope)}
    if not factors:
        return [], np.array(1.0)
    spec = ",".join("".join(letters[v] for v in s) for s, _ in factors)
    out = "".join(letters[v] for v in scope)
    return scope, np.einsum(f"{spec}->{out}", *[t for _, t in factors])


def _elimination_order(hidden, factors):
    """Greedy min-neighbour order, ties broken by name."""
    scopes = [set(s) for s, _ in factors]
    order, remaining = [], set(hidden)
    while remaining:
        def cost(v):
            return len(set().union(*[s for s in scopes if v in s]) - {v}) if any(v in s for s in scopes) else 0
        var = min(sorted(remaining), key=cost)
        merged = set().union(*[s for s in scopes if var in s]) - {var}
        scopes = [s for s in scopes if var not in s] + [merged]
        order.append(var)
        remaining.discard(var)
    return order


def fit_cpts(data, names, cards, parents: dict[str, tuple[str, ...]], pseudocount: float = 1.0) -> BayesNet:
    """Laplace-smoothed maximum-likelihood CPTs."""
    data = np.asarray(data, dtype=np.int64)
    names = tuple(names)
    cards = tuple(cards)
    cpts = {}
    for k, node in enumerate(names):
        ps = tuple(parents.get(node, ()))
        idx = [names.index(p) for p in ps] + [k]
        shape = tuple(cards[i] for i in idx)
        flat = np.ravel_multi_index(tuple(data[:, i] for i in idx), shape) if data.size else np.array([], int)
        counts = np.bincount(flat, minlength=int(np.prod(shape))).reshape(shape).astype(float) + pseudocount
        cpts[node] = counts / counts.sum(axis=-1, keepdims=True)
    return BayesNet(names, cards, {n: tuple(parents.get(n, ())) for n in names}, cpts)


# Classifier wrapper

@dataclass(frozen=True)
class BnParams:
    alpha: float = 0.07
    max_cond: int = 3
    n_bins: int = 3
    target: str = "MF"
    min_expected: float = 1.0


@dataclass
class BnClassifier:
    discretizer: Discretizer
    net: BayesNet
    feature_names: tuple[str, ...]
    params: BnParams = field(default_factory=BnParams)

    def predict_proba(self, x) -> np.ndarray:
        codes = self.discretizer.transform(x)
        target = self.params.target
        out = np.empty(codes.shape[0])
        cache: dict[tuple, float] = {}
        for r, row in enumerate(codes):
            key = tuple(row.tolist())
            if key not in cache:
                evidence = dict(zip(self.feature_names, key))
                cache[key] = float(self.net.query(target, evidence)[1])
            out[r] = cache[key]
        return out

    def to_dict(self) -> dict:
        return {"edges": [list(e) for e in self.discretizer.edges], "net": self.net.to_dict(),
                "feature_names": list(self.feature_names), "params": self.params.__dict__.copy()}

    @classmethod
    def from_dict(cls, d: dict) -> "BnClassifier":
        return cls(Discretizer(tuple(tuple(e) for e in d["edges"])), BayesNet.from_dict(d["net"]),
                   tuple(d["feature_names"]), BnParams(**d["params"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


def train_bayes_net(x, y, feature_names=None, params: BnParams | None = None,
                    constraints: Constraints | None = None) -> BnClassifier:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y).astype(np.int64)
    params = params or BnParams()
    names = tuple(feature_names) if feature_names is not None else tuple(f"x{j}" for j in range(x.shape[1]))
    disc = fit_discretizer(x, params.n_bins)
    data = np.column_stack([disc.transform(x), y])
    all_names = names + (params.target,)
    cards = disc.cards + (2,)
    constraints = constraints or default_constraints(all_names)
    pc = pc_learn_structure(data, all_names, cards, params.alpha, params.max_cond, constraints,
                            params.min_expected)
    net = fit_cpts(data, all_names, cards, pc.parents)
    return BnClassifier(disc, net, names, params)
