"""C4.5-style binary decision trees on numeric features.

Splits maximise gain ratio over midpoint thresholds (restricted, as in C4.5,
to candidates whose information gain is at least the average); trees are
post-pruned by pessimistic error estimates at confidence ``pruning_confidence``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from html import escape

import numpy as np
from scipy.special import betaincinv, entr

_EPS = 1e-12


def entropy(counts) -> float:
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def gain_ratio(parent_counts, left_counts, right_counts) -> tuple[float, float]:
    """(gain ratio, information gain) of a binary split; ratio is 0 when split info vanishes."""
    parent = np.asarray(parent_counts, float)
    left, right = np.asarray(left_counts, float), np.asarray(right_counts, float)
    n = parent.sum()
    nl, nr = left.sum(), right.sum()
    gain = entropy(parent) - (nl / n) * entropy(left) - (nr / n) * entropy(right)
    split_info = entropy([nl, nr])
    if split_info <= _EPS:
        return 0.0, gain
    return min(max(gain / split_info, 0.0), 1.0), gain


def pessimistic_errors(n: float, errors: float, confidence: float) -> float:
    """Upper confidence bound on misclassifications at a leaf (exact binomial)."""
    if n <= 0:
        return 0.0
    if errors >= n:
        return float(n)
    # beta quantile, called directly: the scipy.stats wrapper dominates tree training time
    return float(n * betaincinv(errors + 1, n - errors, 1 - confidence))


@dataclass
class TreeNode:
    counts: tuple[int, int]
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None   # value <= threshold
    right: "TreeNode | None" = None  # value > threshold
    gain_ratio: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    @property
    def n(self) -> int:
        return self.counts[0] + self.counts[1]

    @property
    def label(self) -> int:
        return int(self.counts[1] > self.counts[0])

    def proba(self) -> float:
        """Laplace-smoothed P(class 1) at this node."""
        return (self.counts[1] + 1) / (self.n + 2)

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())

    def leaves(self):
        if self.is_leaf:
            yield self
        else:
            yield from self.left.leaves()
            yield from self.right.leaves()

    def to_dict(self) -> dict:
        d = {"counts": list(self.counts)}
        if not self.is_leaf:
            d.update(feature=self.feature, threshold=self.threshold, gain_ratio=self.gain_ratio,
                     left=self.left.to_dict(), right=self.right.to_dict())
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TreeNode":
        node = cls(tuple(d["counts"]))
        if "feature" in d:
            node.feature = d["feature"]
            node.threshold = d["threshold"]
            node.gain_ratio = d["gain_ratio"]
            node.left = cls.from_dict(d["left"])
            node.right = cls.from_dict(d["right"])
        return node


@dataclass(frozen=True)
class TreeParams:
    max_depth: int = 10
    pruning_confidence: float = 0.1
    min_leaf: int = 2
    prune: bool = True
    max_features: int | None = None  # None: consider every feature at every split


def _best_split_for_feature(xf: np.ndarray, y: np.ndarray, min_leaf: int):
    """Best threshold of one feature by information gain; returns (gain, ratio, threshold)."""
    order = np.argsort(xf, kind="stable")
    xs, ys = xf[order], y[order]
    n = ys.size
    ones_left = np.cumsum(ys)[:-1]
    n_left = np.arange(1, n)
    valid = (xs[1:] > xs[:-1]) & (n_left >= min_leaf) & (n - n_left >= min_leaf)
    if not valid.any():
        return None
    n_left, ones_left = n_left[valid], ones_left[valid]
    zeros_left = n_left - ones_left
    total_ones = ys.sum()
    ones_right = total_ones - ones_left
    zeros_right = (n - total_ones) - zeros_left
    n_right = n - n_left

    def h(a, b):
        tot = a + b
        return (entr(a / tot) + entr(b / tot)) / np.log(2)

    parent = entropy([n - total_ones, total_ones])
    gains = parent - (n_left / n) * h(zeros_left, ones_left) - (n_right / n) * h(zeros_right, ones_right)
    k = int(np.argmax(gains))
    split_info = h(n_left[k:k + 1].astype(float), n_right[k:k + 1].astype(float))[0]
    ratio = gains[k] / split_info if split_info > _EPS else 0.0
    pos = np.flatnonzero(valid)[k]
    threshold = (xs[pos] + xs[pos + 1]) / 2
    return float(gains[k]), float(min(max(ratio, 0.0), 1.0)), float(threshold)


def _grow(x, y, depth, params: TreeParams, rng) -> TreeNode:
    n1 = int(y.sum())
    node = TreeNode((int(y.size - n1), n1))
    if n1 == 0 or n1 == y.size or depth >= params.max_depth or y.size < 2 * params.min_leaf:
        return node
    n_feat = x.shape[1]
    if params.max_features is not None and params.max_features < n_feat:
        features = np.sort(rng.choice(n_feat, size=params.max_features, replace=False))
    else:
        features = np.arange(n_feat)
    found = []
    for f in features:
        best = _best_split_for_feature(x[:, f], y, params.min_leaf)
        if best is not None and best[0] > _EPS:
            found.append((int(f),) + best)
    if not found:
        return node
    mean_gain = np.mean([g for _, g, _, _ in found])
    eligible = [c for c in found if c[1] >= mean_gain - _EPS]
    f, _, ratio, threshold = max(eligible, key=lambda c: (c[2], c[1], -c[0]))
    go_left = x[:, f] <= threshold
    node.feature, node.threshold, node.gain_ratio = f, threshold, ratio
    node.left = _grow(x[go_left], y[go_left], depth + 1, params, rng)
    node.right = _grow(x[~go_left], y[~go_left], depth + 1, params, rng)
    return node


def _leaf_estimate(node: TreeNode, cf: float) -> float:
    return pessimistic_errors(node.n, node.n - max(node.counts), cf)


def prune_tree(node: TreeNode, confidence: float) -> float:
    """Bottom-up subtree replacement; returns the subtree's estimated errors."""
    if node.is_leaf:
        return _leaf_estimate(node, confidence)
    subtree = prune_tree(node.left, confidence) + prune_tree(node.right, confidence)
    as_leaf = _leaf_estimate(node, confidence)
    if as_leaf <= subtree + 1e-9:
        node.feature = node.threshold = node.left = node.right = None
        node.gain_ratio = 0.0
        return as_leaf
    return subtree


def estimated_errors(node: TreeNode, confidence: float) -> float:
    return sum(_leaf_estimate(leaf, confidence) for leaf in node.leaves())


@dataclass
class DecisionTree:
    root: TreeNode
    feature_names: tuple[str, ...]
    params: TreeParams = field(default_factory=TreeParams)

    def _leaf(self, row) -> TreeNode:
        node = self.root
        while not node.is_leaf:
            node = node.left if row[node.feature] <= node.threshold else node.right
        return node

    def predict_proba(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != len(self.feature_names):
            raise ValueError(f"expected {len(self.feature_names)} features, got {x.shape[1]}")
        return np.array([self._leaf(row).proba() for row in x])

    def feature_importance(self) -> np.ndarray:
        """Sum of node-share-weighted gain ratios per feature (unnormalised)."""
        imp = np.zeros(len(self.feature_names))
        total = self.root.n or 1

        def walk(node):
            if node.is_leaf:
                return
            imp[node.feature] += node.n / total * node.gain_ratio
            walk(node.left)
            walk(node.right)

        walk(self.root)
        return imp

    def to_text(self, digits: int = 3) -> str:
        lines = []

        def walk(node, indent):
            if node.is_leaf:
                return
            name = self.feature_names[node.feature]
            for op, child in ((">", node.right), ("≤", node.left)):
                head = f"{'|   ' * indent}{name} {op} {node.threshold:.{digits}f}"
                if child.is_leaf:
                    lines.append(f"{head}: {child.label} {{0={child.counts[0]}, 1={child.counts[1]}}}")
                else:
                    lines.append(head)
                    walk(child, indent + 1)

        if self.root.is_leaf:
            return f"{self.root.label} {{0={self.root.counts[0]}, 1={self.root.counts[1]}}}\n"
        walk(self.root, 0)
        return "\n".join(lines) + "\n"

    def to_svg(self, digits: int = 3) -> str:
        # leaves get consecutive x slots; internal nodes sit above their children
        slots: dict[int, float] = {}
        depth_of: dict[int, int] = {}
        counter = [0]

        def place(node, d):
            depth_of[id(node)] = d
            if node.is_leaf:
                slots[id(node)] = counter[0]
                counter[0] += 1
            else:
                place(node.left, d + 1)
                place(node.right, d + 1)
                slots[id(node)] = (slots[id(node.left)] + slots[id(node.right)]) / 2

        place(self.root, 0)
        dx, dy, w, h = 120, 70, 112, 34
        width = max(counter[0], 1) * dx + 20
        height = (self.root.depth() + 1) * dy + 20
        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
               f'font-family="sans-serif" font-size="10">']

        def xy(node):
            return 10 + slots[id(node)] * dx + dx / 2, 10 + depth_of[id(node)] * dy + h / 2

        def draw(node):
            cx, cy = xy(node)
            if not node.is_leaf:
                for child, op in ((node.left, "≤"), (node.right, ">")):
                    kx, ky = xy(child)
                    out.append(f'<line x1="{cx:.1f}" y1="{cy + h / 2:.1f}" x2="{kx:.1f}" '
                               f'y2="{ky - h / 2:.1f}" stroke="#555"/>')
                    out.append(f'<text x="{(cx + kx) / 2:.1f}" y="{(cy + ky) / 2:.1f}">'
                               f'{op} {node.threshold:.{digits}f}</text>')
                    draw(child)
                text = escape(self.feature_names[node.feature])
                fill = "#eef"
            else:
                text = f"{node.label} ({node.counts[0]}/{node.counts[1]})"
                fill = "#fdd" if node.label == 0 else "#dfd"
            out.append(f'<rect x="{cx - w / 2:.1f}" y="{cy - h / 2:.1f}" width="{w}" height="{h}" '
                       f'rx="4" fill="{fill}" stroke="#333"/>')
            out.append(f'<text x="{cx:.1f}" y="{cy + 4:.1f}" text-anchor="middle">{text}</text>')

        draw(self.root)
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def to_dict(self) -> dict:
        return {"feature_names": list(self.feature_names),
                "params": self.params.__dict__.copy(), "root": self.root.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        return cls(TreeNode.from_dict(d["root"]), tuple(d["feature_names"]), TreeParams(**d["params"]))


def train_decision_tree(x, y, feature_names=None, params: TreeParams | None = None,
                        rng: np.random.Generator | None = None) -> DecisionTree:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y).astype(int)
    params = params or TreeParams()
    names = tuple(feature_names) if feature_names is not None else tuple(f"x{j}" for j in range(x.shape[1]))
    rng = rng or np.random.default_rng(0)
    root = _grow(x, y, 0, params, rng)
    if params.prune:
        prune_tree(root, params.pruning_confidence)
    return DecisionTree(root, names, params)
