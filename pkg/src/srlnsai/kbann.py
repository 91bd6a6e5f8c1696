"""Knowledge-based artificial neural networks compiled from Horn clauses.

Every clause head becomes a sigmoid unit whose links from its antecedents are
*rule links* initialised to ``omega``; all remaining links between adjacent
layers are *background links* initialised near zero. The root clause is the
output unit. Training is full-batch gradient descent on binary cross-entropy
plus a quadratic penalty that keeps rule links close to their initial values.
"""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .dataset import FeatureSchema
from .rules import RuleSet, RuleStructureError, ruleset_for_target, validate_rules


class DivergenceError(RuntimeError):
    def __init__(self, epoch: int):
        super().__init__(f"training diverged: non-finite loss at epoch {epoch}")
        self.epoch = epoch


@dataclass(frozen=True)
class Unit:
    name: str
    kind: str  # "rule" or "free"
    antecedents: tuple[str, ...] = ()


@dataclass(eq=False)
class NetworkSpec:
    inputs: tuple[str, ...]
    layers: tuple[tuple[Unit, ...], ...]  # hidden layers first, output layer last
    masks: tuple[np.ndarray, ...]  # (units, sources) link existence per layer
    rule_masks: tuple[np.ndarray, ...]

    def sources(self, layer: int) -> list[str]:
        """Names feeding ``layer`` (0-based over ``layers``): inputs, then earlier units."""
        names = list(self.inputs)
        for units in self.layers[:layer]:
            names.extend(u.name for u in units)
        return names

    @property
    def output(self) -> Unit:
        return self.layers[-1][0]

    @property
    def hidden_units(self) -> list[Unit]:
        return [u for units in self.layers[:-1] for u in units]

    @property
    def hidden_rule_units(self) -> list[Unit]:
        return [u for u in self.hidden_units if u.kind == "rule"]

    @property
    def rule_units(self) -> list[Unit]:
        return [u for units in self.layers for u in units if u.kind == "rule"]

    @property
    def free_units(self) -> list[Unit]:
        return [u for u in self.hidden_units if u.kind == "free"]

    def fan_in(self, name: str) -> int:
        layer, row = self.locate(name)
        return int(self.masks[layer][row].sum())

    def locate(self, name: str) -> tuple[int, int]:
        for li, units in enumerate(self.layers):
            for ui, u in enumerate(units):
                if u.name == name:
                    return li, ui
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "inputs": list(self.inputs),
            "layers": [[{"name": u.name, "kind": u.kind, "antecedents": list(u.antecedents)}
                        for u in units] for units in self.layers],
            "masks": [m.astype(int).tolist() for m in self.masks],
            "rule_masks": [m.astype(int).tolist() for m in self.rule_masks],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        layers = tuple(tuple(Unit(u["name"], u["kind"], tuple(u["antecedents"])) for u in units)
                       for units in d["layers"])
        return cls(tuple(d["inputs"]), layers,
                   tuple(np.array(m, dtype=bool) for m in d["masks"]),
                   tuple(np.array(m, dtype=bool) for m in d["rule_masks"]))


def compile_network(rules: RuleSet, schema: FeatureSchema, n_free_heads: int = 1,
                    target: str | None = None) -> NetworkSpec:
    """Translate a rule set into a layered network topology.

    Hidden rule units sit at the depth of their clause; free heads join the
    first hidden layer. Each unit is linked to every unit of the layer directly
    below it, plus rule links to antecedents deeper down. Free heads always
    feed the output.
    """
    if not rules.clauses:
        raise RuleStructureError("cannot compile an empty rule set")
    if n_free_heads < 0:
        raise ValueError("n_free_heads must be non-negative")
    if target is not None:
        rules = ruleset_for_target(rules, target)
    roots = rules.roots
    if len(roots) != 1:
        raise RuleStructureError(f"expected exactly one root clause, found {roots}")
    validate_rules(rules, schema)

    depth = rules.depth()
    root = roots[0]
    n_hidden = max(depth[root] - 1, 1 if n_free_heads else 0)
    hidden: list[list[Unit]] = [[] for _ in range(n_hidden)]
    for clause in rules.clauses:
        if clause.head != root:
            hidden[depth[clause.head] - 1].append(Unit(clause.head, "rule", clause.body))
    for k in range(n_free_heads):
        hidden[0].append(Unit(f"head{k + 1}", "free"))
    layers = [tuple(h) for h in hidden] + [(Unit(root, "rule", rules.clause(root).body),)]

    inputs = tuple(schema.predictors)
    masks, rule_masks = [], []
    offsets = [0, len(inputs)]
    for units in layers[:-1]:
        offsets.append(offsets[-1] + len(units))
    names = list(inputs)
    for li, units in enumerate(layers):
        n_src = len(names)
        mask = np.zeros((len(units), n_src), dtype=bool)
        rmask = np.zeros_like(mask)
        mask[:, offsets[li]:offsets[li + 1]] = True
        for ui, u in enumerate(units):
            for s in u.antecedents:
                j = names.index(s)
                mask[ui, j] = rmask[ui, j] = True
            if li == len(layers) - 1:
                for f in range(n_free_heads):
                    mask[ui, names.index(f"head{f + 1}")] = True
        masks.append(mask)
        rule_masks.append(rmask)
        names.extend(u.name for u in units)
    return NetworkSpec(inputs, tuple(layers), tuple(masks), tuple(rule_masks))


BIAS_MODES = ("conjunctive", "soft", "midpoint")


def rule_bias(n_antecedents: int, omega: float, mode: str) -> float:
    """Threshold of a rule unit with ``n_antecedents`` links of weight ``omega``.

    ``conjunctive`` fires only when every antecedent is near 1; ``midpoint``
    sits halfway, which suits graded inputs in [0, 1]; ``soft`` fires on any.
    """
    if mode == "conjunctive":
        return -(n_antecedents - 0.5) * omega
    if mode == "midpoint":
        return -0.5 * n_antecedents * omega
    if mode == "soft":
        return -0.5 * omega
    return 0.0


@dataclass(frozen=True)
class KbannParams:
    omega: float = 4.0
    eps0: float = 0.05
    lam: float = 0.01
    dropout: float = 0.2
    lr: float = 0.001
    epochs: int = 100
    bias_mode: str = "conjunctive"  # hidden rule units: "conjunctive", "soft" or "midpoint"
    output_bias_mode: str = "zero"  # output unit: "zero", "conjunctive" or "midpoint"
    n_free_heads: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.omega <= 0:
            raise ValueError("omega must be positive")
        if self.eps0 < 0:
            raise ValueError("eps0 must be non-negative")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must lie in [0, 1)")
        if self.bias_mode not in BIAS_MODES:
            raise ValueError(f"unknown bias_mode {self.bias_mode!r}")
        if self.output_bias_mode not in ("zero",) + BIAS_MODES:
            raise ValueError(f"unknown output_bias_mode {self.output_bias_mode!r}")


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass(eq=False)
class KbannModel:
    spec: NetworkSpec
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    anchors: list[np.ndarray]
    params: KbannParams
    loss_trace: list[float] = field(default_factory=list)
    valid_trace: list[float] = field(default_factory=list)
    trained: bool = False

    # -- forward / backward -------------------------------------------------

    def _forward(self, x: np.ndarray, drop_masks=None):
        """Source activations per block (dropout applied), raw hidden activations, output logit."""
        acts, raws = [x], []
        n_layers = len(self.weights)
        for li in range(n_layers):
            src = acts[0] if li == 0 else np.concatenate(acts, axis=1)
            z = src @ self.weights[li].T + self.biases[li]
            if li == n_layers - 1:
                return acts, raws, z[:, 0]
            a = _sigmoid(z)
            raws.append(a)
            acts.append(a if drop_masks is None else a * drop_masks[li])
        raise AssertionError("network without output layer")

    def predict_proba(self, x) -> np.ndarray:
        """P(High) for each row of ``x``; dropout is never applied here."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != len(self.spec.inputs):
            raise ValueError(f"expected {len(self.spec.inputs)} inputs, got {x.shape[1]}")
        *_, logit = self._forward(x)
        return _sigmoid(logit)

    def data_loss(self, x, y, drop_masks=None) -> float:
        *_, logit = self._forward(x, drop_masks)
        return float(np.mean(_bce_from_logits(logit, y)))

    def penalty(self) -> float:
        lam = self.params.lam
        return float(lam * sum(np.sum(((w - w0) * rm) ** 2) for w, w0, rm in
                               zip(self.weights, self.anchors, self.spec.rule_masks)))

    def loss(self, x, y, drop_masks=None) -> float:
        return self.data_loss(x, y, drop_masks) + self.penalty()

    def gradients(self, x, y, drop_masks=None, penalty: bool = True):
        """Gradients of :meth:`loss` w.r.t. weights and biases (masked to real links).

        ``penalty=False`` leaves out the alignment term (the trainer applies it implicitly).
        """
        acts, raws, logit = self._forward(x, drop_masks)
        n = x.shape[0]
        n_layers = len(self.weights)
        gw = [None] * n_layers
        gb = [None] * n_layers
        # gradient reaching each source block; block 0 (the inputs) is not needed
        g_act = [np.zeros_like(a) for a in acts]
        delta = ((_sigmoid(logit) - y) / n)[:, None]
        for li in range(n_layers - 1, -1, -1):
            if li < n_layers - 1:
                g = g_act[li + 1]
                if drop_masks is not None:
                    g = g * drop_masks[li]
                a = raws[li]
                delta = g * a * (1 - a)
            src = acts[0] if li == 0 else np.concatenate(acts[:li + 1], axis=1)
            gw[li] = (delta.T @ src) * self.spec.masks[li]
            gb[li] = delta.sum(axis=0)
            back = delta @ self.weights[li]
            start = 0
            for k in range(li + 1):
                width = acts[k].shape[1]
                if k > 0:
                    g_act[k] += back[:, start:start + width]
                start += width
        if penalty:
            lam = self.params.lam
            for li in range(n_layers):
                gw[li] = gw[li] + 2 * lam * (self.weights[li] - self.anchors[li]) * self.spec.rule_masks[li]
        return gw, gb

    # -- flat parameter view (gradient checks) -------------------------------

    def flat_params(self) -> np.ndarray:
        parts = []
        for w, b, m in zip(self.weights, self.biases, self.spec.masks):
            parts.extend([w[m], b])
        return np.concatenate(parts)

    def set_flat_params(self, theta: np.ndarray) -> None:
        pos = 0
        for li, m in enumerate(self.spec.masks):
            k = int(m.sum())
            w = np.zeros(m.shape)
            w[m] = theta[pos:pos + k]
            pos += k
            self.weights[li] = w
            nb = self.biases[li].size
            self.biases[li] = np.array(theta[pos:pos + nb], dtype=float)
            pos += nb

    def flat_gradient(self, x, y) -> np.ndarray:
        gw, gb = self.gradients(x, y)
        parts = []
        for w, b, m in zip(gw, gb, self.spec.masks):
            parts.extend([w[m], b])
        return np.concatenate(parts)

    # -- persistence ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "anchors": [a.tolist() for a in self.anchors],
            "params": asdict(self.params),
            "loss_trace": list(self.loss_trace),
            "valid_trace": list(self.valid_trace),
            "trained": self.trained,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KbannModel":
        spec = NetworkSpec.from_dict(d["spec"])
        return cls(spec,
                   [np.array(w, dtype=float).reshape(m.shape) for w, m in zip(d["weights"], spec.masks)],
                   [np.array(b, dtype=float) for b in d["biases"]],
                   [np.array(a, dtype=float).reshape(m.shape) for a, m in zip(d["anchors"], spec.masks)],
                   KbannParams(**d["params"]), list(d["loss_trace"]), list(d["valid_trace"]),
                   d["trained"])


def _bce_from_logits(logit: np.ndarray, y: np.ndarray) -> np.ndarray:
    # log(1 + e^z) - y z, computed without overflow
    return np.logaddexp(0.0, logit) - y * logit


def init_weights(spec: NetworkSpec, params: KbannParams | None = None, **overrides) -> KbannModel:
    """Rule links get ``omega``, other links ``U(-eps0, eps0)``.

    Hidden rule-unit biases come from :func:`rule_bias` with ``bias_mode``;
    free heads start at zero and the output unit uses ``output_bias_mode``
    over its rule antecedents.
    """
    params = replace(params or KbannParams(), **overrides)
    rng = np.random.default_rng(params.seed)
    weights, biases, anchors = [], [], []
    last = len(spec.layers) - 1
    for li, (units, mask, rmask) in enumerate(zip(spec.layers, spec.masks, spec.rule_masks)):
        noise = rng.uniform(-params.eps0, params.eps0, size=mask.shape) if params.eps0 > 0 \
            else np.zeros(mask.shape)
        w = np.where(rmask, params.omega, np.where(mask, noise, 0.0))
        b = np.zeros(len(units))
        mode = params.output_bias_mode if li == last else params.bias_mode
        for ui, u in enumerate(units):
            if u.kind == "rule":
                b[ui] = rule_bias(len(u.antecedents), params.omega, mode)
        weights.append(w)
        biases.append(b)
        anchors.append(np.where(rmask, w, 0.0))
    return KbannModel(spec, weights, biases, anchors, params)


def train_kbann(model: KbannModel, x, y, valid: tuple | None = None) -> KbannModel:
    """Full-batch gradient descent with an implicit step for the alignment penalty.

    ``loss_trace[e]`` is the objective (cross-entropy plus alignment penalty,
    without dropout) after ``e`` updates, so it has ``epochs + 1`` entries.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m = copy.deepcopy(model)
    p = m.params
    # a separate stream from the initialisation draws
    rng = np.random.default_rng([p.seed, 1])
    hidden_sizes = [len(units) for units in m.spec.layers[:-1]]
    shrink = 2.0 * p.lr * p.lam

    def record(epoch: int) -> None:
        value = m.loss(x, y)
        if not np.isfinite(value):
            raise DivergenceError(epoch)
        m.loss_trace.append(value)
        if valid is not None:
            m.valid_trace.append(m.data_loss(np.asarray(valid[0], float), np.asarray(valid[1], float)))

    m.loss_trace, m.valid_trace = [], []
    record(0)
    for epoch in range(1, p.epochs + 1):
        drop = None
        if p.dropout > 0:
            keep = 1.0 - p.dropout
            drop = [(rng.random((x.shape[0], k)) < keep) / keep for k in hidden_sizes]
        gw, gb = m.gradients(x, y, drop, penalty=False)
        for li in range(len(m.weights)):
            w = m.weights[li] - p.lr * gw[li]
            # implicit step on the alignment penalty: stable for any lam, and equal
            # to the explicit gradient step to first order in lr * lam
            pulled = (w + shrink * m.anchors[li]) / (1.0 + shrink)
            m.weights[li] = np.where(m.spec.rule_masks[li], pulled, w)
            m.biases[li] = m.biases[li] - p.lr * gb[li]
        record(epoch)
    m.trained = True
    return m


def predict_kbann(model: KbannModel, x) -> np.ndarray:
    return model.predict_proba(x)


def grad_check(model: KbannModel, x, y, h: float = 1e-5) -> float:
    """Max relative error of the analytic gradient (dropout off) vs finite differences."""
    from .gradcheck import max_relative_error

    probe = copy.deepcopy(model)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)

    def loss(theta):
        probe.set_flat_params(theta)
        return probe.loss(x, y)

    def grad(theta):
        probe.set_flat_params(theta)
        return probe.flat_gradient(x, y)

    return max_relative_error(loss, grad, model.flat_params(), h)
