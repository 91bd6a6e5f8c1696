"""Feed-forward network (ReLU hidden layers, sigmoid output) trained with Adam."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class MlpParams:
    hidden: tuple[int, ...] = (64, 32)
    lr: float = 0.001
    epochs: int = 100
    batch_size: int = 32
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0


@dataclass
class MlpModel:
    weights: list[np.ndarray]  # (fan_out, fan_in) per layer
    biases: list[np.ndarray]
    feature_names: tuple[str, ...]
    params: MlpParams = field(default_factory=MlpParams)
    loss_trace: list[float] = field(default_factory=list)

    def _forward(self, x):
        acts, pre = [x], []
        for li, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = acts[-1] @ w.T + b
            pre.append(z)
            acts.append(np.maximum(z, 0.0) if li < len(self.weights) - 1 else z)
        return acts, pre

    def predict_proba(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.weights[0].shape[1]:
            raise ValueError(f"expected {self.weights[0].shape[1]} features, got {x.shape[1]}")
        acts, _ = self._forward(x)
        return 1.0 / (1.0 + np.exp(-acts[-1][:, 0]))

    def loss(self, x, y) -> float:
        acts, _ = self._forward(x)
        z = acts[-1][:, 0]
        return float(np.mean(np.logaddexp(0.0, z) - y * z))

    def gradients(self, x, y):
        acts, pre = self._forward(x)
        z = acts[-1][:, 0]
        delta = ((1.0 / (1.0 + np.exp(-z)) - y) / x.shape[0])[:, None]
        gw, gb = [None] * len(self.weights), [None] * len(self.weights)
        for li in range(len(self.weights) - 1, -1, -1):
            gw[li] = delta.T @ acts[li]
            gb[li] = delta.sum(axis=0)
            if li:
                delta = (delta @ self.weights[li]) * (pre[li - 1] > 0)
        return gw, gb

    def flat_params(self) -> np.ndarray:
        return np.concatenate([p.ravel() for pair in zip(self.weights, self.biases) for p in pair])

    def set_flat_params(self, theta) -> None:
        pos = 0
        for li in range(len(self.weights)):
            for store in (self.weights, self.biases):
                k = store[li].size
                store[li] = np.asarray(theta[pos:pos + k], float).reshape(store[li].shape)
                pos += k

    def flat_gradient(self, x, y) -> np.ndarray:
        gw, gb = self.gradients(x, y)
        return np.concatenate([p.ravel() for pair in zip(gw, gb) for p in pair])

    def to_dict(self) -> dict:
        params = self.params.__dict__.copy()
        params["hidden"] = list(params["hidden"])
        return {"weights": [w.tolist() for w in self.weights], "biases": [b.tolist() for b in self.biases],
                "feature_names": list(self.feature_names), "params": params,
                "loss_trace": list(self.loss_trace)}

    @classmethod
    def from_dict(cls, d: dict) -> "MlpModel":
        params = dict(d["params"])
        params["hidden"] = tuple(params["hidden"])
        return cls([np.array(w, float) for w in d["weights"]], [np.array(b, float) for b in d["biases"]],
                   tuple(d["feature_names"]), MlpParams(**params), list(d["loss_trace"]))


def init_mlp(n_inputs: int, params: MlpParams | None = None, feature_names=None) -> MlpModel:
    """Glorot-uniform weights, zero biases."""
    params = params or MlpParams()
    rng = np.random.default_rng(params.seed)
    sizes = [n_inputs, *params.hidden, 1]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    names = tuple(feature_names) if feature_names is not None else tuple(f"x{j}" for j in range(n_inputs))
    return MlpModel(weights, biases, names, params)


def train_mlp(x, y, feature_names=None, params: MlpParams | None = None) -> MlpModel:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    params = params or MlpParams()
    model = init_mlp(x.shape[1], params, feature_names)
    rng = np.random.default_rng([params.seed, 1])
    m = [np.zeros_like(p) for pair in zip(model.weights, model.biases) for p in pair]
    v = [np.zeros_like(p) for p in m]
    step = 0
    for epoch in range(params.epochs):
        order = rng.permutation(y.size)
        for start in range(0, y.size, params.batch_size):
            idx = order[start:start + params.batch_size]
            gw, gb = model.gradients(x[idx], y[idx])
            grads = [g for pair in zip(gw, gb) for g in pair]
            step += 1
            c1 = 1 - params.beta1 ** step
            c2 = 1 - params.beta2 ** step
            for k, g in enumerate(grads):
                m[k] = params.beta1 * m[k] + (1 - params.beta1) * g
                v[k] = params.beta2 * v[k] + (1 - params.beta2) * g * g
                update = params.lr * (m[k] / c1) / (np.sqrt(v[k] / c2) + params.eps)
                store = model.weights if k % 2 == 0 else model.biases
                store[k // 2] = store[k // 2] - update
        loss = model.loss(x, y)
        if not np.isfinite(loss):
            raise DivergenceError(f"training diverged: non-finite loss at epoch {epoch + 1}")
        model.loss_trace.append(loss)
    return model


def grad_check(model: MlpModel, x, y, h: float = 1e-5) -> float:
    from ..gradcheck import max_relative_error
    import copy

    probe = copy.deepcopy(model)
    x = np.asarray(x, float)
    y = np.asarray(y, float)

    def loss(theta):
        probe.set_flat_params(theta)
        return probe.loss(x, y)

    def grad(theta):
        probe.set_flat_params(theta)
        return probe.flat_gradient(x, y)

    return max_relative_error(loss, grad, model.flat_params(), h)
