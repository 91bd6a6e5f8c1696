"""Kernel logistic regression with the dot kernel.

With a linear kernel the model is L2-regularised logistic regression, so it is
fitted in the primal by iteratively reweighted least squares (Newton steps).
Dual coefficients are recovered from the optimality condition
``w = sum_i alpha_i x_i`` with ``alpha_i = C * y_i * sigmoid(-y_i f(x_i))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class KlrParams:
    C: float = 1.0
    epsilon: float = 0.001
    max_iter: int = 100_000
    kernel: str = "dot"
    kernel_cache: int = 200  # accepted for parity with the original tool; unused by the dot kernel

    def __post_init__(self):
        if self.kernel != "dot":
            raise ValueError("only the dot kernel is supported")
        if self.C <= 0:
            raise ValueError("C must be positive")


@dataclass
class KernelLrModel:
    weights: np.ndarray
    bias: float
    alphas: np.ndarray
    feature_names: tuple[str, ...]
    params: KlrParams = field(default_factory=KlrParams)
    converged: bool = True
    n_iter: int = 0

    def decision_function(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.weights.size:
            raise ValueError(f"expected {self.weights.size} features, got {x.shape[1]}")
        return x @ self.weights + self.bias

    def predict_proba(self, x) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-self.decision_function(x)))

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "bias": self.bias, "alphas": self.alphas.tolist(),
                "feature_names": list(self.feature_names), "params": self.params.__dict__.copy(),
                "converged": self.converged, "n_iter": self.n_iter}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelLrModel":
        return cls(np.array(d["weights"], float), float(d["bias"]), np.array(d["alphas"], float),
                   tuple(d["feature_names"]), KlrParams(**d["params"]), d["converged"], d["n_iter"])


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def train_klr(x, y, feature_names=None, params: KlrParams | None = None) -> KernelLrModel:
    """Minimise ``sum log(1 + exp(-y f)) + ||w||^2 / (2C)`` with an unpenalised bias."""
    x = np.asarray(x, dtype=float)
    y01 = np.asarray(y).astype(float)
    params = params or KlrParams()
    names = tuple(feature_names) if feature_names is not None else tuple(f"x{j}" for j in range(x.shape[1]))
    n, d = x.shape
    xa = np.hstack([x, np.ones((n, 1))])
    reg = np.full(d + 1, 1.0 / params.C)
    reg[-1] = 0.0
    theta = np.zeros(d + 1)
    converged = False
    it = 0
    for it in range(1, params.max_iter + 1):
        p = _sigmoid(xa @ theta)
        grad = xa.T @ (p - y01) + reg * theta
        s = p * (1 - p)
        hess = (xa * s[:, None]).T @ xa + np.diag(reg)
        # tiny ridge keeps the bias row solvable on separable data
        step = np.linalg.solve(hess + 1e-12 * np.eye(d + 1), grad)
        theta = theta - step
        if np.max(np.abs(step)) < params.epsilon:
            converged = True
            break
    w, b = theta[:d], float(theta[d])
    ypm = 2 * y01 - 1
    alphas = params.C * ypm * _sigmoid(-ypm * (x @ w + b))
    return KernelLrModel(w, b, alphas, names, params, converged, it)
