"""Central finite-difference gradient checking shared by the neural models."""

from __future__ import annotations

from typing import Callable

import numpy as np


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> np.ndarray:
    a, n = np.abs(analytic), np.abs(numeric)
    return np.abs(analytic - numeric) / np.maximum(np.maximum(a, n), floor)


def numeric_gradient(loss: Callable[[np.ndarray], float], theta: np.ndarray,
                     h: float = 1e-5) -> np.ndarray:
    theta = np.array(theta, dtype=float)
    grad = np.zeros_like(theta)
    for i in range(theta.size):
        old = theta[i]
        theta[i] = old + h
        up = loss(theta)
        theta[i] = old - h
        down = loss(theta)
        theta[i] = old
        grad[i] = (up - down) / (2 * h)
    return grad


def max_relative_error(loss: Callable[[np.ndarray], float],
                       grad: Callable[[np.ndarray], np.ndarray],
                       theta: np.ndarray, h: float = 1e-5) -> float:
    """Largest relative error between ``grad(theta)`` and finite differences of ``loss``."""
    analytic = np.asarray(grad(np.array(theta, dtype=float)), dtype=float)
    numeric = numeric_gradient(loss, theta, h)
    return float(relative_error(analytic, numeric).max()) if theta.size else 0.0
