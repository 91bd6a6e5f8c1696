"""Three-variable binary structures with known graphs."""

import numpy as np


def planted(kind, rng, n=5000):
    """Data for a chain, fork or (OR) collider over X, Y, Z plus the true edge set."""
    def noisy(v, p=0.25):
        return np.where(rng.random(n) < p, rng.integers(0, 2, n), v)
    a = rng.integers(0, 2, n)
    if kind == "chain":
        b = noisy(a)
        return np.column_stack([a, b, noisy(b)]), {("X", "Y"), ("Y", "Z")}
    if kind == "fork":
        return np.column_stack([noisy(a), a, noisy(a)]), {("X", "Y"), ("Y", "Z")}
    b = rng.integers(0, 2, n)
    return np.column_stack([a, b, noisy(a | b, 0.2)]), {("X", "Z"), ("Y", "Z")}
