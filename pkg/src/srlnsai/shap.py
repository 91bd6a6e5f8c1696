"""Model-agnostic KernelSHAP attributions.

The value of a coalition is the model output averaged over the background
rows with the absent features taken from the background. Attributions solve
the Shapley-kernel weighted least-squares problem with the efficiency
constraint eliminated exactly (the last feature's attribution is implied).
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass
from math import comb
from typing import Callable, Sequence

import numpy as np

from .plots import beeswarm, force_plot

MAX_EXACT_FEATURES = 15


@dataclass(frozen=True)
class Explanation:
    base_value: float
    phi: np.ndarray
    prediction: float
    x: np.ndarray
    feature_names: tuple[str, ...]

    def to_dict(self) -> dict:
        return {"base_value": self.base_value, "prediction": self.prediction,
                "attributions": {n: float(p) for n, p in zip(self.feature_names, self.phi)},
                "values": {n: float(v) for n, v in zip(self.feature_names, self.x)}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def to_svg(self, title: str = "Local explanation") -> str:
        return force_plot(self.feature_names, self.phi, self.base_value, self.prediction, title)


def kernel_weight(m: int, size: int) -> float:
    """Shapley kernel weight of one coalition of ``size`` features out of ``m``."""
    if size in (0, m):
        return np.inf
    return (m - 1) / (comb(m, size) * size * (m - size))


def _coalition_values(predict, background: np.ndarray, x: np.ndarray, masks: np.ndarray) -> np.ndarray:
    n_bg = background.shape[0]
    rows = np.where(masks[:, None, :], x[None, None, :], background[None, :, :])
    out = np.asarray(predict(rows.reshape(-1, x.size)), dtype=float)
    return out.reshape(masks.shape[0], n_bg).mean(axis=1)


def _all_masks(m: int) -> tuple[np.ndarray, np.ndarray]:
    masks, weights = [], []
    for size in range(1, m):
        w = kernel_weight(m, size)
        for members in itertools.combinations(range(m), size):
            z = np.zeros(m, dtype=bool)
            z[list(members)] = True
            masks.append(z)
            weights.append(w)
    return np.array(masks).reshape(-1, m), np.array(weights)


def _sampled_masks(m: int, n_samples: int, rng: np.random.Generator):
    """Fill whole coalition sizes (paired with their complements) while the budget allows,
    then sample the remaining sizes in proportion to their kernel mass."""
    sizes = list(range(1, (m - 1) // 2 + 1))
    if (m - 1) % 2 == 1:
        sizes.append((m - 1) // 2 + 1)  # the middle size pairs with itself when m is even
    mass = {s: (m - 1) / (s * (m - s)) for s in range(1, m)}
    masks, weights = [], []
    budget = n_samples
    remaining = list(sizes)
    for s in sizes:
        paired = s != m - s
        count = comb(m, s) * (2 if paired else 1)
        if count > budget:
            break
        for members in itertools.combinations(range(m), s):
            z = np.zeros(m, dtype=bool)
            z[list(members)] = True
            masks.append(z)
            weights.append(kernel_weight(m, s))
            if paired:
                masks.append(~z)
                weights.append(kernel_weight(m, m - s))
        budget -= count
        remaining.remove(s)
    if remaining and budget >= 2:
        left_mass = np.array([mass[s] + (mass[m - s] if s != m - s else 0.0) for s in remaining])
        probs = left_mass / left_mass.sum()
        n_pairs = budget // 2
        per_pair = left_mass.sum() / n_pairs
        for _ in range(n_pairs):
            s = remaining[int(rng.choice(len(remaining), p=probs))]
            z = np.zeros(m, dtype=bool)
            z[rng.choice(m, size=s, replace=False)] = True
            # each draw stands for its complement too; split the weight between them
            masks += [z, ~z]
            weights += [per_pair / 2, per_pair / 2]
    return np.array(masks).reshape(-1, m), np.array(weights, dtype=float)


def _solve(masks, weights, values, base, fx):
    m = masks.shape[1]
    z = masks.astype(float)
    target = values - base - z[:, -1] * (fx - base)
    design = z[:, :-1] - z[:, -1:]
    sw = np.sqrt(weights)
    head, *_ = np.linalg.lstsq(design * sw[:, None], target * sw, rcond=None)
    phi = np.empty(m)
    phi[:-1] = head
    phi[-1] = (fx - base) - head.sum()
    return phi


def kernel_shap_local(predict: Callable, background, x, n_samples: int | None = None,
                      rng: np.random.Generator | None = None,
                      feature_names: Sequence[str] | None = None) -> Explanation:
    """Explain ``predict(x)``; ``n_samples=None`` enumerates every coalition."""
    background = np.atleast_2d(np.asarray(background, dtype=float))
    x = np.asarray(x, dtype=float).ravel()
    if background.shape[0] == 0:
        raise ValueError("background must contain at least one row")
    m = x.size
    names = tuple(feature_names) if feature_names is not None else tuple(f"x{j}" for j in range(m))
    base = float(np.mean(predict(background)))
    fx = float(np.asarray(predict(x[None, :]), dtype=float)[0])
    if m == 1:
        return Explanation(base, np.array([fx - base]), fx, x, names)
    if n_samples is None:
        if m > MAX_EXACT_FEATURES:
            raise ValueError(f"exact mode supports at most {MAX_EXACT_FEATURES} features, got {m}")
        masks, weights = _all_masks(m)
    else:
        if n_samples < m + 2:
            raise ValueError(f"n_samples must be at least {m + 2} for {m} features")
        masks, weights = _sampled_masks(m, n_samples, rng or np.random.default_rng(0))
    values = _coalition_values(predict, background, x, masks)
    return Explanation(base, _solve(masks, weights, values, base, fx), fx, x, names)


@dataclass(frozen=True)
class GlobalExplanation:
    feature_names: tuple[str, ...]
    phis: np.ndarray    # (rows, features)
    values: np.ndarray  # (rows, features)
    base_value: float

    @property
    def mean_abs(self) -> np.ndarray:
        return np.abs(self.phis).mean(axis=0)

    def ranking(self) -> list[tuple[str, float]]:
        order = sorted(range(len(self.feature_names)), key=lambda j: (-self.mean_abs[j], j))
        return [(self.feature_names[j], float(self.mean_abs[j])) for j in order]

    def ranking_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["feature", "mean_abs_shap"])
        for name, v in self.ranking():
            w.writerow([name, f"{v:.6f}"])
        return buf.getvalue()

    def beeswarm_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row", "feature", "value", "shap"])
        for r in range(self.phis.shape[0]):
            for j, name in enumerate(self.feature_names):
                w.writerow([r, name, f"{self.values[r, j]:.6f}", f"{self.phis[r, j]:.6f}"])
        return buf.getvalue()

    def to_svg(self, title: str = "Global explanation") -> str:
        order = [n for n, _ in self.ranking()]
        points = {n: [(float(self.values[r, j]), float(self.phis[r, j])) for r in range(self.phis.shape[0])]
                  for j, n in enumerate(self.feature_names)}
        return beeswarm(order, points, title)


def shap_global(predict: Callable, background, rows, n_samples: int | None = None, seed: int = 0,
                feature_names: Sequence[str] | None = None) -> GlobalExplanation:
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.shape[0] == 0:
        raise ValueError("need at least one row to explain")
    rng = np.random.default_rng(seed)
    expl = [kernel_shap_local(predict, background, r, n_samples, rng, feature_names) for r in rows]
    return GlobalExplanation(expl[0].feature_names, np.array([e.phi for e in expl]), rows,
                             expl[0].base_value)


def sample_background(x, size: int = 100, seed: int = 0) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[0] <= size:
        return x.copy()
    idx = np.sort(np.random.default_rng(seed).choice(x.shape[0], size=size, replace=False))
    return x[idx]
