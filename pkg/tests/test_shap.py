import itertools
import math

import numpy as np
import pytest

from srlnsai.shap import kernel_shap_local, kernel_weight, sample_background, shap_global


def _brute_force_shapley(f, background, x):
    """Permutation-average of marginal contributions with the interventional value function."""
    m = x.size

    def value(subset):
        rows = background.copy()
        rows[:, list(subset)] = x[list(subset)]
        return f(rows).mean()

    phi = np.zeros(m)
    for perm in itertools.permutations(range(m)):
        seen = []
        for j in perm:
            phi[j] += value(seen + [j]) - value(seen)
            seen.append(j)
    return phi / math.factorial(m)


def test_linear_model_attributions():
    f = lambda z: 2 * z[:, 0] + 3 * z[:, 1]
    e = kernel_shap_local(f, np.zeros((1, 2)), np.array([1.0, 1.0]))
    np.testing.assert_allclose(e.phi, [2.0, 3.0], atol=1e-10)
    assert e.base_value == 0 and e.prediction == 5


def test_matches_brute_force_with_interactions():
    rng = np.random.default_rng(0)
    f = lambda z: np.tanh(z[:, 0] * z[:, 1]) + z[:, 2] ** 2 - z[:, 0] * z[:, 3]
    bg = rng.normal(size=(7, 4))
    x = rng.normal(size=4)
    e = kernel_shap_local(f, bg, x)
    np.testing.assert_allclose(e.phi, _brute_force_shapley(f, bg, x), atol=1e-10)


def test_symmetry_and_product():
    f = lambda z: z[:, 0] * z[:, 1]
    e = kernel_shap_local(f, np.zeros((1, 3)), np.array([1.0, 1.0, 4.0]))
    np.testing.assert_allclose(e.phi, [0.5, 0.5, 0.0], atol=1e-12)


def test_sampling_with_full_budget_equals_exact():
    rng = np.random.default_rng(1)
    w = rng.normal(size=8)
    f = lambda z: np.sin(z @ w)
    bg, x = rng.normal(size=(5, 8)), rng.normal(size=8)
    exact = kernel_shap_local(f, bg, x)
    sampled = kernel_shap_local(f, bg, x, n_samples=2 ** 8, rng=np.random.default_rng(2))
    np.testing.assert_allclose(sampled.phi, exact.phi, atol=1e-9)


def test_sampling_error_shrinks_with_budget():
    rng = np.random.default_rng(3)
    w = rng.normal(size=12)
    f = lambda z: np.tanh(z @ w) * z[:, 0]
    bg, x = rng.normal(size=(10, 12)), rng.normal(size=12)
    exact = kernel_shap_local(f, bg, x).phi
    errs = []
    for budget in (60, 400, 2000):
        e = kernel_shap_local(f, bg, x, n_samples=budget, rng=np.random.default_rng(4))
        errs.append(np.abs(e.phi - exact).max())
        assert e.phi.sum() == pytest.approx(e.prediction - e.base_value)
    assert errs[2] < errs[0] and errs[2] < 1e-2


def test_argument_checks():
    f = lambda z: z.sum(axis=1)
    with pytest.raises(ValueError, match="exact mode"):
        kernel_shap_local(f, np.zeros((1, 16)), np.ones(16))
    with pytest.raises(ValueError, match="n_samples"):
        kernel_shap_local(f, np.zeros((1, 5)), np.ones(5), n_samples=6)
    with pytest.raises(ValueError):
        kernel_shap_local(f, np.zeros((0, 5)), np.ones(5))


def test_kernel_weight():
    assert kernel_weight(4, 0) == np.inf
    assert kernel_weight(4, 1) == pytest.approx(3 / (4 * 1 * 3))
    assert kernel_weight(4, 2) == pytest.approx(3 / (6 * 2 * 2))


def test_global_ranking_and_constant_model():
    rng = np.random.default_rng(5)
    bg = rng.random((20, 3))
    rows = rng.random((6, 3))
    g = shap_global(lambda z: 5 * z[:, 2] + 0.1 * z[:, 0], bg, rows, n_samples=None,
                    feature_names=["a", "b", "c"])
    assert [n for n, _ in g.ranking()] == ["c", "a", "b"]
    assert g.ranking_csv().splitlines()[0] == "feature,mean_abs_shap"
    assert len(g.beeswarm_csv().splitlines()) == 1 + 6 * 3
    flat = shap_global(lambda z: np.full(z.shape[0], 0.3), bg, rows)
    np.testing.assert_allclose(flat.mean_abs, 0.0, atol=1e-12)


def test_background_sample():
    x = np.arange(300.0).reshape(150, 2)
    bg = sample_background(x, 100, seed=1)
    assert bg.shape == (100, 2) and len({tuple(r) for r in bg}) == 100
    np.testing.assert_array_equal(sample_background(x, 100, seed=1), bg)
    assert sample_background(x[:10], 100).shape == (10, 2)


def test_single_feature_model_ranks_first():
    rng = np.random.default_rng(6)
    g = shap_global(lambda z: -4 * z[:, 1], rng.random((10, 4)), rng.random((5, 4)), n_samples=None,
                    feature_names=list("abcd"))
    assert g.ranking()[0][0] == "b"
    np.testing.assert_allclose(g.mean_abs[[0, 2, 3]], 0.0, atol=1e-9)
