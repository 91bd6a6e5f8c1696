import numpy as np
import pytest

from srlnsai.baselines.forest import Forest, ForestParams, train_random_forest


@pytest.fixture(scope="module")
def data():
    rng = np.random.default_rng(0)
    x = rng.random((200, 9))
    y = (x[:, 4] + 0.3 * x[:, 7] > 0.6).astype(int)
    return x, y


def test_confidence_voting_is_mean_of_trees(data):
    x, y = data
    f = train_random_forest(x, y, params=ForestParams(n_trees=15, seed=1))
    np.testing.assert_allclose(f.predict_proba(x), np.mean([t.predict_proba(x) for t in f.trees], axis=0))
    assert all(t.params.max_features == 3 for t in f.trees)


def test_accuracy_and_importance(data):
    x, y = data
    f = train_random_forest(x, y, params=ForestParams(n_trees=40, seed=2))
    assert np.mean((f.predict_proba(x) > 0.5) == y) > 0.9
    imp = f.feature_importance()
    assert imp.sum() == pytest.approx(1.0)
    assert imp.argmax() == 4


def test_seeded_and_roundtrip(data):
    x, y = data
    a = train_random_forest(x, y, params=ForestParams(n_trees=10, seed=3))
    b = train_random_forest(x, y, params=ForestParams(n_trees=10, seed=3))
    c = train_random_forest(x, y, params=ForestParams(n_trees=10, seed=4))
    np.testing.assert_array_equal(a.predict_proba(x), b.predict_proba(x))
    assert not np.array_equal(a.predict_proba(x), c.predict_proba(x))
    back = Forest.from_dict(a.to_dict())
    np.testing.assert_array_equal(back.predict_proba(x), a.predict_proba(x))


def test_single_tree_and_order_invariance(data):
    x, y = data
    one = train_random_forest(x, y, params=ForestParams(n_trees=1, seed=5))
    np.testing.assert_array_equal(one.predict_proba(x), one.trees[0].predict_proba(x))
    f = train_random_forest(x, y, params=ForestParams(n_trees=8, seed=6))
    shuffled = Forest(f.trees[::-1], f.feature_names, f.params)
    np.testing.assert_allclose(shuffled.predict_proba(x), f.predict_proba(x), atol=1e-15)
