import numpy as np
import pytest
from scipy.optimize import minimize

from srlnsai.baselines.klr import KernelLrModel, KlrParams, train_klr


def _data(seed=0, n=120, d=4):
    rng = np.random.default_rng(seed)
    x = rng.random((n, d))
    y = (x @ rng.normal(size=d) + rng.normal(0, 0.5, n) > 0).astype(int)
    return x, y


def _objective(theta, x, ypm, C):
    w, b = theta[:-1], theta[-1]
    return np.sum(np.logaddexp(0.0, -ypm * (x @ w + b))) + w @ w / (2 * C)


@pytest.mark.parametrize("C", [0.1, 1.0, 10.0])
def test_matches_generic_optimiser(C):
    x, y = _data()
    model = train_klr(x, y, params=KlrParams(C=C, epsilon=1e-10))
    assert model.converged
    ref = minimize(_objective, np.zeros(x.shape[1] + 1), args=(x, 2 * y - 1, C), method="BFGS",
                   options={"gtol": 1e-10})
    np.testing.assert_allclose(np.append(model.weights, model.bias), ref.x, atol=1e-6)


def test_duals_reproduce_primal():
    x, y = _data(1)
    model = train_klr(x, y, params=KlrParams(C=2.0, epsilon=1e-10))
    np.testing.assert_allclose(model.alphas @ x, model.weights, atol=1e-8)
    # stationarity in the unpenalised bias
    assert abs(model.alphas.sum()) < 1e-8


def test_symmetric_pair_boundary_at_midpoint():
    model = train_klr(np.array([[0.0], [2.0]]), np.array([0, 1]))
    assert -model.bias / model.weights[0] == pytest.approx(1.0, abs=1e-3)


def test_heavy_regularisation_shrinks_weights():
    x, y = _data(2)
    model = train_klr(x, y, params=KlrParams(C=1e-8))
    assert np.max(np.abs(model.weights)) < 1e-6
    # only the bias remains: it matches the log-odds of the base rate
    assert model.bias == pytest.approx(np.log(y.mean() / (1 - y.mean())), abs=1e-3)


def test_params_and_roundtrip():
    with pytest.raises(ValueError):
        KlrParams(kernel="rbf")
    with pytest.raises(ValueError):
        KlrParams(C=0)
    x, y = _data(3)
    model = train_klr(x, y)
    back = KernelLrModel.from_dict(model.to_dict())
    np.testing.assert_array_equal(back.predict_proba(x), model.predict_proba(x))


@pytest.mark.parametrize("sign", [1, -1])
def test_weight_sign_follows_correlation(sign):
    x = np.linspace(0, 1, 40)[:, None]
    y = (sign * (x[:, 0] - 0.5) > 0).astype(int)
    assert np.sign(train_klr(x, y).weights[0]) == sign
