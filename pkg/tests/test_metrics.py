import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from srlnsai.metrics import EvaluationError, compute_auc, compute_metrics


def test_confusion_example():
    # TP=3, FP=1, FN=2, TN=4
    y = [1, 1, 1, 0, 1, 1, 0, 0, 0, 0]
    s = [0.9, 0.8, 0.7, 0.6, 0.2, 0.1, 0.3, 0.2, 0.1, 0.0]
    r = compute_metrics(s, y)
    assert r.confusion == {"tn": 4, "fp": 1, "fn": 2, "tp": 3}
    assert r.precision[1] == pytest.approx(0.75)
    assert r.recall[1] == pytest.approx(0.6)
    assert r.accuracy == pytest.approx(0.7)
    assert r.precision[0] == pytest.approx(4 / 6) and r.recall[0] == pytest.approx(0.8)


def test_auc_examples():
    assert compute_auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == pytest.approx(0.75)
    assert compute_auc([0.5] * 6, [0, 1] * 3) == 0.5
    assert compute_auc([0.1, 0.9], [0, 1]) == 1.0
    with pytest.raises(EvaluationError):
        compute_auc([0.1, 0.2], [1, 1])


def test_threshold_is_strict():
    r = compute_metrics([0.5, 0.51], [0, 1])
    assert r.confusion == {"tn": 1, "fp": 0, "fn": 0, "tp": 1}


def test_undefined_ratios_are_flagged():
    r = compute_metrics([0.1, 0.2, 0.3], [0, 1, 1])
    assert r.precision[1] == 0.0
    assert "precision_1" in r.undefined
    single = compute_metrics([0.1, 0.7], [1, 1])
    assert single.auc is None and "recall_0" in single.undefined


def test_length_mismatch():
    with pytest.raises(EvaluationError):
        compute_metrics([0.1], [0, 1])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 20), st.integers(0, 1)), min_size=2, max_size=40))
def test_auc_invariant_under_monotone_maps(pairs):
    s = np.array([p[0] for p in pairs]) / 20
    y = np.array([p[1] for p in pairs])
    if y.min() == y.max():
        return
    a = compute_auc(s, y)
    assert compute_auc(np.exp(3 * s) + 7, y) == pytest.approx(a)
    assert compute_auc(-s, y) == pytest.approx(1 - a)


def test_perfect_and_all_positive_predictors():
    perfect = compute_metrics([0, 0, 1, 1], [0, 0, 1, 1])
    assert perfect.accuracy == 1.0
    assert perfect.precision == (1.0, 1.0) and perfect.recall == (1.0, 1.0)
    allpos = compute_metrics([0.9] * 4, [0, 1, 0, 1])
    assert allpos.recall[1] == 1.0
    assert allpos.precision[0] == 0.0 and "precision_0" in allpos.undefined
