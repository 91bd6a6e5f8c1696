import numpy as np
import pytest

from srlnsai.baselines.decision_list import (Atom, DecisionList, Rule, parse_decision_list,
                                             train_rule_list)


def _toy():
    rules = [Rule((Atom(0, ">", 0.5), Atom(1, "<=", 0.2)), 1, (8, 1)),
             Rule((Atom(1, ">", 0.7),), 0, (0, 5)),
             Rule((), 1, (3, 2))]
    return DecisionList(rules, ("a", "b"), n_train=19, n_correct=16)


def test_first_match_wins():
    dl = _toy()
    x = np.array([[0.9, 0.1], [0.9, 0.8], [0.1, 0.1], [0.1, 0.9]])
    assert dl.match(x).tolist() == [0, 1, 2, 1]
    np.testing.assert_allclose(dl.predict_proba(x), [9 / 11, 1 / 7, 4 / 7, 1 / 7])


def test_text_format_and_parse():
    dl = _toy()
    text = dl.to_text()
    assert text.splitlines()[0] == "if a > 0.500 and b ≤ 0.200 then 1 (8 / 1)"
    assert text.splitlines()[-1] == "correct: 16 out of 19 training examples"
    back = parse_decision_list(dl.to_text(digits=None), dl.feature_names)
    assert back.rules == dl.rules
    with pytest.raises(ValueError):
        parse_decision_list("if a > 1 then 1 (1 / 0)\n", ["a"])


def test_learns_planted_rule():
    rng = np.random.default_rng(0)
    x = rng.random((400, 4))
    y = ((x[:, 2] > 0.6) & (x[:, 0] <= 0.5)).astype(int)
    dl = train_rule_list(x, y, ["a", "b", "c", "d"])
    acc = np.mean((dl.predict_proba(x) > 0.5) == y)
    assert acc > 0.95
    assert dl.n_train == 400 and dl.n_correct == round(acc * 400)
    # the first rule recovers the planted conjunction
    assert {a.feature for a in dl.rules[0].atoms} == {0, 2}
    assert dl.rules[0].counts[1] == 0


def test_deterministic_and_roundtrip():
    rng = np.random.default_rng(4)
    x = rng.random((150, 3))
    y = (x[:, 0] + rng.normal(0, 0.2, 150) > 0.5).astype(int)
    a = train_rule_list(x, y)
    b = train_rule_list(x, y)
    assert a.rules == b.rules
    back = DecisionList.from_dict(a.to_dict())
    np.testing.assert_array_equal(back.predict_proba(x), a.predict_proba(x))


def test_separable_first_rule_and_single_class():
    x = np.linspace(0, 1, 101)[:, None]
    y = (x[:, 0] > 0.5).astype(int)
    dl = train_rule_list(x, y, ["x"])
    first = dl.rules[0]
    k = int((y == 0).sum())
    if first.prediction == 0:
        assert first.atoms == (Atom(0, "<=", first.atoms[0].threshold),) and first.counts == (0, k)
        assert 0.5 <= first.atoms[0].threshold < 0.51
    assert np.all((dl.predict_proba(x) > 0.5) == y)
    only = train_rule_list(x, np.ones(101, int))
    assert len(only.rules) == 1 and only.rules[0].atoms == ()
