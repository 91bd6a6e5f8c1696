import numpy as np
import pytest

from srlnsai.dataset import SRL_SCHEMA
from srlnsai.extraction import build_report, extract_rules, rules_to_ruleset, same_rules
from srlnsai.kbann import KbannParams, compile_network, init_weights
from srlnsai.rules import SRL_RULES_TEXT, parse_rules
from rulegen import random_schema


def _model(eps0=0.05, n_free=1):
    spec = compile_network(parse_rules(SRL_RULES_TEXT), SRL_SCHEMA, n_free_heads=n_free)
    return init_weights(spec, KbannParams(eps0=eps0, seed=0))


def test_untrained_network_returns_injected_rules():
    m = _model()
    got = rules_to_ruleset(extract_rules(m, 0.25))
    # free head keeps its strongest noisy links, so compare the rule units only
    rule_heads = {u.name for u in m.spec.rule_units}
    got = type(got)(tuple(c for c in got.clauses if c.head in rule_heads))
    assert same_rules(got, parse_rules(SRL_RULES_TEXT))


def test_threshold_is_relative_to_unit_max():
    m = _model(eps0=0.0, n_free=0)
    m.weights[0][0, :] = 0.0
    m.weights[0][0, 14] = 2.0
    m.weights[0][0, 15] = -0.6
    m.weights[0][0, 16] = 0.4
    meta = next(r for r in extract_rules(m, 0.25) if r.head == "Metacognition")
    assert [s for s, _ in meta.antecedents] == ["MetaMemRehearsal", "MetaMemstratAssoc"]
    meta = next(r for r in extract_rules(m, 0.2) if r.head == "Metacognition")
    assert len(meta.antecedents) == 3


def test_tau_bounds():
    with pytest.raises(ValueError):
        extract_rules(_model(), 0.0)


def test_report_importance_path_products():
    # Y :- h. h :- f0, f1, with exact weights: importance of f_j = |w_hj| * |w_Yh|
    spec = compile_network(parse_rules("Y :- h. h :- f0, f1."), random_schema(3), n_free_heads=0)
    m = init_weights(spec, KbannParams(eps0=0.0))
    m.weights[0][0] = [3.0, -1.0, 0.0]
    m.weights[1][0, spec.sources(1).index("h")] = 2.0
    rep = build_report(m, top_k=3)
    imp = dict(rep.global_importance)
    assert imp["f0"] == pytest.approx(0.75) and imp["f1"] == pytest.approx(0.25) and imp["f2"] == 0
    assert rep.high_level == {"h": 2.0}
    np.testing.assert_array_equal(rep.low_level, [[3.0, -1.0, 0.0]])
    assert rep.low_level_csv().splitlines()[0] == "latent,f0,f1,f2"
    assert rep.global_svg().startswith("<svg")


def test_report_sums_to_one_on_shipped_topology():
    rep = build_report(_model())
    assert sum(v for _, v in rep.global_importance) == pytest.approx(1.0)
    assert set(rep.free_heads) == {"head1"}


def test_tau_one_keeps_strongest_only():
    m = _model()
    for r in extract_rules(m, 1.0):
        if r.head != "head1":
            assert len(r.antecedents) >= 1
            assert all(abs(w) == abs(r.antecedents[0][1]) for _, w in r.antecedents)


def test_rankings_scale_invariant():
    m = _model()
    rng = np.random.default_rng(0)
    m.weights = [w + rng.normal(0, 0.5, w.shape) * mask for w, mask in zip(m.weights, m.spec.masks)]
    before = build_report(m)
    m.weights = [3.0 * w for w in m.weights]
    after = build_report(m)
    assert [k for k, _ in before.global_importance] == [k for k, _ in after.global_importance]
    assert sorted(before.high_level, key=before.high_level.get) == sorted(after.high_level, key=after.high_level.get)
    assert before.free_heads.keys() == after.free_heads.keys()
    assert [s for s, _ in before.free_heads["head1"]] == [s for s, _ in after.free_heads["head1"]]


def test_zero_output_gives_uniform_importance():
    m = _model()
    m.weights[-1] = np.zeros_like(m.weights[-1])
    imp = [v for _, v in build_report(m).global_importance]
    np.testing.assert_allclose(imp, 1 / 23)
