import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from srlnsai.dataset import SRL_SCHEMA
from srlnsai.rules import (SRL_RULES_TEXT, RuleStructureError, RuleSyntaxError, parse_rules,
                           ruleset_for_target, validate_rules)
from rulegen import random_rules, random_schema


def test_shipped_rules_layers():
    rules = parse_rules(SRL_RULES_TEXT)
    assert rules.roots == ["MF"]
    layering = validate_rules(rules, SRL_SCHEMA)
    assert len(layering.layers) == 3
    assert set(layering.layers[1]) == {"Metacognition", "Cognition", "Motivation", "LearntKnowledge"}
    assert layering.layers[2] == ("MF",)
    assert layering.unreferenced == ("Gender",)


def test_both_neck_spellings_and_comments():
    a = parse_rules("Y :- a, b.  % note\n")
    b = parse_rules("Y : - a,\n  b.")
    assert a == b


@pytest.mark.parametrize("text, line, col", [
    ("Y :- a b.", 1, 8),
    ("Y :- a,\n  b", 2, 4),
    ("Y a.", 1, 3),
    ("Y :- a; b.", 1, 7),
])
def test_syntax_errors_carry_position(text, line, col):
    with pytest.raises(RuleSyntaxError) as info:
        parse_rules(text)
    assert (info.value.line, info.value.column) == (line, col)


def test_structure_errors():
    with pytest.raises(RuleStructureError, match="more than one"):
        parse_rules("Y :- a. Y :- b.")
    with pytest.raises(RuleStructureError, match="recursive"):
        parse_rules("Y :- h. h :- g. g :- h.")
    with pytest.raises(RuleStructureError, match="no clauses"):
        parse_rules("% nothing\n")
    with pytest.raises(RuleSyntaxError, match="own body"):
        parse_rules("Y :- Y.")


def test_validate_against_schema():
    with pytest.raises(RuleStructureError, match="unknown symbol"):
        validate_rules(parse_rules("MF :- Bogus."), SRL_SCHEMA)
    with pytest.raises(RuleStructureError, match="outcome MC"):
        validate_rules(parse_rules("MF :- MC."), SRL_SCHEMA)
    with pytest.raises(RuleStructureError, match="predictor Gender"):
        validate_rules(parse_rules("Gender :- MotiSEF."), SRL_SCHEMA)


def test_retarget():
    rules = ruleset_for_target(parse_rules(SRL_RULES_TEXT), "MC")
    assert rules.roots == ["MC"]
    validate_rules(rules, SRL_SCHEMA)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31), n_clauses=st.integers(1, 8), n_features=st.integers(2, 10))
def test_text_roundtrip(seed, n_clauses, n_features):
    rules = random_rules(np.random.default_rng(seed), n_clauses, n_features)
    assert parse_rules(rules.to_text()) == rules
    validate_rules(rules, random_schema(n_features))
    d = rules.depth()
    for c in rules.clauses:
        assert d[c.head] == 1 + max(d[s] for s in c.body)
