"""Random rule sets and matching schemas for property tests."""

import numpy as np

from srlnsai.dataset import Area, FeatureSchema, FeatureSpec, Kind
from srlnsai.rules import HornClause, RuleSet


def random_schema(n_features: int, target: str = "Y") -> FeatureSchema:
    feats = [FeatureSpec(f"f{j}", Area.COG, 0, 1, Kind.BINARY) for j in range(n_features)]
    return FeatureSchema(tuple(feats) + (FeatureSpec(target, Area.OUTCOME, 0, 10, Kind.COUNT),))


def random_rules(rng: np.random.Generator, n_clauses: int, n_features: int, target: str = "Y") -> RuleSet:
    """``n_clauses`` acyclic clauses over features ``f0..``; the single root is ``target``."""
    features = [f"f{j}" for j in range(n_features)]
    heads = [f"h{k}" for k in range(1, n_clauses)]
    bodies = {}
    for k, head in enumerate(heads):
        pool = features + heads[:k]
        size = int(rng.integers(1, min(4, len(pool)) + 1))
        bodies[head] = [str(s) for s in rng.choice(pool, size=size, replace=False)]
    pool = features + heads
    root_body = [str(s) for s in rng.choice(pool, size=int(rng.integers(1, min(3, len(pool)) + 1)), replace=False)]
    used = {s for b in bodies.values() for s in b} | set(root_body)
    root_body += [h for h in heads if h not in used]
    clauses = [HornClause(h, tuple(bodies[h])) for h in heads] + [HornClause(target, tuple(root_body))]
    return RuleSet(tuple(clauses))
