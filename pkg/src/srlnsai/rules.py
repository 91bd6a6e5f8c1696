"""Propositional Horn-clause knowledge language.

A rule file is a sequence of clauses ``head :- a, b, c.``; the ``:`` and
``-`` may be separated by whitespace, which is how the SRL rules are usually
written. ``%`` starts a comment that runs to the end of the line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

from .dataset import Area, FeatureSchema

SRL_RULES_TEXT = resources.files("srlnsai.data").joinpath("srl_rules.pl").read_text("utf-8")


class RuleSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class RuleStructureError(ValueError):
    """Duplicate heads, cycles, unknown symbols and other semantic problems."""


@dataclass(frozen=True)
class HornClause:
    head: str
    body: tuple[str, ...]

    def __post_init__(self):
        if not self.body:
            raise RuleStructureError(f"clause for {self.head} has an empty body")
        if self.head in self.body:
            raise RuleStructureError(f"{self.head} appears in its own body")
        if len(set(self.body)) != len(self.body):
            raise RuleStructureError(f"clause for {self.head} repeats a body symbol")

    def __str__(self) -> str:
        return f"{self.head} : - {', '.join(self.body)}."


@dataclass(frozen=True)
class RuleSet:
    clauses: tuple[HornClause, ...]

    def __post_init__(self):
        heads = [c.head for c in self.clauses]
        for h in heads:
            if heads.count(h) > 1:
                raise RuleStructureError(f"{h} is defined by more than one clause")
        self._check_acyclic()

    @property
    def heads(self) -> list[str]:
        return [c.head for c in self.clauses]

    @property
    def leaves(self) -> list[str]:
        """Body symbols without a defining clause, in first-use order."""
        heads = set(self.heads)
        out: list[str] = []
        for c in self.clauses:
            out.extend(s for s in c.body if s not in heads and s not in out)
        return out

    @property
    def roots(self) -> list[str]:
        used = {s for c in self.clauses for s in c.body}
        return [h for h in self.heads if h not in used]

    def clause(self, head: str) -> HornClause:
        for c in self.clauses:
            if c.head == head:
                return c
        raise KeyError(head)

    def _check_acyclic(self) -> None:
        defs = {c.head: c.body for c in self.clauses}
        state: dict[str, int] = {}

        def visit(sym: str, path: list[str]) -> None:
            if state.get(sym) == 2 or sym not in defs:
                return
            if state.get(sym) == 1:
                cycle = path[path.index(sym):] + [sym]
                raise RuleStructureError("recursive rules: " + " -> ".join(cycle))
            state[sym] = 1
            for s in defs[sym]:
                visit(s, path + [sym])
            state[sym] = 2

        for h in defs:
            visit(h, [])

    def depth(self) -> dict[str, int]:
        """Layer of every symbol: leaves are 0, a head sits above its deepest antecedent."""
        defs = {c.head: c.body for c in self.clauses}
        memo: dict[str, int] = {}

        def layer(sym: str) -> int:
            if sym not in defs:
                return 0
            if sym not in memo:
                memo[sym] = 1 + max(layer(s) for s in defs[sym])
            return memo[sym]

        return {s: layer(s) for s in self.leaves + self.heads}

    def topological_clauses(self) -> list[HornClause]:
        d = self.depth()
        return sorted(self.clauses, key=lambda c: d[c.head])

    def to_text(self) -> str:
        return "\n".join(str(c) for c in self.clauses) + "\n"


_TOKEN = re.compile(r"\s*(?:(%[^\n]*)|([A-Za-z_][A-Za-z0-9_]*)|(:\s*-)|(,)|(\.)|(\S))")


def _tokens(text: str):
    pos = 0
    line_starts = [0] + [m.end() for m in re.finditer("\n", text)]

    def where(offset: int) -> tuple[int, int]:
        line = max(i for i, s in enumerate(line_starts) if s <= offset)
        return line + 1, offset - line_starts[line] + 1

    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        pos = m.end()
        comment, ident, neck, comma, dot, other = m.groups()
        if comment is not None:
            continue
        start = m.start(m.lastindex)
        if ident is not None:
            yield "ident", ident, where(start)
        elif neck is not None:
            yield ":-", neck, where(start)
        elif comma is not None:
            yield ",", comma, where(start)
        elif dot is not None:
            yield ".", dot, where(start)
        elif other is not None:
            raise RuleSyntaxError(f"unexpected character {other!r}", *where(start))
    yield "eof", "", where(len(text))


def parse_rules(text: str) -> RuleSet:
    tokens = list(_tokens(text))
    i = 0

    def expect(kind: str, what: str):
        nonlocal i
        k, value, (line, col) = tokens[i]
        if k != kind:
            found = "end of input" if k == "eof" else repr(value)
            raise RuleSyntaxError(f"expected {what}, found {found}", line, col)
        i += 1
        return value

    clauses = []
    while tokens[i][0] != "eof":
        line, col = tokens[i][2]
        head = expect("ident", "a clause head")
        expect(":-", "':-'")
        body = [expect("ident", "a symbol")]
        while tokens[i][0] == ",":
            i += 1
            body.append(expect("ident", "a symbol"))
        expect(".", "',' or '.'")
        try:
            clauses.append(HornClause(head, tuple(body)))
        except RuleStructureError as exc:
            raise RuleSyntaxError(str(exc), line, col) from None
    if not clauses:
        raise RuleStructureError("rule text contains no clauses")
    return RuleSet(tuple(clauses))


def load_rules(path) -> RuleSet:
    with open(path, encoding="utf-8") as fh:
        return parse_rules(fh.read())


@dataclass(frozen=True)
class Layering:
    layers: tuple[tuple[str, ...], ...]
    unreferenced: tuple[str, ...]


def validate_rules(rules: RuleSet, schema: FeatureSchema) -> Layering:
    """Check rules against a schema and return their topological layers.

    Layer 0 holds every schema predictor (in schema order); higher layers hold
    the clause heads by depth. ``unreferenced`` lists predictors that appear in
    no clause body.
    """
    outcomes = set(schema.outcomes)
    predictors = schema.predictors
    for clause in rules.clauses:
        for s in clause.body:
            if s in outcomes:
                raise RuleStructureError(
                    f"outcome {s} may only be a clause head (used in the body of {clause.head})")
        if clause.head in schema and clause.head not in outcomes:
            raise RuleStructureError(f"predictor {clause.head} cannot be a clause head")
    for leaf in rules.leaves:
        if leaf not in schema:
            raise RuleStructureError(f"unknown symbol {leaf!r}: not a schema feature")
    for root in rules.roots:
        if root in schema and schema.spec(root).area is not Area.OUTCOME:
            raise RuleStructureError(f"root {root} is a predictor")

    depth = rules.depth()
    n_layers = max(depth.values()) + 1
    layers: list[list[str]] = [list(predictors)] + [[] for _ in range(n_layers - 1)]
    for head in rules.heads:
        layers[depth[head]].append(head)
    used = {s for c in rules.clauses for s in c.body}
    unreferenced = tuple(p for p in predictors if p not in used)
    return Layering(tuple(tuple(layer) for layer in layers), unreferenced)


def ruleset_for_target(rules: RuleSet, target: str) -> RuleSet:
    """The same rules with the single root renamed to ``target``."""
    roots = rules.roots
    if len(roots) != 1:
        raise RuleStructureError(f"expected exactly one root, found {roots}")
    if roots[0] == target:
        return rules
    return RuleSet(tuple(HornClause(target if c.head == roots[0] else c.head, c.body)
                         for c in rules.clauses))
