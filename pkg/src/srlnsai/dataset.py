"""Tabular data model, ingestion, labelling, splitting, scaling and synthesis.

The feature schema mirrors the descriptive statistics of the Estonian SRL
assessment: 23 predictors grouped by self-regulated-learning area plus the two
national-test outcomes (factual ``MF`` and conceptual ``MC`` math knowledge).
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.special import ndtri

FORMAT_VERSION = 1

MISSING_TOKENS = {"", "na", "nan", "null", "none", "?"}


class Area(str, Enum):
    MOT = "Mot"
    COG = "Cog"
    META = "Meta"
    LEARNT = "LearntKnowledge"
    DEMOGRAPHIC = "Demographic"
    OUTCOME = "Outcome"


class Kind(str, Enum):
    BINARY = "binary"
    ORDINAL = "ordinal"
    COUNT = "count"


class SchemaError(ValueError):
    """Raised when a table does not match the feature schema."""


class DataError(ValueError):
    """Raised for row-level problems (unparseable cells, degenerate columns)."""

    def __init__(self, message: str, row_id: str | None = None):
        super().__init__(message if row_id is None else f"row {row_id}: {message}")
        self.row_id = row_id


class StratificationError(ValueError):
    pass


class RangeWarning(UserWarning):
    """A value lies outside the documented bounds of its feature."""


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    area: Area
    min: float
    max: float
    kind: Kind

    def __post_init__(self):
        if not self.name.isidentifier():
            raise SchemaError(f"feature name {self.name!r} is not an identifier")
        if self.kind is Kind.BINARY:
            if (self.min, self.max) != (0, 1):
                raise SchemaError(f"binary feature {self.name} must span [0, 1]")
        elif not self.min < self.max:
            raise SchemaError(f"feature {self.name}: min must be below max")


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple[FeatureSpec, ...]

    def __post_init__(self):
        names = [f.name for f in self.features]
        dupes = {n for n in names if names.count(n) > 1}
        if dupes:
            raise SchemaError(f"duplicate feature names: {sorted(dupes)}")

    def __len__(self) -> int:
        return len(self.features)

    def __iter__(self):
        return iter(self.features)

    def __contains__(self, name: object) -> bool:
        return any(f.name == name for f in self.features)

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    @property
    def predictors(self) -> list[str]:
        return [f.name for f in self.features if f.area is not Area.OUTCOME]

    @property
    def outcomes(self) -> list[str]:
        return [f.name for f in self.features if f.area is Area.OUTCOME]

    def index(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise SchemaError(f"unknown feature {name!r}")

    def spec(self, name: str) -> FeatureSpec:
        return self.features[self.index(name)]

    def select(self, names: Iterable[str]) -> "FeatureSchema":
        return FeatureSchema(tuple(self.spec(n) for n in names))


_B, _O, _C = Kind.BINARY, Kind.ORDINAL, Kind.COUNT

SRL_SCHEMA = FeatureSchema((
    FeatureSpec("Gender", Area.DEMOGRAPHIC, 0, 1, _B),
    FeatureSpec("MotiBeliefs", Area.MOT, 0, 4, _C),
    FeatureSpec("MotiInterest", Area.MOT, 1, 5, _O),
    FeatureSpec("MotiKontrMot", Area.MOT, 1, 5, _O),
    FeatureSpec("MotiMathHelp", Area.MOT, 0, 12, _C),
    FeatureSpec("MotiProceed", Area.MOT, 0, 1, _B),
    FeatureSpec("MotiSEF", Area.MOT, 0, 3, _C),
    FeatureSpec("CogAttention", Area.COG, 0, 43, _C),
    FeatureSpec("CogHeterogeneous", Area.COG, 0, 12, _C),
    FeatureSpec("CogScientific", Area.COG, 0, 6, _C),
    FeatureSpec("CogMemorystrategies1", Area.COG, 0, 1, _B),
    FeatureSpec("CogMemwords1", Area.COG, 0, 21, _C),
    FeatureSpec("CogReadstrat", Area.COG, 0, 1, _B),
    FeatureSpec("CogTextinfo", Area.COG, 0, 5, _C),
    FeatureSpec("MetaMemRehearsal", Area.META, 1, 5, _O),
    FeatureSpec("MetaMemstratAssoc", Area.META, 1, 5, _O),
    FeatureSpec("MetaReadstrat", Area.META, 0, 8, _O),
    FeatureSpec("MetaWord12ev", Area.META, 0, 1, _B),
    FeatureSpec("MetaWordev1", Area.META, 1, 3, _O),
    FeatureSpec("MetaWordev2", Area.META, 1, 3, _O),
    FeatureSpec("LNmemorystrategies2", Area.LEARNT, 0, 1, _B),
    FeatureSpec("LNmemwords2", Area.LEARNT, 0, 21, _C),
    FeatureSpec("LNtext", Area.LEARNT, 0, 5, _C),
    FeatureSpec("MF", Area.OUTCOME, 2, 31, _C),
    FeatureSpec("MC", Area.OUTCOME, 0, 17, _C),
))


@dataclass(frozen=True)
class DataTable:
    schema: FeatureSchema
    values: np.ndarray
    row_ids: tuple[str, ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != len(self.schema):
            raise SchemaError(
                f"values shape {values.shape} does not match schema width {len(self.schema)}")
        if len(self.row_ids) != values.shape[0]:
            raise SchemaError("row_ids length does not match number of rows")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.schema.index(name)]

    def matrix(self, names: Sequence[str] | None = None) -> np.ndarray:
        """Columns ``names`` (default: every predictor) as a float matrix."""
        names = self.schema.predictors if names is None else names
        return self.values[:, [self.schema.index(n) for n in names]].copy()

    def take(self, indices) -> "DataTable":
        idx = np.asarray(indices, dtype=int)
        return DataTable(self.schema, self.values[idx], tuple(self.row_ids[i] for i in idx))

    def with_values(self, values: np.ndarray) -> "DataTable":
        return DataTable(self.schema, values, self.row_ids)

    def to_csv(self, path: str | Path, id_column: str | None = "id") -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            header = ([id_column] if id_column else []) + self.schema.names
            writer.writerow(header)
            for rid, row in zip(self.row_ids, self.values):
                cells = [_format_number(v) for v in row]
                writer.writerow(([rid] if id_column else []) + cells)


def _format_number(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def load_table(path: str | Path, schema: FeatureSchema = SRL_SCHEMA,
               id_column: str = "id") -> DataTable:
    """Read a CSV file into a :class:`DataTable`.

    Columns outside the schema are ignored and columns are reordered to schema
    order. Rows with any missing schema cell are dropped. Values outside a
    feature's bounds are kept but reported with a :class:`RangeWarning`.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        positions = {}
        for name in schema.names:
            if name not in header:
                raise SchemaError(f"missing column {name!r}")
            positions[name] = header.index(name)
        id_pos = header.index(id_column) if id_column in header else None

        rows, ids = [], []
        for line_no, cells in enumerate(reader, start=2):
            if not any(c.strip() for c in cells):
                continue
            rid = cells[id_pos].strip() if id_pos is not None and id_pos < len(cells) else str(line_no - 2)
            raw = [cells[positions[n]].strip() if positions[n] < len(cells) else ""
                   for n in schema.names]
            if any(c.lower() in MISSING_TOKENS for c in raw):
                continue
            try:
                parsed = [float(c) for c in raw]
            except ValueError as exc:
                raise DataError(f"unparseable cell ({exc})", row_id=rid) from None
            if not all(math.isfinite(v) for v in parsed):
                raise DataError("non-finite cell", row_id=rid)
            rows.append(parsed)
            ids.append(rid)

    values = np.array(rows, dtype=float).reshape(len(rows), len(schema))
    _report_range(values, schema, ids)
    return DataTable(schema, values, tuple(ids))


def _report_range(values: np.ndarray, schema: FeatureSchema, ids: Sequence[str]) -> None:
    for j, spec in enumerate(schema):
        bad = np.flatnonzero((values[:, j] < spec.min) | (values[:, j] > spec.max))
        for i in bad:
            warnings.warn(
                f"row {ids[i]}: {spec.name}={_format_number(values[i, j])} outside "
                f"documented range [{_format_number(spec.min)}, {_format_number(spec.max)}]",
                RangeWarning, stacklevel=3)


# ---------------------------------------------------------------------------
# Labels


class LabelPolicy(str, Enum):
    MEAN = "mean"
    QUARTILE = "quartile"


@dataclass(frozen=True)
class LabelSpec:
    """How an outcome column becomes a Low(0)/High(1) label.

    ``threshold`` fixes the cut-off explicitly; otherwise it is computed from
    the data (mean, or first quartile using numpy ``quantile_method``, whose
    default ``"linear"`` is the R-7 rule).
    """

    target: str = "MF"
    policy: LabelPolicy = LabelPolicy.MEAN
    inclusive: bool = True
    quantile_method: str = "linear"
    threshold: float | None = None


@dataclass(frozen=True)
class LabelResult:
    labels: np.ndarray
    threshold: float
    class_counts: tuple[int, int]


def compute_threshold(values: np.ndarray, spec: LabelSpec) -> float:
    if spec.threshold is not None:
        return float(spec.threshold)
    if spec.policy is LabelPolicy.MEAN:
        return float(np.mean(values))
    return float(np.quantile(values, 0.25, method=spec.quantile_method))


def discretize_label(table: DataTable, spec: LabelSpec) -> LabelResult:
    values = table.column(spec.target)
    if values.shape[0] < 2:
        raise DataError(f"need at least two rows to discretize {spec.target}")
    if np.all(values == values[0]):
        raise DataError(f"{spec.target} is constant; cannot form two classes")
    threshold = compute_threshold(values, spec)
    high = values > threshold if spec.inclusive else values >= threshold
    labels = high.astype(int)
    n1 = int(labels.sum())
    n0 = labels.size - n1
    if n0 == 0 or n1 == 0:
        raise DataError(f"threshold {threshold} leaves a class of {spec.target} empty")
    return LabelResult(labels, threshold, (n0, n1))


# ---------------------------------------------------------------------------
# Splitting


@dataclass(frozen=True)
class SplitPlan:
    train_indices: tuple[int, ...]
    test_indices: tuple[int, ...]
    folds: tuple[tuple[int, ...], ...] = ()
    seed: int = 0

    def to_json(self) -> str:
        return json.dumps({
            "format_version": FORMAT_VERSION, "kind": "split_plan", "seed": self.seed,
            "train_indices": list(self.train_indices), "test_indices": list(self.test_indices),
            "folds": [list(f) for f in self.folds],
        }, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "SplitPlan":
        d = _check_version(json.loads(text), "split_plan")
        return cls(tuple(d["train_indices"]), tuple(d["test_indices"]),
                   tuple(tuple(f) for f in d["folds"]), d["seed"])


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(labels, test_fraction: float = 0.2, seed: int = 0,
                     n_folds: int = 0) -> SplitPlan:
    """Stratified holdout, optionally with stratified k folds of the train part.

    Fold indices refer to positions in the full dataset, like the holdout.
    """
    y = np.asarray(labels).astype(int)
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for cls in (0, 1):
        members = np.flatnonzero(y == cls)
        if members.size < 2:
            raise StratificationError(f"class {cls} has {members.size} member(s); need at least 2")
        members = rng.permutation(members)
        k = _round_half_up(members.size * test_fraction)
        k = min(max(k, 1), members.size - 1)
        test.extend(members[:k].tolist())
        train.extend(members[k:].tolist())
    train_idx = tuple(sorted(train))
    folds = stratified_folds(y, n_folds, rng, subset=train_idx) if n_folds else ()
    return SplitPlan(train_idx, tuple(sorted(test)), folds, seed)


def stratified_folds(labels, n_folds: int, rng: np.random.Generator,
                     subset: Sequence[int] | None = None) -> tuple[tuple[int, ...], ...]:
    y = np.asarray(labels).astype(int)
    idx = np.arange(y.size) if subset is None else np.asarray(subset, dtype=int)
    if n_folds < 2:
        raise ValueError("need at least 2 folds")
    buckets: list[list[int]] = [[] for _ in range(n_folds)]
    offset = 0
    for cls in (0, 1):
        members = rng.permutation(idx[y[idx] == cls])
        if members.size < n_folds:
            raise StratificationError(f"class {cls} has fewer members than folds")
        # continue the deal where the previous class stopped so fold sizes stay level
        for i, m in enumerate(members):
            buckets[(offset + i) % n_folds].append(int(m))
        offset = (offset + members.size) % n_folds
    return tuple(tuple(sorted(b)) for b in buckets)


# ---------------------------------------------------------------------------
# Scaling


@dataclass(frozen=True)
class ScalerParams:
    names: tuple[str, ...]
    mins: tuple[float, ...]
    maxs: tuple[float, ...]

    def transform(self, x: np.ndarray) -> np.ndarray:
        lo, span = self._arrays()
        return (np.asarray(x, dtype=float) - lo) / span

    def inverse(self, z: np.ndarray) -> np.ndarray:
        lo, span = self._arrays()
        return np.asarray(z, dtype=float) * span + lo

    def _arrays(self):
        lo = np.array(self.mins)
        span = np.array(self.maxs) - lo
        # constant columns map to 0
        return lo, np.where(span > 0, span, 1.0)

    def to_json(self) -> str:
        return json.dumps({"format_version": FORMAT_VERSION, "kind": "scaler",
                           "names": list(self.names), "mins": list(self.mins),
                           "maxs": list(self.maxs)}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "ScalerParams":
        d = _check_version(json.loads(text), "scaler")
        return cls(tuple(d["names"]), tuple(d["mins"]), tuple(d["maxs"]))


def fit_scaler(x: np.ndarray, names: Sequence[str]) -> ScalerParams:
    x = np.asarray(x, dtype=float)
    return ScalerParams(tuple(names), tuple(x.min(axis=0).tolist()), tuple(x.max(axis=0).tolist()))


def fit_apply_scaler(train: DataTable, others: Sequence[DataTable] = (),
                     names: Sequence[str] | None = None):
    """Fit min-max bounds on ``train`` only and apply them to every table.

    Only predictor columns are scaled; outcome columns pass through untouched.
    Values of the other tables are not clamped.
    """
    names = list(train.schema.predictors if names is None else names)
    cols = [train.schema.index(n) for n in names]
    params = fit_scaler(train.values[:, cols], names)

    def apply(t: DataTable) -> DataTable:
        v = t.values.copy()
        v[:, cols] = params.transform(v[:, cols])
        return t.with_values(v)

    return params, [apply(train)] + [apply(t) for t in others]


def _check_version(d: dict, kind: str) -> dict:
    if d.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported format_version {d.get('format_version')!r}, "
                         f"expected {FORMAT_VERSION}")
    if d.get("kind") != kind:
        raise ValueError(f"expected a {kind!r} document, got {d.get('kind')!r}")
    return d


# ---------------------------------------------------------------------------
# Synthetic data


class Balance(str, Enum):
    BALANCED = "balanced"
    IMBALANCED = "imbalanced"


# low-class fractions of the reference cohort (205/453 and 125/453 for MF)
LOW_FRACTION = {Balance.BALANCED: 205 / 453, Balance.IMBALANCED: 125 / 453}

# suffix-1 measures that are prerequisites of their suffix-2 counterparts
PREREQUISITES = {
    "MetaWordev2": "MetaWordev1",
    "LNmemwords2": "CogMemwords1",
    "LNmemorystrategies2": "CogMemorystrategies1",
}


@dataclass
class SynthOptions:
    construct_noise: float = 0.35
    outcome_noise: float = 0.45
    prerequisite_strength: float = 0.6
    conjunctive_outcome: bool = True
    and_sharpness: float = 2.0
    and_shift: float = 0.5


def synth_generate(schema: FeatureSchema = SRL_SCHEMA, rules=None, n: int = 453,
                   balance: Balance | str = Balance.BALANCED, seed: int = 0,
                   options: SynthOptions | None = None) -> DataTable:
    """Generate a schema-faithful table whose outcomes follow the rules.

    Every predictor is drawn on a latent standard-normal scale and mapped into
    its bounds. Each rule-defined construct is a noisy weighted mean of its
    standardised antecedents, and each outcome a noisy weighted sum of the
    constructs in its body. Outcomes are then mapped onto their integer range so
    that the mean cut-off (balanced) or first-quartile cut-off (imbalanced)
    reproduces the reference cohort's class ratio.
    """
    from .rules import SRL_RULES_TEXT, parse_rules, ruleset_for_target, validate_rules

    if n < 20:
        raise ValueError("n must be at least 20 to allow a stratified split")
    balance = Balance(balance)
    opts = options or SynthOptions()
    if rules is None:
        rules = parse_rules(SRL_RULES_TEXT)
    rng = np.random.default_rng(seed)

    latent: dict[str, np.ndarray] = {}
    for spec in schema:
        if spec.area is Area.OUTCOME:
            continue
        z = rng.standard_normal(n)
        parent = PREREQUISITES.get(spec.name)
        if parent in latent:
            s = opts.prerequisite_strength
            z = s * latent[parent] + math.sqrt(1 - s * s) * z
        latent[spec.name] = z

    values = np.zeros((n, len(schema)))
    for j, spec in enumerate(schema):
        if spec.area is not Area.OUTCOME:
            values[:, j] = _to_range(latent[spec.name], spec, rng)

    # construct scores use the observed values, so the planted signal is visible in the data
    observed = {s.name: _standardise(values[:, j]) for j, s in enumerate(schema)
                if s.area is not Area.OUTCOME}
    for target in schema.outcomes:
        target_rules = ruleset_for_target(rules, target)
        validate_rules(target_rules, schema)
        scores = _evaluate_rules(target_rules, observed, rng, opts)
        score = scores[target_rules.roots[0]]
        values[:, schema.index(target)] = _outcome_values(score, schema.spec(target), balance)

    ids = tuple(f"s{seed}-{i:04d}" for i in range(n))
    return DataTable(schema, values, ids)


def _standardise(x: np.ndarray) -> np.ndarray:
    sd = x.std()
    return (x - x.mean()) / (sd if sd > 0 else 1.0)


def _to_range(z: np.ndarray, spec: FeatureSpec, rng: np.random.Generator) -> np.ndarray:
    if spec.kind is Kind.BINARY:
        p = 1.0 / (1.0 + np.exp(-1.2 * z))
        return (rng.random(z.size) < p).astype(float)
    mid = (spec.min + spec.max) / 2
    half = (spec.max - spec.min) / 2
    x = mid + half * np.tanh(0.55 * z)
    step = 1.0 if spec.kind is Kind.COUNT else 0.5
    x = np.round(x / step) * step
    return np.clip(x, spec.min, spec.max)


def _evaluate_rules(rules, observed: dict[str, np.ndarray], rng: np.random.Generator,
                    opts: SynthOptions) -> dict[str, np.ndarray]:
    scores = dict(observed)
    for clause in rules.topological_clauses():
        weights = rng.uniform(0.6, 1.4, size=len(clause.body))
        if clause.head in rules.roots and opts.conjunctive_outcome:
            # soft AND: the outcome drops sharply when any antecedent construct is low
            parts = [w * _log_sigmoid(opts.and_sharpness * (scores[s] + opts.and_shift))
                     for w, s in zip(weights, clause.body)]
            total = _standardise(sum(parts))
        else:
            total = _standardise(sum(w * scores[s] for w, s in zip(weights, clause.body)))
        noise = opts.outcome_noise if clause.head in rules.roots else opts.construct_noise
        scores[clause.head] = _standardise(total + noise * rng.standard_normal(total.size))
    return scores


def _log_sigmoid(z: np.ndarray) -> np.ndarray:
    return -np.logaddexp(0.0, -z)


def _outcome_values(score: np.ndarray, spec: FeatureSpec, balance: Balance) -> np.ndarray:
    """Integer outcome values whose policy cut-off yields the reference low fraction."""
    n = score.size
    n_low = _round_half_up(n * LOW_FRACTION[balance])
    order = np.argsort(score, kind="stable")
    rank = np.empty(n, dtype=int)
    rank[order] = np.arange(n)
    lo, hi = int(spec.min), int(spec.max)
    # normal-quantile map of the rank onto the outcome range, centred above mid-range
    u = (rank + 0.5) / n
    base = lo + (hi - lo) * (0.58 + 0.2 * ndtri(u))
    base = np.clip(base, lo, hi)
    low = rank < n_low

    if balance is Balance.IMBALANCED:
        # first quartile must equal the largest low value
        cut = int(np.floor(np.quantile(base, 0.25)))
        cut = min(max(cut, lo + 1), hi - 2)
        q_pos = int(np.floor(0.25 * (n - 1)))
        out = np.where(low, np.minimum(np.floor(base), cut), np.maximum(np.ceil(base), cut + 1))
        out[low & (rank >= q_pos)] = cut
        return np.clip(out, lo, hi)

    for cut in range(lo + 1, hi - 1):
        out = np.where(low, np.minimum(np.floor(base), cut), np.maximum(np.ceil(base), cut + 1))
        out = np.clip(out, lo, hi)
        if cut <= out.mean() < cut + 1:
            return out
    # pull the high band towards the cut until the mean falls inside [cut, cut + 1)
    cut = int(np.floor(np.median(base)))
    out = np.where(low, np.minimum(np.floor(base), cut), np.maximum(np.ceil(base), cut + 1))
    while out.mean() >= cut + 1:
        out[~low] = np.maximum(out[~low] - 1, cut + 1)
    while out.mean() < cut:
        out[low] = np.minimum(out[low] + 1, cut)
    return np.clip(out, lo, hi)
