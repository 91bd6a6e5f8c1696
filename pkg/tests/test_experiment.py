import csv
import hashlib
import json

import numpy as np
import pytest

from srlnsai import experiment
from srlnsai.config import MODEL_IDS, parse_config

SMALL = """
[experiment]
seeds = 0 1
[data]
n = 120
[split]
n_folds = 3
[kbann]
epochs = 30
[mlp]
epochs = 3
hidden = 8 4
[random_forest]
n_trees = 5
[explain]
shap_background = 5
shap_rows = 2
shap_samples = 60
"""


def _digests(root):
    return {str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    out = tmp_path_factory.mktemp("bundle")
    summary = experiment.run_experiment(parse_config(SMALL), out)
    return out, summary


def test_metrics_table_shape(bundle):
    out, _ = bundle
    lines = (out / "metrics.csv").read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    rows = list(csv.reader(lines[1:]))
    assert rows[0] == ["family", "method", "metric", "MF Low", "MF High"]
    assert len(rows) == 1 + 7 * 4
    auc_rows = [r for r in rows[1:] if r[2] == "AUC (%)"]
    assert len(auc_rows) == 7 and all(r[4] == "" and r[3].isdigit() for r in auc_rows)


def test_summary_and_artifacts(bundle):
    out, summary = bundle
    assert set(summary) == set(MODEL_IDS)
    assert len(summary["kbann"]["MF"]["replicates"]) == 2
    doc = json.loads((out / "metrics.json").read_text())
    assert doc["stamp"].startswith("config_hash=")
    assert {lab["seed"] for lab in doc["labels"]} == {0, 1}
    expl = out / "explanations" / "MF"
    for name in ("kbann/rules.txt", "decision_tree/tree.svg", "rule_induction/rules.txt",
                 "random_forest/importance.csv", "klr/weights.csv", "bayes_net/bn.dot",
                 "mlp/shap_global.csv", "mlp/shap_local.json"):
        assert (expl / name).is_file(), name
    cv_rows = (out / "cv.csv").read_text().splitlines()
    assert len(cv_rows) == 2 + 2 * 7 * 3
    lock = json.loads((out / "config.lock.json").read_text())
    assert lock["config_hash"] == parse_config(SMALL).hash()


def test_rerun_is_byte_identical(bundle, tmp_path):
    out, _ = bundle
    experiment.run_experiment(parse_config(SMALL), tmp_path)
    assert _digests(tmp_path) == _digests(out)


def test_scaling_never_sees_held_out_rows(monkeypatch):
    cfg = parse_config(SMALL, ["models.include=klr", "experiment.seeds=0"])
    table = experiment.load_data(cfg, 0)
    prep = experiment.prepare(cfg, table, 0, "MF")
    test_rows = set(prep.test.tolist())
    calls = []
    real = experiment._scaled

    def spy(x_raw, fit_rows, *apply_rows):
        calls.append((set(np.asarray(fit_rows).tolist()), [set(np.asarray(r).tolist()) for r in apply_rows]))
        return real(x_raw, fit_rows, *apply_rows)

    monkeypatch.setattr(experiment, "_scaled", spy)
    experiment.run_model((cfg.values, 0, prep, "klr", False))
    assert len(calls) == 3 + 1
    for fit_rows, applied in calls:
        assert not fit_rows & test_rows
        for rows in applied:
            assert not fit_rows & rows


def test_bad_csv_source_is_a_data_error(tmp_path):
    cfg = parse_config(SMALL, ["data.source=csv", f"data.path={tmp_path / 'none.csv'}"])
    with pytest.raises(experiment.ExperimentError) as info:
        experiment.load_data(cfg, 0)
    assert info.value.stage == "data"
