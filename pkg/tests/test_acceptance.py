"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion lines.
The end-to-end criteria run on the built-in synthetic corpus generator, which
is the reproducible stand-in for the unpublishable labeled corpus.
"""

from __future__ import annotations

import functools
import math
import time

import numpy as np
import pytest
from click.testing import CliRunner

from repo_vitality.cli import main as cli_main
from repo_vitality.evaluation import (
    ConfusionMatrix,
    baseline_all_unmaintained,
    baseline_random,
    compute_metrics,
    run_experiment,
)
from repo_vitality.features import (
    COMMIT_DERIVED_FEATURES,
    FeatureTable,
    ScenarioConfig,
    extract_vector,
    window_label,
)
from repo_vitality.forest import (
    ForestParams,
    mda_importance,
    predict_proba_matrix,
    train,
)
from repo_vitality.lma import lma
from repo_vitality.prune import cluster_and_select, correlation_matrix, prune_table
from repo_vitality.report import days_since_last_commit
from repo_vitality.synth import DecayParams, SynthParams, generate_corpus

from test_forest import _oracle_cart, _oracle_predict

SCENARIO_8 = ScenarioConfig(24, 3)


def criterion(number: int, description: str):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"\ncriterion {number:2d} FAIL  {description}")
                raise
            print(f"\ncriterion {number:2d} PASS  {description}")

        return wrapper

    return decorate


@pytest.fixture(scope="module")
def synth_pipeline():
    """synth(500, defaults, seed) -> scenario 8 vectors -> prune 0.7."""
    params = SynthParams(n_projects=500, seed=7)
    snapshots_meta = []  # (repo_id, days_since_last_commit)
    vectors, labels = [], []
    for snap, lab in generate_corpus(params):
        vectors.append(extract_vector(snap, SCENARIO_8))
        labels.append(lab.label)
        snapshots_meta.append(
            (snap.repo_id, days_since_last_commit(snap, snap.as_of))
        )
    table = FeatureTable.from_vectors(vectors)
    pruned, report = prune_table(table, 0.7)
    return {
        "params": params,
        "table": table,
        "pruned": pruned,
        "report": report,
        "labels": labels,
        "meta": snapshots_meta,
    }


@criterion(1, "scenario data-point shapes match the published table exactly")
def test_scenario_shapes():
    expected = {1: 26, 2: 13, 3: 52, 4: 26, 5: 13, 6: 78, 7: 39, 8: 104, 9: 52, 10: 26}
    snap, _ = next(iter(generate_corpus(SynthParams(n_projects=10, seed=1))))
    start = time.perf_counter()
    for sid, count in expected.items():
        vec = extract_vector(snap, ScenarioConfig.from_id(sid))
        assert len(vec.points) == count, f"scenario {sid}"
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"took {elapsed:.2f}s"


@criterion(2, "always-unmaintained baseline reproduces the published row at 22%")
def test_baseline1_reproduction():
    y = ["unmaintained"] * 110 + ["active"] * 390
    m = baseline_all_unmaintained(y)
    assert m.accuracy == 0.22
    assert m.precision == 0.22
    assert m.recall == 1.0
    assert abs(m.f_measure - 0.36) <= 0.01
    assert m.kappa == 0.0
    assert m.auc == 0.5


@criterion(3, "random baseline sits at chance on a 5000-instance 22% set")
def test_baseline2_behavior():
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    y = ["unmaintained" if v < 0.22 else "active" for v in rng.random(5000)]
    m = baseline_random(y, seed=2)
    assert abs(m.accuracy - 0.50) <= 0.03
    assert abs(m.recall - 0.50) <= 0.05
    assert abs(m.kappa) <= 0.03
    assert time.perf_counter() - start < 5.0


@criterion(4, "maintenance-activity score closed form and vote quantization")
def test_lma_closed_form():
    assert lma(0.5) == 0.0
    assert lma(1.0) == 100.0
    for k in range(50, 101):
        value = lma(k / 100)
        assert math.isclose(value, 2 * (k - 50), abs_tol=1e-9)
        assert round(value) % 2 == 0


@criterion(5, "six metrics match a brute-force oracle to 1e-12 on 50 random inputs")
def test_metric_oracle():
    from test_evaluation import _brute_force_metrics

    rng = np.random.default_rng(3)
    checked = 0
    while checked < 50:
        tp, fp, fn, tn = (int(v) for v in rng.integers(0, 30, size=4))
        cm = ConfusionMatrix(tp, fp, fn, tn)
        if cm.total == 0:
            continue
        checked += 1
        labels = ["unmaintained"] * (tp + fn) + ["active"] * (fp + tn)
        scores = [(float(np.round(rng.random(), 1)), lab) for lab in labels]
        mine = compute_metrics(cm, scores).as_tuple()
        oracle = _brute_force_metrics(cm, scores)
        for a, b in zip(mine, oracle):
            assert math.isclose(a, b, abs_tol=1e-12)


@criterion(6, "single identity-bootstrap tree equals the exhaustive CART oracle")
def test_forest_oracle():
    rng = np.random.default_rng(4)
    for trial in range(10):
        X = np.round(rng.uniform(0, 1, size=(8, 3)), 3)
        y01 = rng.integers(0, 2, size=8)
        y01[0], y01[1] = 0, 1
        y = ["active" if v else "unmaintained" for v in y01]
        params = ForestParams(n_trees=1, mtry=3, seed=trial, bootstrap=False)
        model = train(X, y, params)
        oracle_root = _oracle_cart(X, y01)
        probes = np.vstack([X, rng.uniform(0, 1, size=(50, 3))])
        mine = model.trees[0].votes(probes)
        theirs = np.asarray([_oracle_predict(oracle_root, x) for x in probes])
        assert np.array_equal(mine, theirs), f"trial {trial}"


@criterion(7, "end-to-end synthetic pipeline reaches AUC >= 0.90 and F >= 0.80")
def test_end_to_end_synthetic(synth_pipeline):
    start = time.perf_counter()
    pruned = synth_pipeline["pruned"]
    labels = synth_pipeline["labels"]
    assert labels.count("unmaintained") == 110  # 22% of 500
    result = run_experiment(
        pruned.values,
        labels,
        ForestParams(n_trees=100, seed=11),
        k=5,
        rounds=20,
        feature_names=pruned.names,
    )
    elapsed = time.perf_counter() - start
    mean = result.mean.model
    assert mean.auc >= 0.90, f"AUC {mean.auc:.3f}"
    assert mean.f_measure >= 0.80, f"F {mean.f_measure:.3f}"
    assert elapsed < 180.0, f"took {elapsed:.0f}s"


@criterion(8, "recent-window commit features dominate MDA; planted noise stays <3")
def test_mda_sanity(synth_pipeline):
    start = time.perf_counter()
    pruned = synth_pipeline["pruned"]
    labels = synth_pipeline["labels"]
    rng = np.random.default_rng(99)
    names = pruned.names + ["planted_noise"]
    values = np.hstack([pruned.values, rng.uniform(0, 1, size=(len(labels), 1))])
    model = train(
        values, labels, ForestParams(n_trees=100, seed=23), feature_names=names
    )
    importance = mda_importance(model, values, labels, repeats=10)
    ranked = [name for name, _ in importance.sorted_rows()]
    last_label = window_label(SCENARIO_8.window_count, SCENARIO_8.interval_months)
    surviving_commit_points = [
        n for n in pruned.names
        if n.endswith("@" + last_label)
        and n.split("@")[0] in COMMIT_DERIVED_FEATURES
    ]
    assert surviving_commit_points, "pruning removed every recent commit point"
    for name in surviving_commit_points:
        assert ranked.index(name) < 5, f"{name} ranked {ranked.index(name) + 1}"
    noise = importance.as_dict()["planted_noise"]
    assert abs(noise) < 3.0, f"noise MDA {noise:.2f}"
    assert time.perf_counter() - start < 120.0


@criterion(9, "every pruned point keeps |rho| >= 0.7 with its representative")
def test_pruning_guarantee():
    rng = np.random.default_rng(5)
    for trial in range(20):
        n_rows = int(rng.integers(40, 90))
        base = rng.normal(size=(n_rows, 4))
        cols = [base[:, i] for i in range(4)]
        for i in range(4):
            cols.append(
                base[:, i] * rng.uniform(0.5, 3.0)
                + rng.normal(scale=rng.uniform(0.01, 0.5), size=n_rows)
            )
        values = np.asarray(cols).T
        names = [f"c{i}" for i in range(values.shape[1])]
        table = FeatureTable(names, [f"r{i}" for i in range(n_rows)], values)
        matrix = correlation_matrix(table)
        report = cluster_and_select(matrix, names, 0.7)
        pos = {n: i for i, n in enumerate(names)}
        rep_of = {
            member: cluster.representative
            for cluster in report.clusters
            for member in cluster.members
        }
        for removed in report.removed:
            rho = matrix[pos[removed], pos[rep_of[removed]]]
            assert abs(rho) >= 0.7, f"trial {trial}: {removed} rho={rho:.3f}"


@criterion(10, "half or more of sporadic-commit decayers are caught early")
def test_early_detection(synth_pipeline):
    start = time.perf_counter()
    pruned = synth_pipeline["pruned"]
    labels = synth_pipeline["labels"]
    model = train(
        pruned.values, labels, ForestParams(n_trees=100, seed=31),
        feature_names=pruned.names,
    )
    sporadic = SynthParams(
        n_projects=60, seed=101, prevalence=1.0,
        decay=DecayParams(commit_floor=0.05),
    )
    n_recent = 0
    n_caught = 0
    for snap, _ in generate_corpus(sporadic):
        if days_since_last_commit(snap, snap.as_of) >= 365:
            continue
        n_recent += 1
        vec = extract_vector(snap, SCENARIO_8)
        row = np.asarray([[vec.points[name] for name in pruned.names]])
        if predict_proba_matrix(model, row)[0] < 0.5:
            n_caught += 1
    assert n_recent >= 30, "generator failed to produce recently-committing decayers"
    assert n_caught / n_recent >= 0.5, f"caught {n_caught}/{n_recent}"
    assert time.perf_counter() - start < 120.0


@criterion(11, "subcommands are byte-deterministic at any parallelism level")
def test_determinism(tmp_path):
    runner = CliRunner()

    def run(*args):
        result = runner.invoke(cli_main, [str(a) for a in args], catch_exceptions=False)
        assert result.exit_code == 0, result.output

    def same(a, b):
        assert a.read_bytes() == b.read_bytes(), a.name

    c1, c2 = tmp_path / "c1", tmp_path / "c2"
    run("synth", "--projects", 25, "--seed", 9, "--out", c1)
    run("synth", "--projects", 25, "--seed", 9, "--out", c2)
    for p in sorted(c1.glob("*.jsonl")):
        same(p, c2 / p.name)
    same(c1 / "labels.csv", c2 / "labels.csv")

    f1, f2 = tmp_path / "f1.csv", tmp_path / "f2.csv"
    run("extract", "--scenario", 8, "--snapshots", c1, "--out", f1)
    run("extract", "--scenario", 8, "--snapshots", c1, "--out", f2)
    same(f1, f2)

    p1, p2 = tmp_path / "p1.csv", tmp_path / "p2.csv"
    run("prune", "--in", f1, "--threshold", 0.7, "--out", p1, "--report", tmp_path / "r1.json")
    run("prune", "--in", f1, "--threshold", 0.7, "--out", p2, "--report", tmp_path / "r2.json")
    same(p1, p2)
    same(tmp_path / "r1.json", tmp_path / "r2.json")

    m1, m2, m4 = (tmp_path / n for n in ("m1.rvf", "m2.rvf", "m4.rvf"))
    train_args = ("train", "--features", p1, "--labels", c1 / "labels.csv",
                  "--trees", 20, "--seed", 3)
    run(*train_args, "--jobs", 1, "--out", m1)
    run(*train_args, "--jobs", 1, "--out", m2)
    run(*train_args, "--jobs", 4, "--out", m4)
    same(m1, m2)
    same(m1, m4)  # parallelism level cannot change the model

    e1, e2 = tmp_path / "e1.csv", tmp_path / "e2.csv"
    eval_args = ("evaluate", "--features", p1, "--labels", c1 / "labels.csv",
                 "--folds", 5, "--rounds", 2, "--trees", 15, "--seed", 4)
    run(*eval_args, "--jobs", 1, "--out", e1)
    run(*eval_args, "--jobs", 2, "--out", e2)
    same(e1, e2)

    l1, l2 = tmp_path / "l1.csv", tmp_path / "l2.csv"
    run("lma", "--model", m1, "--snapshots", c1, "--out", l1)
    run("lma", "--model", m1, "--snapshots", c1, "--out", l2)
    same(l1, l2)

    g1, g2 = tmp_path / "g1.csv", tmp_path / "g2.csv"
    run("scan-readme", "--snapshots", c1, "--out", g1)
    run("scan-readme", "--snapshots", c1, "--out", g2)
    same(g1, g2)

    rep1, rep2 = tmp_path / "rep1", tmp_path / "rep2"
    run("report", "--model", m1, "--snapshots", c1, "--out", rep1)
    run("report", "--model", m1, "--snapshots", c1, "--out", rep2)
    for p in sorted(rep1.iterdir()):
        if p.name.endswith("_config.json"):
            continue
        same(p, rep2 / p.name)
