from __future__ import annotations

import csv
import json

import pytest
from click.testing import CliRunner

from repo_vitality.cli import main
from repo_vitality.dataset import LabeledProject, write_labels_csv
from repo_vitality.features import FeatureTable

runner = CliRunner()


def _run(*args, expect=0):
    result = runner.invoke(main, [str(a) for a in args], catch_exceptions=False)
    assert result.exit_code == expect, result.output
    return result


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """synth -> extract -> prune -> train, shared by the command tests."""
    root = tmp_path_factory.mktemp("pipeline")
    corpus = root / "corpus"
    _run("synth", "--projects", 30, "--seed", 5, "--out", corpus)
    _run("extract", "--scenario", 8, "--snapshots", corpus, "--out", root / "features.csv")
    _run(
        "prune", "--in", root / "features.csv", "--threshold", 0.7,
        "--out", root / "pruned.csv", "--report", root / "clusters.json",
    )
    _run(
        "train", "--features", root / "pruned.csv", "--labels", corpus / "labels.csv",
        "--trees", 30, "--seed", 9, "--out", root / "model.rvf",
    )
    return root


def test_extract_shape_on_three_snapshots(tmp_path):
    corpus = tmp_path / "c3"
    _run("synth", "--projects", 10, "--seed", 2, "--out", corpus)
    # keep only three snapshot files
    for extra in sorted(corpus.glob("*.snapshot.jsonl"))[3:]:
        extra.unlink()
    out = tmp_path / "f.csv"
    _run("extract", "--scenario", 8, "--snapshots", corpus, "--out", out)
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 1 + 3
    assert len(rows[0]) == 1 + 104  # repo_id + scenario-8 data points


def test_unknown_subcommand_exits_2():
    result = runner.invoke(main, ["frobnicate"])
    assert result.exit_code == 2


def test_usage_error_exits_2():
    result = runner.invoke(main, ["extract", "--scenario", "8"])
    assert result.exit_code == 2


def test_domain_error_exits_1(tmp_path, pipeline):
    # single-class labels: train must fail with a domain error
    labels = [LabeledProject(f"synthetic/proj-{i:04d}", "unmaintained", "archived") for i in range(30)]
    bad = tmp_path / "bad_labels.csv"
    write_labels_csv(labels, bad)
    result = runner.invoke(
        main,
        ["train", "--features", str(pipeline / "pruned.csv"), "--labels", str(bad),
         "--trees", "5", "--seed", "1", "--out", str(tmp_path / "m.rvf")],
    )
    assert result.exit_code == 1
    assert "error:" in result.output


def test_evaluate_deterministic_and_mean_row(pipeline, tmp_path):
    args = [
        "evaluate", "--features", pipeline / "pruned.csv",
        "--labels", pipeline / "corpus" / "labels.csv",
        "--folds", 5, "--rounds", 2, "--trees", 20, "--seed", 3,
    ]
    out1, out2 = tmp_path / "m1.csv", tmp_path / "m2.csv"
    _run(*args, "--out", out1)
    _run(*args, "--out", out2)
    assert out1.read_bytes() == out2.read_bytes()
    with open(out1, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "round"
    assert len(rows[0]) == 1 + 18  # six metrics x model/baseline1/baseline2
    assert [r[0] for r in rows[1:]] == ["1", "2", "MEAN"]


def test_config_echo_replay(pipeline, tmp_path):
    out1 = tmp_path / "e1.csv"
    _run(
        "evaluate", "--features", pipeline / "pruned.csv",
        "--labels", pipeline / "corpus" / "labels.csv",
        "--folds", 5, "--rounds", 1, "--trees", 10, "--seed", 4, "--out", out1,
    )
    echo = tmp_path / "evaluate_config.json"
    assert echo.exists()
    payload = json.loads(echo.read_text())
    assert payload["subcommand"] == "evaluate"
    assert payload["options"]["seed"] == 4
    out2 = tmp_path / "e2.csv"
    _run("--config", echo, "evaluate", "--out", out2)
    assert out1.read_bytes() == out2.read_bytes()


def test_synth_rerun_byte_identical(tmp_path):
    d1, d2 = tmp_path / "s1", tmp_path / "s2"
    _run("synth", "--projects", 12, "--seed", 8, "--out", d1)
    _run("synth", "--projects", 12, "--seed", 8, "--out", d2)
    data_files = [p for p in sorted(d1.iterdir()) if not p.name.endswith("_config.json")]
    assert data_files
    for p1 in data_files:
        assert (d2 / p1.name).read_bytes() == p1.read_bytes()


def test_train_parallelism_invariant(pipeline, tmp_path):
    base_args = [
        "train", "--features", pipeline / "pruned.csv",
        "--labels", pipeline / "corpus" / "labels.csv",
        "--trees", 20, "--seed", 11,
    ]
    m1, m2 = tmp_path / "m1.rvf", tmp_path / "m2.rvf"
    _run(*base_args, "--jobs", 1, "--out", m1)
    _run(*base_args, "--jobs", 4, "--out", m2)
    assert m1.read_bytes() == m2.read_bytes()


def test_predict_json_and_csv(pipeline):
    snap = sorted((pipeline / "corpus").glob("*.snapshot.jsonl"))[0]
    result = _run("predict", "--model", pipeline / "model.rvf", "--snapshot", snap)
    record = json.loads(result.output)
    assert set(record) == {"repo_id", "label", "p_active", "lma"}
    assert record["label"] in ("active", "unmaintained")
    result = _run(
        "predict", "--model", pipeline / "model.rvf", "--snapshot", snap,
        "--format", "csv",
    )
    lines = result.output.strip().splitlines()
    assert lines[0] == "repo_id,label,p_active,lma"


def test_predict_infers_scenario_from_model(pipeline):
    # no --scenario flag needed: the model carries the window layout
    snap = sorted((pipeline / "corpus").glob("*.snapshot.jsonl"))[1]
    _run("predict", "--model", pipeline / "model.rvf", "--snapshot", snap)


def test_lma_command(pipeline, tmp_path):
    out = tmp_path / "lma.csv"
    _run(
        "lma", "--model", pipeline / "model.rvf",
        "--snapshots", pipeline / "corpus", "--out", out,
    )
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["repo_id", "p_active", "lma"]
    assert len(rows) == 1 + 30


def test_curate_matches_synth_labels(pipeline, tmp_path):
    out = tmp_path / "labels.csv"
    _run("curate", "--snapshots", pipeline / "corpus", "--out", out)
    emitted = sorted(out.read_text().splitlines()[1:])
    reference = sorted((pipeline / "corpus" / "labels.csv").read_text().splitlines()[1:])
    assert emitted == reference


def test_scan_readme_output(pipeline, tmp_path):
    out = tmp_path / "ground_truth.csv"
    _run("scan-readme", "--snapshots", pipeline / "corpus", "--out", out)
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["repo_id", "matched_sentence", "offset", "confirmed"]
    assert all(row[3] == "" for row in rows[1:])  # confirmed left blank for humans
    assert len(rows) > 1  # some synthetic projects carry notices


def test_report_command(pipeline, tmp_path):
    out = tmp_path / "report"
    _run(
        "report", "--model", pipeline / "model.rvf",
        "--snapshots", pipeline / "corpus", "--out", out,
    )
    for name in ("lma_distribution.csv", "activity_series.png", "summary.csv"):
        assert (out / name).exists()


def test_prune_report_written(pipeline):
    payload = json.loads((pipeline / "clusters.json").read_text())
    table = FeatureTable.read_csv(pipeline / "pruned.csv")
    assert payload["kept"] == table.names
    assert sorted(payload["kept"] + payload["removed"]) == sorted(
        FeatureTable.read_csv(pipeline / "features.csv").names
    )


def test_ingest_stores_snapshot(tmp_path, monkeypatch):
    from conftest import ev, make_snapshot

    snap = make_snapshot(repo_id="octo/demo", events=[ev("commit", 2)])

    def fake_fetch(repo_id, token, as_of, parallelism=4, **kwargs):
        assert repo_id == "octo/demo"
        assert token == "sekrit"
        return snap

    monkeypatch.setenv("MY_TOKEN", "sekrit")
    monkeypatch.setattr("repo_vitality.github.fetch_snapshot", fake_fetch)
    out = tmp_path / "snaps"
    _run(
        "ingest", "--repo", "octo/demo", "--as-of", "2021-06-30T00:00:00+00:00",
        "--out", out, "--token-env", "MY_TOKEN",
    )
    assert (out / "octo__demo.snapshot.jsonl").exists()
    echoed = json.loads((out / "ingest_config.json").read_text())
    assert echoed["options"]["token_env"] == "MY_TOKEN"
    assert "sekrit" not in (out / "ingest_config.json").read_text()


def test_ingest_missing_token_is_domain_error(tmp_path, monkeypatch):
    monkeypatch.delenv("RV_TOKEN", raising=False)
    result = runner.invoke(
        main,
        ["ingest", "--repo", "a/b", "--as-of", "2021-06-30T00:00:00+00:00",
         "--out", str(tmp_path)],
    )
    assert result.exit_code == 1
    assert "error:" in result.output


def test_global_seed_flows_to_subcommand(tmp_path):
    d1, d2 = tmp_path / "g1", tmp_path / "g2"
    _run("--seed", 17, "synth", "--projects", 10, "--out", d1)
    _run("synth", "--projects", 10, "--seed", 17, "--out", d2)
    snapshots = sorted(d1.glob("*.snapshot.jsonl"))
    assert snapshots
    for p1 in snapshots:
        assert (d2 / p1.name).read_bytes() == p1.read_bytes()
