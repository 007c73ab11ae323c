"""Single entry point: ingest -> curate -> extract -> prune -> train ->
evaluate -> predict/lma -> scan-readme -> report, plus the synthetic-corpus
generator for offline testing.

Exit codes: 0 success, 1 domain errors (error taxonomy in
:mod:`repo_vitality.errors`), 2 usage errors. All randomness flows from
--seed; every run echoes its fully resolved options into the output directory
as <subcommand>_config.json, and that file can be replayed via --config.
"""

from __future__ import annotations

import csv
import functools
import json
import logging
import os
import sys
from pathlib import Path

import click

from . import dataset as dataset_mod
from . import evaluation as eval_mod
from . import features as features_mod
from . import forest as forest_mod
from . import prune as prune_mod
from . import readme_scan as scan_mod
from . import report as report_mod
from . import synth as synth_mod
from .lma import lma as lma_value
from .lma import score_corpus
from .errors import RepoVitalityError
from .snapshot import (
    iter_snapshot_paths,
    load_snapshot,
    load_snapshot_dir,
    parse_ts,
    store_snapshot,
)

logger = logging.getLogger(__name__)

DEFAULT_SEED = 0


_PARAM_ALIASES = {"repo": ("repo_id",), "format": ("fmt",)}


def _expand_option_names(options: dict) -> dict:
    """Echoed option names are flag-like ("features"); click resolves defaults
    by parameter name ("features_path"). Emit every plausible spelling; click
    ignores names a command does not define."""
    out = {}
    for key, value in options.items():
        out[key] = value
        for suffix in ("_path", "_dir", "_text"):
            out[key + suffix] = value
        for alias in _PARAM_ALIASES.get(key, ()):
            out[alias] = value
    return out


def _load_config_map(path: str | None) -> dict:
    if not path:
        return {}
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if "options" in payload and "subcommand" in payload:
        return {payload["subcommand"]: _expand_option_names(payload["options"])}
    return {cmd: _expand_option_names(opts) for cmd, opts in payload.items()}


@click.group(name="repo-vitality")
@click.option("--seed", type=int, default=None, help="Default seed for all subcommands.")
@click.option("--verbose", is_flag=True, help="Debug-level logging.")
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="JSON file with option defaults; explicit flags win.",
)
@click.pass_context
def main(ctx, seed, verbose, config_path):
    """Classify repositories as unmaintained or under maintenance."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    ctx.ensure_object(dict)
    ctx.obj["seed"] = seed
    ctx.default_map = _load_config_map(config_path)


def domain_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except RepoVitalityError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _resolve_seed(ctx, seed):
    if seed is not None:
        return seed
    group_seed = (ctx.obj or {}).get("seed")
    return group_seed if group_seed is not None else DEFAULT_SEED


def _echo_config(out_dir: Path, subcommand: str, options: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {"subcommand": subcommand, "options": options}
    (out_dir / f"{subcommand.replace('-', '_')}_config.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


# --- ingest ------------------------------------------------------------------

@main.command()
@click.option("--repo", "repo_id", required=True, help="owner/name")
@click.option("--as-of", "as_of_text", required=True, help="ISO-8601 capture instant.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option(
    "--token-env",
    default="RV_TOKEN",
    show_default=True,
    help="Environment variable holding the API token.",
)
@click.option("--parallelism", default=4, show_default=True)
@domain_errors
def ingest(repo_id, as_of_text, out_dir, token_env, parallelism):
    """Fetch one repository's history into an offline snapshot."""
    from .github import fetch_snapshot  # deferred: pulls in requests

    token = os.environ.get(token_env, "")
    as_of = parse_ts(as_of_text)
    snapshot = fetch_snapshot(repo_id, token, as_of, parallelism=parallelism)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = store_snapshot(snapshot, out)
    _echo_config(
        out,
        "ingest",
        {
            "repo": repo_id,
            "as_of": as_of_text,
            "out": str(out_dir),
            "token_env": token_env,
            "parallelism": parallelism,
        },
    )
    click.echo(f"wrote {path} ({len(snapshot.events)} events)")


# --- curate ------------------------------------------------------------------

@main.command()
@click.option("--snapshots", "snapshots_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--declared", "declared_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="File of repo ids declared unmaintained, one per line.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--rejected", "rejected_path", type=click.Path(dir_okay=False), default=None,
              help="Optional CSV of rejected projects with reasons.")
@click.option("--min-history-days", default=730, show_default=True)
@click.option("--min-loc", default=1, show_default=True)
@click.option("--excluded-topics", default="books,awesome-lists", show_default=True)
@click.option("--release-window-days", default=30, show_default=True)
@domain_errors
def curate(snapshots_dir, declared_path, out_path, rejected_path,
           min_history_days, min_loc, excluded_topics, release_window_days):
    """Filter a snapshot pool and label the projects that qualify."""
    rules = dataset_mod.CurationRules(
        min_history_days=min_history_days,
        min_loc=min_loc,
        excluded_topics=tuple(t for t in excluded_topics.split(",") if t),
        active_release_window_days=release_window_days,
    )
    declared = dataset_mod.read_declared_list(declared_path) if declared_path else set()
    labels = []
    conflicts = []
    rejected = []
    unlabeled = 0
    n_total = 0
    n_kept = 0
    # snapshots are loaded one at a time: curation and labeling are per project
    for path in iter_snapshot_paths(snapshots_dir):
        snap = load_snapshot(path)
        n_total += 1
        kept_one, rejected_one = dataset_mod.curate([snap], rules)
        if rejected_one:
            rejected.extend(rejected_one)
            continue
        n_kept += 1
        try:
            labeled = dataset_mod.label(kept_one[0], rules, declared)
        except RepoVitalityError as exc:
            conflicts.append(str(exc))
            continue
        if labeled is None:
            unlabeled += 1
        else:
            labels.append(labeled)
    dataset_mod.write_labels_csv(labels, out_path)
    if rejected_path:
        _write_csv(
            rejected_path,
            ["repo_id", "reason", "detail"],
            [[r.repo_id, r.reason, r.detail] for r in rejected],
        )
    _echo_config(
        Path(out_path).parent,
        "curate",
        {
            "snapshots": str(snapshots_dir),
            "declared": str(declared_path) if declared_path else None,
            "out": str(out_path),
            "rejected": str(rejected_path) if rejected_path else None,
            "min_history_days": min_history_days,
            "min_loc": min_loc,
            "excluded_topics": excluded_topics,
            "release_window_days": release_window_days,
        },
    )
    click.echo(
        f"kept {n_kept}/{n_total} projects; labeled {len(labels)} "
        f"({unlabeled} unlabeled form the prediction pool)"
    )
    for line in conflicts:
        click.echo(f"conflict: {line}", err=True)
    if conflicts:
        sys.exit(1)


# --- extract -----------------------------------------------------------------

@main.command()
@click.option("--scenario", "scenario_text", required=True,
              help="Scenario id 1..10 or explicit n,m (months).")
@click.option("--snapshots", "snapshots_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@domain_errors
def extract(scenario_text, snapshots_dir, out_path):
    """Extract the windowed data-point vectors into a CSV feature table."""
    scenario = features_mod.ScenarioConfig.parse(scenario_text)
    vectors = []
    for path in iter_snapshot_paths(snapshots_dir):
        snap = load_snapshot(path)
        try:
            vec = features_mod.extract_vector(snap, scenario)
        except RepoVitalityError as exc:
            logger.warning("skipping %s: %s", snap.repo_id, exc)
            continue
        if vec.short_history:
            logger.warning("%s: history shorter than the collection span", snap.repo_id)
        vectors.append(vec)
    if not vectors:
        raise RepoVitalityError("no snapshot yielded a feature vector")
    table = features_mod.FeatureTable.from_vectors(vectors)
    table.write_csv(out_path)
    _echo_config(
        Path(out_path).parent,
        "extract",
        {"scenario": scenario_text, "snapshots": str(snapshots_dir), "out": str(out_path)},
    )
    click.echo(f"wrote {out_path}: {len(table.repo_ids)} rows x {len(table.names)} data points")


# --- prune ---------------------------------------------------------------

@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--threshold", default=prune_mod.DEFAULT_THRESHOLD, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--report", "report_path", required=True, type=click.Path(dir_okay=False))
@domain_errors
def prune(in_path, threshold, out_path, report_path):
    """Drop correlated data points, keeping one representative per cluster."""
    table = features_mod.FeatureTable.read_csv(in_path)
    pruned, corr_report = prune_mod.prune_table(table, threshold)
    pruned.write_csv(out_path)
    Path(report_path).write_text(corr_report.to_json(), encoding="utf-8")
    _echo_config(
        Path(out_path).parent,
        "prune",
        {
            "in": str(in_path),
            "threshold": threshold,
            "out": str(out_path),
            "report": str(report_path),
        },
    )
    removed_pct = 100.0 * len(corr_report.removed) / max(1, len(table.names))
    click.echo(
        f"kept {len(corr_report.kept)} of {len(table.names)} data points "
        f"({len(corr_report.removed)} removed, {removed_pct:.0f}%)"
    )


# --- train ---------------------------------------------------------------

def _join_features_labels(features_path, labels_path):
    table = features_mod.FeatureTable.read_csv(features_path)
    labels = {l.snapshot_ref: l.label for l in dataset_mod.read_labels_csv(labels_path)}
    keep_rows = [i for i, rid in enumerate(table.repo_ids) if rid in labels]
    dropped = len(table.repo_ids) - len(keep_rows)
    if dropped:
        logger.info("%d feature rows have no label and were dropped", dropped)
    repo_ids = [table.repo_ids[i] for i in keep_rows]
    return (
        features_mod.FeatureTable(table.names, repo_ids, table.values[keep_rows, :]),
        [labels[rid] for rid in repo_ids],
    )


@main.command()
@click.option("--features", "features_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--labels", "labels_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--trees", default=100, show_default=True)
@click.option("--mtry", default=None, type=int, help="Features per split; default sqrt.")
@click.option("--min-leaf", default=1, show_default=True)
@click.option("--max-depth", default=None, type=int)
@click.option("--seed", default=None, type=int)
@click.option("--jobs", default=1, show_default=True, help="Parallel tree growth.")
@click.option("--scenario", "scenario_text", default=None,
              help="Override the scenario inferred from data-point names.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.pass_context
@domain_errors
def train(ctx, features_path, labels_path, trees, mtry, min_leaf, max_depth, seed,
          jobs, scenario_text, out_path):
    """Train the Random Forest classifier and serialize it to a model file."""
    seed = _resolve_seed(ctx, seed)
    table, labels = _join_features_labels(features_path, labels_path)
    if scenario_text:
        scenario = features_mod.ScenarioConfig.parse(scenario_text)
    else:
        try:
            scenario = features_mod.infer_scenario(table.names)
        except RepoVitalityError:
            scenario = None
            logger.warning("could not infer a scenario from data-point names")
    params = forest_mod.ForestParams(
        n_trees=trees, mtry=mtry, min_leaf=min_leaf, max_depth=max_depth, seed=seed
    )
    model = forest_mod.train(
        table.values, labels, params, feature_names=table.names,
        scenario=scenario, n_jobs=jobs,
    )
    forest_mod.save_model(model, out_path)
    _echo_config(
        Path(out_path).parent,
        "train",
        {
            "features": str(features_path),
            "labels": str(labels_path),
            "trees": trees,
            "mtry": mtry,
            "min_leaf": min_leaf,
            "max_depth": max_depth,
            "seed": seed,
            "jobs": jobs,
            "scenario": scenario_text,
            "out": str(out_path),
        },
    )
    click.echo(f"trained {trees} trees on {len(labels)} projects -> {out_path}")


# --- evaluate ---------------------------------------------------------------

_METRIC_COLUMNS = [
    f"{who}_{metric}"
    for who in ("model", "baseline1", "baseline2")
    for metric in eval_mod.MetricSet.FIELDS
]


@main.command()
@click.option("--features", "features_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--labels", "labels_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--folds", default=5, show_default=True)
@click.option("--rounds", default=100, show_default=True)
@click.option("--trees", default=100, show_default=True)
@click.option("--mtry", default=None, type=int)
@click.option("--seed", default=None, type=int)
@click.option("--aggregate", type=click.Choice(["pooled", "per_fold"]), default="pooled",
              show_default=True)
@click.option("--jobs", default=1, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.pass_context
@domain_errors
def evaluate(ctx, features_path, labels_path, folds, rounds, trees, mtry, seed,
             aggregate, jobs, out_path):
    """Stratified k-fold cross-validation over repeated rounds, with baselines."""
    seed = _resolve_seed(ctx, seed)
    table, labels = _join_features_labels(features_path, labels_path)
    params = forest_mod.ForestParams(n_trees=trees, mtry=mtry, seed=seed)
    result = eval_mod.run_experiment(
        table.values, labels, params, k=folds, rounds=rounds,
        feature_names=table.names, aggregate=aggregate, n_jobs=jobs,
    )
    rows = []
    for idx, rnd in enumerate(result.rounds, start=1):
        rows.append(
            [str(idx)]
            + [_fmt(v) for s in (rnd.model, rnd.baseline1, rnd.baseline2) for v in s.as_tuple()]
        )
    mean = result.mean
    rows.append(
        ["MEAN"]
        + [_fmt(v) for s in (mean.model, mean.baseline1, mean.baseline2) for v in s.as_tuple()]
    )
    _write_csv(out_path, ["round"] + _METRIC_COLUMNS, rows)
    _echo_config(
        Path(out_path).parent,
        "evaluate",
        {
            "features": str(features_path),
            "labels": str(labels_path),
            "folds": folds,
            "rounds": rounds,
            "trees": trees,
            "mtry": mtry,
            "seed": seed,
            "aggregate": aggregate,
            "jobs": jobs,
            "out": str(out_path),
        },
    )
    m = mean.model
    click.echo(
        f"mean over {rounds} rounds: accuracy={m.accuracy:.3f} precision={m.precision:.3f} "
        f"recall={m.recall:.3f} F={m.f_measure:.3f} kappa={m.kappa:.3f} AUC={m.auc:.3f}"
    )


# --- predict / lma -----------------------------------------------------------

def _vector_for(model, snapshot, scenario_text):
    if scenario_text:
        scenario = features_mod.ScenarioConfig.parse(scenario_text)
    elif model.scenario is not None:
        scenario = model.scenario
    else:
        raise RepoVitalityError("model has no scenario; pass --scenario")
    return features_mod.extract_vector(snapshot, scenario)


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--snapshot", "snapshot_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--scenario", "scenario_text", default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json",
              show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Write the record here instead of stdout.")
@domain_errors
def predict(model_path, snapshot_path, scenario_text, fmt, out_path):
    """Classify one snapshot and report its maintenance-activity score."""
    model = forest_mod.load_model(model_path)
    snapshot = load_snapshot(snapshot_path)
    vector = _vector_for(model, snapshot, scenario_text)
    p_active = forest_mod.predict_proba(model, vector)
    label = "active" if p_active >= 0.5 else "unmaintained"
    score = lma_value(p_active)
    if fmt == "json":
        text = json.dumps(
            {"repo_id": snapshot.repo_id, "label": label, "p_active": p_active, "lma": score},
            sort_keys=True,
        ) + "\n"
    else:
        text = (
            "repo_id,label,p_active,lma\n"
            f"{snapshot.repo_id},{label},{_fmt(p_active)},{_fmt(score)}\n"
        )
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
        _echo_config(
            Path(out_path).parent,
            "predict",
            {
                "model": str(model_path),
                "snapshot": str(snapshot_path),
                "scenario": scenario_text,
                "format": fmt,
                "out": str(out_path),
            },
        )
    else:
        click.echo(text, nl=False)


@main.command(name="lma")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--snapshots", "snapshots_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--scenario", "scenario_text", default=None)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@domain_errors
def lma_command(model_path, snapshots_dir, scenario_text, out_path):
    """Score a snapshot directory; LMA is defined for projects predicted active."""
    model = forest_mod.load_model(model_path)
    vectors = [
        _vector_for(model, load_snapshot(path), scenario_text)
        for path in iter_snapshot_paths(snapshots_dir)
    ]
    scores, summary = score_corpus(model, vectors)
    _write_csv(
        out_path,
        ["repo_id", "p_active", "lma"],
        [[s.repo_id, _fmt(s.p_active), _fmt(s.lma)] for s in scores],
    )
    _echo_config(
        Path(out_path).parent,
        "lma",
        {
            "model": str(model_path),
            "snapshots": str(snapshots_dir),
            "scenario": scenario_text,
            "out": str(out_path),
        },
    )
    if summary.n_active:
        click.echo(
            f"scored {summary.n_scored} projects, {summary.n_active} predicted active; "
            f"LMA quartiles {summary.q1:.0f}/{summary.q2:.0f}/{summary.q3:.0f}, "
            f"{summary.count_max} at 100"
        )
    else:
        click.echo(f"scored {summary.n_scored} projects; none predicted active")


# --- scan-readme --------------------------------------------------------------

@main.command(name="scan-readme")
@click.option("--snapshots", "snapshots_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--sentences", "sentences_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Sentence list, one per line; default is the built-in 15.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@domain_errors
def scan_readme(snapshots_dir, sentences_path, out_path):
    """Find self-declared unmaintained notices; output needs human confirmation."""
    sentences = (
        scan_mod.load_sentences(sentences_path)
        if sentences_path
        else scan_mod.DEFAULT_SENTENCES
    )
    rows = []
    matched_projects = 0
    for path in iter_snapshot_paths(snapshots_dir):
        snap = load_snapshot(path)
        result = scan_mod.scan(snap.readme_text, sentences, repo_id=snap.repo_id)
        if result.matched:
            matched_projects += 1
        for sentence, offset in result.matched:
            rows.append([snap.repo_id, sentence, str(offset), ""])
    _write_csv(out_path, ["repo_id", "matched_sentence", "offset", "confirmed"], rows)
    _echo_config(
        Path(out_path).parent,
        "scan-readme",
        {
            "snapshots": str(snapshots_dir),
            "sentences": str(sentences_path) if sentences_path else None,
            "out": str(out_path),
        },
    )
    click.echo(f"{matched_projects} projects matched; every hit needs manual review")


# --- report -------------------------------------------------------------------

@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--snapshots", "snapshots_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--as-of", "as_of_text", default=None,
              help="Reference instant for days-since-last-commit; default per snapshot.")
@click.option("--figures/--no-figures", default=True, show_default=True)
@domain_errors
def report(model_path, snapshots_dir, out_dir, as_of_text, figures):
    """Emit the analysis tables (and figures) for a scored corpus."""
    model = forest_mod.load_model(model_path)
    snapshots = load_snapshot_dir(snapshots_dir)
    as_of = parse_ts(as_of_text) if as_of_text else None
    report_mod.emit_report(model, snapshots, out_dir, as_of=as_of, figures=figures)
    _echo_config(
        Path(out_dir),
        "report",
        {
            "model": str(model_path),
            "snapshots": str(snapshots_dir),
            "out": str(out_dir),
            "as_of": as_of_text,
            "figures": figures,
        },
    )
    click.echo(f"report written to {out_dir}")


# --- synth --------------------------------------------------------------------

@main.command()
@click.option("--projects", default=500, show_default=True)
@click.option("--seed", default=None, type=int)
@click.option("--prevalence", default=0.22, show_default=True)
@click.option("--history-days", default=1020.0, show_default=True)
@click.option("--commit-floor", default=0.0, show_default=True,
              help="Residual commit rate of unmaintained projects (0 = dead stop).")
@click.option("--decay-start", default=540.0, show_default=True,
              help="Days before capture when decay begins.")
@click.option("--decay-end", default=150.0, show_default=True,
              help="Days before capture when decay reaches the floor.")
@click.option("--readme-notice-fraction", default=0.3, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.pass_context
@domain_errors
def synth(ctx, projects, seed, prevalence, history_days, commit_floor, decay_start,
          decay_end, readme_notice_fraction, out_dir):
    """Generate a reproducible synthetic corpus with labels."""
    seed = _resolve_seed(ctx, seed)
    params = synth_mod.SynthParams(
        n_projects=projects,
        seed=seed,
        prevalence=prevalence,
        history_days=history_days,
        readme_notice_fraction=readme_notice_fraction,
        decay=synth_mod.DecayParams(
            start_days_before=decay_start,
            end_days_before=decay_end,
            commit_floor=commit_floor,
        ),
    )
    count, labels_path = synth_mod.write_corpus(params, out_dir)
    _echo_config(
        Path(out_dir),
        "synth",
        {
            "projects": projects,
            "seed": seed,
            "prevalence": prevalence,
            "history_days": history_days,
            "commit_floor": commit_floor,
            "decay_start": decay_start,
            "decay_end": decay_end,
            "readme_notice_fraction": readme_notice_fraction,
            "out": str(out_dir),
        },
    )
    click.echo(f"wrote {count} snapshots and {labels_path}")


if __name__ == "__main__":
    main()
