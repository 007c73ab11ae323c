"""Report tables behind the analysis figures: days-since-last-commit
distribution, activity time series of high- vs low-scored projects, and the
correlation of the maintenance-activity score with popularity/size metrics.

Every table is CSV-serializable with a documented header; scalar statistics
land in a summary table. Figure rendering lives in :mod:`repo_vitality.figures`
and consumes these tables, so the CSVs stay the canonical output.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

from .errors import DegenerateInputError, NoCommitsError
from .features import ScenarioConfig, extract_vector, windows
from .forest import ForestModel
from .lma import score_corpus
from .snapshot import ProjectSnapshot
from .stats import quartiles, spearman_with_pvalue

ACTIVITY_METRICS = (
    ("commits", "commit"),
    ("issues", "issue_open"),
    ("pull_requests", "pr_open"),
    ("forks", "fork"),
)


@dataclass
class Table:
    header: list[str]
    rows: list[list]


@dataclass
class ReportBundle:
    tables: dict[str, Table] = field(default_factory=dict)
    summary: dict[str, float | int | str] = field(default_factory=dict)


def days_since_last_commit(snapshot: ProjectSnapshot, as_of: datetime) -> float:
    """Fractional days between ``as_of`` and the last commit."""
    last = snapshot.last_commit()
    if last is None:
        raise NoCommitsError(snapshot.repo_id)
    return (as_of - last).total_seconds() / 86400.0


def core_contributors(snapshot: ProjectSnapshot) -> list[str]:
    """Smallest set of top committers jointly holding >= 80% of the commits.

    Authors are ranked by commit count descending, ties broken by author id;
    the returned prefix is minimal.
    """
    counts: dict[str, int] = {}
    total = 0
    for ev in snapshot.events:
        if ev.kind == "commit":
            counts[ev.actor] = counts.get(ev.actor, 0) + 1
            total += 1
    if total == 0:
        raise NoCommitsError(snapshot.repo_id)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    out: list[str] = []
    cum = 0
    for author, cnt in ranked:
        out.append(author)
        cum += cnt
        if cum / total >= 0.8:
            break
    return out


def correlate(xs, ys) -> tuple[float, float]:
    """Tie-corrected Spearman rho with its large-sample t p-value."""
    return spearman_with_pvalue(xs, ys)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def build_report(
    model: ForestModel,
    snapshots: list[ProjectSnapshot],
    as_of: datetime | None = None,
    group_size: int = 10,
) -> ReportBundle:
    """Assemble all report tables for a scored corpus.

    ``as_of`` overrides each snapshot's own capture instant when measuring
    days since last commit. Activity series cover the ``group_size`` highest-
    and lowest-scored projects (vote share ordering, ties by repo id).
    """
    if model.scenario is None:
        raise ValueError("model carries no scenario; cannot window activity series")
    scenario: ScenarioConfig = model.scenario
    snapshots = sorted(snapshots, key=lambda s: s.repo_id)
    vectors = [extract_vector(s, scenario) for s in snapshots]
    scores, summary = score_corpus(model, vectors)
    by_repo: dict[str, ProjectSnapshot] = {s.repo_id: s for s in snapshots}
    bundle = ReportBundle()

    # -- lma_distribution ----------------------------------------------------
    bundle.tables["lma_distribution"] = Table(
        header=["repo_id", "p_active", "lma"],
        rows=[[s.repo_id, _fmt(s.p_active), _fmt(s.lma)] for s in scores],
    )
    bundle.summary["n_projects"] = len(scores)
    bundle.summary["n_predicted_active"] = summary.n_active
    bundle.summary["lma_count_max"] = summary.count_max
    if summary.n_active:
        bundle.summary["lma_q1"] = summary.q1
        bundle.summary["lma_q2"] = summary.q2
        bundle.summary["lma_q3"] = summary.q3

    # -- days_since_last_commit ----------------------------------------------
    days_rows = []
    days_values = []
    for snap in snapshots:
        days = days_since_last_commit(snap, as_of or snap.as_of)
        days_rows.append([snap.repo_id, _fmt(days)])
        days_values.append(days)
    bundle.tables["days_since_last_commit"] = Table(
        header=["repo_id", "days"], rows=days_rows
    )
    if days_values:
        q1, q2, q3 = quartiles(days_values)
        bundle.summary["days_since_last_commit_q1"] = q1
        bundle.summary["days_since_last_commit_q2"] = q2
        bundle.summary["days_since_last_commit_q3"] = q3

    # -- activity_series -----------------------------------------------------
    ranked = sorted(scores, key=lambda s: (-s.p_active, s.repo_id))
    top = ranked[:group_size]
    bottom_pool = [s for s in ranked[group_size:]]
    bottom = sorted(bottom_pool, key=lambda s: (s.p_active, s.repo_id))[:group_size]
    bottom = sorted(bottom, key=lambda s: (-s.p_active, s.repo_id))
    window_labels = [w.label for w in windows(scenario, snapshots[0].as_of)] if snapshots else []
    series_rows = []
    for group_name, members in (("high", top), ("low", bottom)):
        for score in members:
            snap = by_repo[score.repo_id]
            anchor = snap.last_commit()
            wins = windows(scenario, anchor)
            per_kind = {
                kind: [ev.timestamp for ev in snap.events if ev.kind == kind]
                for _, kind in ACTIVITY_METRICS
            }
            for metric_name, kind in ACTIVITY_METRICS:
                times = per_kind[kind]
                counts = [sum(1 for t in times if w.contains(t)) for w in wins]
                series_rows.append(
                    [score.repo_id, group_name, metric_name] + [str(c) for c in counts]
                )
    bundle.tables["activity_series"] = Table(
        header=["repo_id", "lma_group", "metric"] + window_labels, rows=series_rows
    )

    # -- lma_scatter + lma_correlations ---------------------------------------
    scatter_rows = []
    variables: dict[str, list[float]] = {
        "stars": [],
        "contributors": [],
        "core_contributors": [],
        "size_loc": [],
    }
    lma_values = []
    for score in scores:
        if score.lma is None:
            continue
        snap = by_repo[score.repo_id]
        contributors = len({ev.actor for ev in snap.events if ev.kind == "commit"})
        core = len(core_contributors(snap))
        scatter_rows.append(
            [
                score.repo_id,
                _fmt(score.lma),
                str(snap.stars),
                str(contributors),
                str(core),
                str(snap.size_loc),
            ]
        )
        lma_values.append(score.lma)
        variables["stars"].append(float(snap.stars))
        variables["contributors"].append(float(contributors))
        variables["core_contributors"].append(float(core))
        variables["size_loc"].append(float(snap.size_loc))
    bundle.tables["lma_scatter"] = Table(
        header=["repo_id", "lma", "stars", "contributors", "core_contributors", "size_loc"],
        rows=scatter_rows,
    )
    corr_rows = []
    for name, values in variables.items():
        try:
            rho, p = correlate(lma_values, values)
            corr_rows.append([name, str(len(values)), _fmt(rho), _fmt(p), "false"])
        except DegenerateInputError:
            corr_rows.append([name, str(len(values)), "", "", "true"])
    bundle.tables["lma_correlations"] = Table(
        header=["variable", "n", "spearman_rho", "p_value", "degenerate"], rows=corr_rows
    )
    return bundle


def write_report(bundle: ReportBundle, out_dir: str | Path) -> list[Path]:
    """Write every table as <name>.csv plus a summary.csv; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in sorted(bundle.tables):
        table = bundle.tables[name]
        path = out_dir / f"{name}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(table.header)
            writer.writerows(table.rows)
        written.append(path)
    summary_path = out_dir / "summary.csv"
    with open(summary_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["name", "value"])
        for key in sorted(bundle.summary):
            writer.writerow([key, _fmt(bundle.summary[key])])
    written.append(summary_path)
    return written


def emit_report(
    model: ForestModel,
    snapshots: list[ProjectSnapshot],
    out_dir: str | Path,
    as_of: datetime | None = None,
    figures: bool = True,
) -> ReportBundle:
    """Build the report, write the CSVs, and (by default) render the figures."""
    bundle = build_report(model, snapshots, as_of=as_of)
    write_report(bundle, out_dir)
    if figures:
        from . import figures as figures_mod

        figures_mod.render_all(bundle, out_dir)
    return bundle
