"""Corpus curation and labeling.

Curation drops projects in a fixed filter order: (a) commit history shorter
than two years, (b) no lines of code in programming languages, (c) non-software
topics. Labels: a release inside the last 30 days marks a project active;
archived or explicitly declared projects are unmaintained; everything else is
unlabeled and forms the prediction pool rather than the training set.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import timedelta

from .errors import LabelConflictError
from .snapshot import ProjectSnapshot

REASON_SHORT_HISTORY = "history_shorter_than_min"
REASON_NO_LOC = "loc_below_min"
REASON_EXCLUDED_TOPIC = "excluded_topic"


@dataclass(frozen=True)
class CurationRules:
    min_history_days: int = 730
    min_loc: int = 1
    excluded_topics: tuple[str, ...] = ("books", "awesome-lists")
    active_release_window_days: int = 30

    def __post_init__(self):
        for name in ("min_history_days", "min_loc", "active_release_window_days"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class Rejection:
    repo_id: str
    reason: str
    detail: str = ""


@dataclass(frozen=True)
class LabeledProject:
    snapshot_ref: str  # repo_id
    label: str  # "active" | "unmaintained"
    label_source: str  # "recent_release" | "archived" | "declared_list"

    def __post_init__(self):
        if (self.label == "active") != (self.label_source == "recent_release"):
            raise ValueError("label=active iff label_source=recent_release")


def _history_span_days(snapshot: ProjectSnapshot) -> float:
    commits = snapshot.commit_times()
    if len(commits) < 2:
        return 0.0
    return (commits[-1] - commits[0]).total_seconds() / 86400.0


def curate(
    pool: list[ProjectSnapshot], rules: CurationRules
) -> tuple[list[ProjectSnapshot], list[Rejection]]:
    """Apply the three discard filters in order; a project is rejected by the
    first filter it trips. ``kept`` preserves input order."""
    kept: list[ProjectSnapshot] = []
    rejected: list[Rejection] = []
    excluded = set(rules.excluded_topics)
    for snap in pool:
        span = _history_span_days(snap)
        if span < rules.min_history_days:
            rejected.append(
                Rejection(
                    snap.repo_id,
                    REASON_SHORT_HISTORY,
                    f"{span:.1f} days < {rules.min_history_days}",
                )
            )
            continue
        if snap.size_loc < rules.min_loc:
            rejected.append(
                Rejection(snap.repo_id, REASON_NO_LOC, f"{snap.size_loc} < {rules.min_loc}")
            )
            continue
        bad_topics = sorted(set(snap.topics) & excluded)
        if bad_topics:
            rejected.append(
                Rejection(snap.repo_id, REASON_EXCLUDED_TOPIC, ",".join(bad_topics))
            )
            continue
        kept.append(snap)
    return kept, rejected


def label(
    snapshot: ProjectSnapshot,
    rules: CurationRules,
    declared_unmaintained: set[str] = frozenset(),
) -> LabeledProject | None:
    """Label one curated snapshot, or None when no labeling rule applies.

    Conflicting evidence (a recent release on an archived/declared project)
    raises rather than silently picking a side.
    """
    window_start = snapshot.as_of - timedelta(days=rules.active_release_window_days)
    has_recent_release = any(
        ev.kind == "release" and ev.timestamp >= window_start for ev in snapshot.events
    )
    unmaintained_source = None
    if snapshot.archived:
        unmaintained_source = "archived"
    elif snapshot.repo_id in declared_unmaintained:
        unmaintained_source = "declared_list"

    if has_recent_release and unmaintained_source is not None:
        raise LabelConflictError(
            snapshot.repo_id,
            f"release within {rules.active_release_window_days} days of as_of "
            f"but also {unmaintained_source}",
        )
    if has_recent_release:
        return LabeledProject(snapshot.repo_id, "active", "recent_release")
    if unmaintained_source is not None:
        return LabeledProject(snapshot.repo_id, "unmaintained", unmaintained_source)
    return None


def write_labels_csv(labels: list[LabeledProject], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["repo_id", "label", "label_source"])
        for item in labels:
            writer.writerow([item.snapshot_ref, item.label, item.label_source])


def read_labels_csv(path) -> list[LabeledProject]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            out.append(
                LabeledProject(rec["repo_id"], rec["label"], rec["label_source"])
            )
    return out


def read_declared_list(path) -> set[str]:
    """Repo ids of projects declared unmaintained, one per line."""
    out = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                out.add(line)
    return out
