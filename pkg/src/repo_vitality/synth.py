"""Synthetic corpus generator: a reproducible stand-in for a labeled corpus.

Active projects draw their event streams from stationary rates; unmaintained
projects share the same machinery but their rates decay toward a configurable
floor over the months before the capture instant. A zero floor models a dead
project; a small positive floor models the sporadic-commit regime where the
project keeps limping along, which is exactly the case a recency threshold
misses. Everything derives from SeedSequence([seed, project_index]), so a
corpus is reproducible event for event.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterator

import numpy as np

from .dataset import LabeledProject, write_labels_csv
from .snapshot import Event, ProjectSnapshot, store_snapshot

DEFAULT_AS_OF = datetime(2021, 6, 30, tzinfo=timezone.utc)

_BLOCK_DAYS = 30.0

_TOPIC_POOL = ("web", "cli", "library", "parser", "framework", "tools", "data")

_DEPRECATION_TEMPLATE = (
    "# {name}\n\n"
    "**Status: this repository is deprecated and unmaintained.** Development "
    "has stopped and no new features should be expected. Forks are welcome.\n"
)

_ACTIVE_TEMPLATE = (
    "# {name}\n\n"
    "A synthetic project used for pipeline testing. Contributions welcome; "
    "see CONTRIBUTING.md for the workflow.\n"
)


@dataclass(frozen=True)
class DecayParams:
    """Shape of the activity decline of unmaintained projects.

    Rates are multiplied by 1 before ``start_days_before`` (measured back from
    as_of), fall linearly to ``commit_floor`` at ``end_days_before``, and stay
    there. Community-driven streams (issues, forks, pull requests) decay with
    a per-project severity drawn from [community_severity_min, max]: dying
    projects still receive forks and issue reports.
    """

    start_days_before: float = 540.0
    end_days_before: float = 150.0
    commit_floor: float = 0.0
    community_severity_min: float = 0.35
    community_severity_max: float = 1.0


@dataclass(frozen=True)
class SynthParams:
    n_projects: int = 500
    seed: int = 0
    prevalence: float = 0.22  # unmaintained share
    history_days: float = 1020.0
    as_of: datetime = DEFAULT_AS_OF
    commit_rate: float = 0.8  # events/day at full activity
    issue_rate: float = 0.35
    pr_rate: float = 0.25
    fork_rate: float = 0.15
    owner_commit_rate: float = 0.25
    release_rate: float = 0.05
    scale_sigma: float = 0.3  # per-project, per-stream lognormal spread
    jitter_sigma: float = 0.45  # per-30-day-block lognormal spread
    readme_notice_fraction: float = 0.3
    decay: DecayParams = field(default_factory=DecayParams)

    def n_unmaintained(self) -> int:
        return round(self.n_projects * self.prevalence)


def _decay_multiplier(days_before_as_of, decay: DecayParams, severity: float):
    """Rate multiplier at a given age; severity 1 is the full commit decay,
    smaller severities interpolate back toward no decay."""
    t = np.asarray(days_before_as_of, dtype=float)
    span = decay.start_days_before - decay.end_days_before
    frac = np.clip((decay.start_days_before - t) / span, 0.0, 1.0)
    full = 1.0 - (1.0 - decay.commit_floor) * frac
    return 1.0 - severity * (1.0 - full)


def _poisson_stream(
    rng: np.random.Generator,
    params: SynthParams,
    base_rate: float,
    severity: float | None,
) -> np.ndarray:
    """Arrival ages (days before as_of) of one event stream, newest first in
    value but returned sorted ascending by age. ``severity is None`` means an
    always-active project."""
    n_blocks = int(np.ceil(params.history_days / _BLOCK_DAYS))
    scale = rng.lognormal(mean=0.0, sigma=params.scale_sigma)
    jitter = rng.lognormal(mean=0.0, sigma=params.jitter_sigma, size=n_blocks)
    # block k covers ages [k*30, (k+1)*30); k=0 is the newest block
    mids = (np.arange(n_blocks) + 0.5) * _BLOCK_DAYS
    mult = np.ones(n_blocks) if severity is None else _decay_multiplier(mids, params.decay, severity)
    lam = base_rate * scale * jitter * mult * _BLOCK_DAYS
    counts = rng.poisson(lam)
    ages = []
    for k, cnt in enumerate(counts):
        if cnt:
            ages.append(k * _BLOCK_DAYS + rng.random(cnt) * _BLOCK_DAYS)
    if not ages:
        return np.empty(0)
    out = np.concatenate(ages)
    return np.sort(out[out <= params.history_days])


def _age_to_ts(params: SynthParams, age_days: float) -> datetime:
    return params.as_of - timedelta(days=float(age_days))


def generate_project(
    params: SynthParams, index: int
) -> tuple[ProjectSnapshot, LabeledProject]:
    """One synthetic project; index < n_unmaintained() gives the decayed class."""
    rng = np.random.default_rng(np.random.SeedSequence([params.seed, index]))
    unmaintained = index < params.n_unmaintained()
    name = f"synthetic/proj-{index:04d}"
    owner = f"owner-{index % 37:02d}"

    commit_sev = 1.0 if unmaintained else None
    community_sev = (
        float(
            rng.uniform(
                params.decay.community_severity_min, params.decay.community_severity_max
            )
        )
        if unmaintained
        else None
    )

    commit_ages = _poisson_stream(rng, params, params.commit_rate, commit_sev)
    # anchor the first commit at the start of history: curation needs the span
    commit_ages = np.sort(np.append(commit_ages, params.history_days))

    # contributor pool; author 0 is the owner and exists from the start
    n_authors = int(rng.integers(3, 20))
    weights = 1.0 / (np.arange(n_authors) + 1.0) ** 1.5
    weights /= weights.sum()
    arrivals = np.concatenate(
        ([params.history_days], rng.uniform(0.3, 1.0, n_authors - 1) * params.history_days)
    )
    author_idx = rng.choice(n_authors, size=commit_ages.size, p=weights)
    # an author cannot commit before arriving; fall back to the owner
    author_idx[commit_ages > arrivals[author_idx]] = 0
    author_names = [owner] + [f"dev-{index:04d}-{j}" for j in range(1, n_authors)]

    issue_open = _poisson_stream(rng, params, params.issue_rate, community_sev)
    close_mask = rng.random(issue_open.size) < 0.75
    issue_close = issue_open[close_mask] - rng.exponential(20.0, int(close_mask.sum()))
    issue_close = issue_close[issue_close > 0.0]

    pr_open = _poisson_stream(rng, params, params.pr_rate, community_sev)
    pr_close_mask = rng.random(pr_open.size) < 0.85
    pr_close = pr_open[pr_close_mask] - rng.exponential(12.0, int(pr_close_mask.sum()))
    pr_close = pr_close[pr_close > 0.0]
    pr_merge = pr_close[rng.random(pr_close.size) < 0.7]

    forks = _poisson_stream(rng, params, params.fork_rate, community_sev)
    owner_commits = _poisson_stream(rng, params, params.owner_commit_rate, community_sev)
    owner_repos = rng.uniform(0.0, params.history_days, int(rng.poisson(2.0)))

    releases = _poisson_stream(rng, params, params.release_rate, commit_sev)
    if unmaintained:
        # no release inside the labeling window, with margin
        releases = releases[releases > 45.0]
    else:
        releases = np.sort(np.append(releases, rng.uniform(5.0, 25.0)))

    events: list[Event] = []
    for age, a_idx in zip(commit_ages, author_idx):
        events.append(Event("commit", _age_to_ts(params, age), author_names[a_idx]))
    for kind, ages in (
        ("issue_open", issue_open),
        ("issue_close", issue_close),
        ("pr_open", pr_open),
        ("pr_close", pr_close),
        ("pr_merge", pr_merge),
        ("fork", forks),
    ):
        for age in ages:
            events.append(Event(kind, _age_to_ts(params, age), f"user-{int(age * 7919) % 9973:04d}"))
    for age in owner_commits:
        events.append(Event("owner_commit", _age_to_ts(params, age), owner))
    for age in owner_repos:
        events.append(Event("owner_repo_created", _age_to_ts(params, age), owner))
    for age in releases:
        events.append(Event("release", _age_to_ts(params, age), owner))
    events.sort(key=lambda ev: (ev.timestamp, ev.kind, ev.actor))

    if unmaintained and rng.random() < params.readme_notice_fraction:
        readme = _DEPRECATION_TEMPLATE.format(name=name)
    else:
        readme = _ACTIVE_TEMPLATE.format(name=name)

    snapshot = ProjectSnapshot(
        repo_id=name,
        as_of=params.as_of,
        archived=unmaintained,
        stars=int(rng.lognormal(np.log(2000.0), 1.0)) + 1,
        size_loc=int(rng.lognormal(np.log(20000.0), 1.0)) + 1,
        topics=sorted(rng.choice(_TOPIC_POOL, size=int(rng.integers(0, 4)), replace=False)),
        owner=owner,
        readme_text=readme,
        events=events,
    )
    label = (
        LabeledProject(name, "unmaintained", "archived")
        if unmaintained
        else LabeledProject(name, "active", "recent_release")
    )
    return snapshot, label


def generate_corpus(params: SynthParams) -> Iterator[tuple[ProjectSnapshot, LabeledProject]]:
    """Yield (snapshot, label) pairs one at a time; order is by project index."""
    if params.n_projects < 10:
        raise ValueError("need at least 10 projects for a meaningful corpus")
    for index in range(params.n_projects):
        yield generate_project(params, index)


def write_corpus(params: SynthParams, out_dir: str | Path) -> tuple[int, Path]:
    """Materialize the corpus: one snapshot file per project plus labels.csv."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    labels = []
    count = 0
    for snapshot, label in generate_corpus(params):
        store_snapshot(snapshot, out_dir)
        labels.append(label)
        count += 1
    labels_path = out_dir / "labels.csv"
    write_labels_csv(labels, labels_path)
    return count, labels_path
