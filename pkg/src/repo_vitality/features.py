"""Windowed activity features.

A scenario (window length n months, interval m months) slices the last n*30
days before a project's final commit into w = n/m contiguous windows of m*30
days each. Months are fixed 30-day blocks so window labels are reproducible.
Every window is half-open [start, end) except the most recent one, which
includes its right endpoint: the anchor commit itself must be counted.

Data points are named "<feature>@T_{a,b}" where months a..b are the window's
position in the collection span, oldest first; e.g. with n=24, m=3 the most
recent window is T_{22,24}.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from datetime import datetime, timedelta

import numpy as np

from .errors import (
    InvalidScenarioError,
    MalformedTableError,
    NoCommitsError,
    UnknownFeatureError,
)
from .snapshot import ProjectSnapshot

DAY_SECONDS = 86400.0

# Feature names in canonical order; this order fixes data-point naming,
# CSV column layout, and pruning tie-breaks.
FEATURES = (
    "Forks",
    "Open issues",
    "Closed issues",
    "Open pull requests",
    "Closed pull requests",
    "Merged pull requests",
    "Commits",
    "Max days without commits",
    "Max contributions by developer",
    "New contributors",
    "Distinct contributors",
    "Projects created by the owner",
    "Number of commits of the owner",
)

_COUNT_FEATURE_KINDS = {
    "Forks": "fork",
    "Open issues": "issue_open",
    "Closed issues": "issue_close",
    "Open pull requests": "pr_open",
    "Closed pull requests": "pr_close",
    "Merged pull requests": "pr_merge",
    "Commits": "commit",
    "Projects created by the owner": "owner_repo_created",
    "Number of commits of the owner": "owner_commit",
}

COMMIT_DERIVED_FEATURES = (
    "Commits",
    "Max days without commits",
    "Max contributions by developer",
)

VALID_LENGTHS = (6, 12, 18, 24)
VALID_INTERVALS = (3, 6, 12)

# scenario id -> (length n, interval m), in months
SCENARIOS = {
    1: (6, 3),
    2: (6, 6),
    3: (12, 3),
    4: (12, 6),
    5: (12, 12),
    6: (18, 3),
    7: (18, 6),
    8: (24, 3),
    9: (24, 6),
    10: (24, 12),
}


@dataclass(frozen=True)
class ScenarioConfig:
    length_months: int
    interval_months: int

    def __post_init__(self):
        n, m = self.length_months, self.interval_months
        if n not in VALID_LENGTHS:
            raise InvalidScenarioError(f"length must be one of {VALID_LENGTHS}, got {n}")
        if m not in VALID_INTERVALS:
            raise InvalidScenarioError(
                f"interval must be one of {VALID_INTERVALS}, got {m}"
            )
        if n % m != 0:
            raise InvalidScenarioError(f"interval {m} does not divide length {n}")

    @property
    def window_count(self) -> int:
        return self.length_months // self.interval_months

    @property
    def point_count(self) -> int:
        return len(FEATURES) * self.window_count

    @classmethod
    def from_id(cls, scenario_id: int) -> "ScenarioConfig":
        if scenario_id not in SCENARIOS:
            raise InvalidScenarioError(f"unknown scenario id: {scenario_id}")
        n, m = SCENARIOS[scenario_id]
        return cls(n, m)

    @classmethod
    def parse(cls, text: str) -> "ScenarioConfig":
        """Accept either a scenario id ("8") or an explicit "n,m" pair ("24,3")."""
        text = text.strip()
        if "," in text:
            parts = text.split(",")
            if len(parts) != 2:
                raise InvalidScenarioError(f"cannot parse scenario: {text!r}")
            try:
                return cls(int(parts[0]), int(parts[1]))
            except ValueError as exc:
                raise InvalidScenarioError(f"cannot parse scenario: {text!r}") from exc
        try:
            return cls.from_id(int(text))
        except ValueError as exc:
            raise InvalidScenarioError(f"cannot parse scenario: {text!r}") from exc


@dataclass(frozen=True)
class Window:
    index: int  # 1-based, oldest first
    start: datetime
    end: datetime
    label: str
    includes_end: bool = False

    def contains(self, ts: datetime) -> bool:
        if self.includes_end and ts == self.end:
            return True
        return self.start <= ts < self.end


def window_label(index: int, interval_months: int) -> str:
    a = (index - 1) * interval_months + 1
    b = index * interval_months
    return f"T_{{{a},{b}}}"


def windows(scenario: ScenarioConfig, anchor: datetime) -> list[Window]:
    """Contiguous windows of m*30 days, the last ending exactly at ``anchor``."""
    m = scenario.interval_months
    w = scenario.window_count
    step = timedelta(days=m * 30)
    out = []
    for i in range(1, w + 1):
        end = anchor - (w - i) * step
        out.append(
            Window(
                index=i,
                start=end - step,
                end=end,
                label=window_label(i, m),
                includes_end=(i == w),
            )
        )
    return out


def point_name(feature: str, window: Window) -> str:
    return f"{feature}@{window.label}"


_POINT_RE = re.compile(r"^(?P<feature>.+)@T_\{(?P<a>\d+),(?P<b>\d+)\}$")


def parse_point_name(name: str) -> tuple[str, int, int] | None:
    """Split "<feature>@T_{a,b}" into (feature, a, b); None if not window-shaped."""
    match = _POINT_RE.match(name)
    if not match:
        return None
    return match.group("feature"), int(match.group("a")), int(match.group("b"))


def infer_scenario(names) -> ScenarioConfig:
    """Recover (n, m) from data-point names; the window labels encode both."""
    spans = set()
    max_month = 0
    any_window = False
    for name in names:
        parsed = parse_point_name(name)
        if parsed is None:
            continue
        any_window = True
        _, a, b = parsed
        spans.add(b - a + 1)
        max_month = max(max_month, b)
    if not any_window:
        raise InvalidScenarioError("no window-labeled data points to infer a scenario")
    if len(spans) != 1:
        raise InvalidScenarioError(f"inconsistent window spans: {sorted(spans)}")
    return ScenarioConfig(max_month, spans.pop())


@dataclass
class DataPointVector:
    repo_id: str
    scenario: ScenarioConfig
    points: dict[str, float]
    short_history: bool = False


class _SnapshotIndex:
    """Per-snapshot numpy view used by the extractors.

    Times are POSIX seconds (float64); commit authors are integer codes. All
    per-kind arrays inherit the snapshot's time ordering.
    """

    def __init__(self, snapshot: ProjectSnapshot):
        self.snapshot = snapshot
        kind_times: dict[str, list[float]] = {}
        commit_authors: list[str] = []
        for ev in snapshot.events:
            kind_times.setdefault(ev.kind, []).append(ev.timestamp.timestamp())
            if ev.kind == "commit":
                commit_authors.append(ev.actor)
        self.kind_times = {
            kind: np.asarray(ts, dtype=float) for kind, ts in kind_times.items()
        }
        self.commit_times = self.kind_times.get("commit", np.empty(0))
        uniq, codes = (
            np.unique(commit_authors, return_inverse=True)
            if commit_authors
            else (np.empty(0, dtype=object), np.empty(0, dtype=int))
        )
        self.author_names = uniq
        self.author_codes = codes
        if commit_authors:
            # first commit per author, over the whole history
            _, first_idx = np.unique(codes, return_index=True)
            self.first_commit_times = np.sort(self.commit_times[first_idx])
        else:
            self.first_commit_times = np.empty(0)

    def count_in(self, kind: str, lo: float, hi: float, closed: bool) -> int:
        times = self.kind_times.get(kind)
        if times is None:
            return 0
        side = "right" if closed else "left"
        return int(
            np.searchsorted(times, hi, side=side) - np.searchsorted(times, lo, side="left")
        )

    def commit_slice(self, lo: float, hi: float, closed: bool) -> slice:
        side = "right" if closed else "left"
        return slice(
            int(np.searchsorted(self.commit_times, lo, side="left")),
            int(np.searchsorted(self.commit_times, hi, side=side)),
        )


def _window_bounds(win: Window) -> tuple[float, float]:
    return win.start.timestamp(), win.end.timestamp()


def _feature_value(index: _SnapshotIndex, feature: str, win: Window) -> float:
    lo, hi = _window_bounds(win)
    closed = win.includes_end
    if feature in _COUNT_FEATURE_KINDS:
        return float(index.count_in(_COUNT_FEATURE_KINDS[feature], lo, hi, closed))
    if feature == "Max days without commits":
        sl = index.commit_slice(lo, hi, closed)
        points = np.concatenate(([lo], index.commit_times[sl], [hi]))
        return float(np.max(np.diff(points)) / DAY_SECONDS)
    if feature == "Max contributions by developer":
        sl = index.commit_slice(lo, hi, closed)
        codes = index.author_codes[sl]
        if codes.size == 0:
            return 0.0
        return float(np.bincount(codes).max())
    if feature == "Distinct contributors":
        sl = index.commit_slice(lo, hi, closed)
        codes = index.author_codes[sl]
        return float(np.unique(codes).size) if codes.size else 0.0
    if feature == "New contributors":
        side = "right" if closed else "left"
        first = index.first_commit_times
        return float(
            np.searchsorted(first, hi, side=side) - np.searchsorted(first, lo, side="left")
        )
    raise UnknownFeatureError(feature)


def extract_feature(snapshot: ProjectSnapshot, feature: str, win: Window) -> float:
    """Value of one Table-1 feature inside one window."""
    if feature not in FEATURES:
        raise UnknownFeatureError(feature)
    return _feature_value(_SnapshotIndex(snapshot), feature, win)


def extract_vector(
    snapshot: ProjectSnapshot, scenario: ScenarioConfig
) -> DataPointVector:
    """All 13 features over all scenario windows, anchored at the last commit.

    Points are ordered feature-major (canonical Table order, then windows
    oldest-first). Projects younger than the collection span get zeros in the
    leading windows and a ``short_history`` flag.
    """
    anchor = snapshot.last_commit()
    if anchor is None:
        raise NoCommitsError(snapshot.repo_id)
    index = _SnapshotIndex(snapshot)
    wins = windows(scenario, anchor)
    points: dict[str, float] = {}
    for feature in FEATURES:
        for win in wins:
            points[point_name(feature, win)] = _feature_value(index, feature, win)
    first_commit = snapshot.commit_times()[0]
    return DataPointVector(
        repo_id=snapshot.repo_id,
        scenario=scenario,
        points=points,
        short_history=first_commit > wins[0].start,
    )


@dataclass
class FeatureTable:
    """Named per-window feature values for many projects (rows)."""

    names: list[str]
    repo_ids: list[str]
    values: np.ndarray  # shape (len(repo_ids), len(names))

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.repo_ids), len(self.names)):
            raise ValueError(
                f"value matrix shape {self.values.shape} does not match "
                f"{len(self.repo_ids)} rows x {len(self.names)} columns"
            )

    @classmethod
    def from_vectors(cls, vectors: list[DataPointVector]) -> "FeatureTable":
        if not vectors:
            raise ValueError("no vectors")
        names = list(vectors[0].points.keys())
        rows = []
        for vec in vectors:
            if list(vec.points.keys()) != names:
                raise ValueError(f"{vec.repo_id}: data-point names differ across vectors")
            rows.append([vec.points[name] for name in names])
        return cls(names=names, repo_ids=[v.repo_id for v in vectors], values=np.asarray(rows))

    def select(self, names: list[str]) -> "FeatureTable":
        pos = {name: i for i, name in enumerate(self.names)}
        missing = [n for n in names if n not in pos]
        if missing:
            raise KeyError(f"columns not in table: {missing}")
        idx = [pos[n] for n in names]
        return FeatureTable(list(names), list(self.repo_ids), self.values[:, idx])

    def row(self, repo_id: str) -> dict[str, float]:
        i = self.repo_ids.index(repo_id)
        return dict(zip(self.names, self.values[i]))

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["repo_id"] + self.names)
            for repo_id, row in zip(self.repo_ids, self.values):
                writer.writerow([repo_id] + [repr(float(v)) for v in row])

    @classmethod
    def read_csv(cls, path) -> "FeatureTable":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if not header or header[0] != "repo_id":
                raise ValueError(f"{path}: first column must be repo_id")
            names = header[1:]
            repo_ids, rows = [], []
            for lineno, rec in enumerate(reader, start=2):
                if len(rec) != len(names) + 1:
                    raise MalformedTableError(
                        f"{path}:{lineno}: expected {len(names) + 1} fields, got {len(rec)}"
                    )
                repo_ids.append(rec[0])
                try:
                    rows.append([float(v) for v in rec[1:]])
                except ValueError as exc:
                    raise MalformedTableError(f"{path}:{lineno}: {exc}") from exc
        values = np.asarray(rows) if rows else np.empty((0, len(names)))
        return cls(names=names, repo_ids=repo_ids, values=values)
