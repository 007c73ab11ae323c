"""Offline repository snapshots: the event-history data model and its file format.

A snapshot file is newline-delimited JSON: one metadata header record followed
by one event record per line. The README body lives in a sidecar file next to
the snapshot, referenced by the header's ``readme_path`` field, so the snapshot
file itself stays diff-friendly. Serialization is byte-stable: storing the same
snapshot twice produces identical files.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

from .errors import InvariantViolationError, SnapshotParseError

logger = logging.getLogger(__name__)

EVENT_KINDS = (
    "commit",
    "issue_open",
    "issue_close",
    "pr_open",
    "pr_close",
    "pr_merge",
    "fork",
    "release",
    "owner_repo_created",
    "owner_commit",
)

# header keys, in serialization order
HEADER_FIELDS = (
    "repo_id",
    "as_of",
    "archived",
    "stars",
    "size_loc",
    "topics",
    "owner",
    "readme_path",
)

SNAPSHOT_SUFFIX = ".snapshot.jsonl"


def format_ts(ts: datetime) -> str:
    """Serialize a timestamp as ISO-8601 in UTC with an explicit offset suffix."""
    if ts.tzinfo is None:
        raise InvariantViolationError(f"naive timestamp not allowed: {ts!r}")
    return ts.astimezone(timezone.utc).isoformat()


def parse_ts(text: str) -> datetime:
    raw = text.strip()
    if raw.endswith("Z"):
        raw = raw[:-1] + "+00:00"
    ts = datetime.fromisoformat(raw)
    if ts.tzinfo is None:
        raise ValueError(f"timestamp lacks a timezone suffix: {text!r}")
    return ts.astimezone(timezone.utc)


@dataclass(frozen=True)
class Event:
    kind: str
    timestamp: datetime
    actor: str

    def validate(self) -> None:
        if self.kind not in EVENT_KINDS:
            raise InvariantViolationError(f"unknown event kind: {self.kind!r}")
        if self.timestamp.tzinfo is None:
            raise InvariantViolationError("event timestamp must be timezone-aware")
        if self.kind == "commit" and not self.actor:
            raise InvariantViolationError("commit event with empty author identifier")


@dataclass
class ProjectSnapshot:
    """Full timestamped event history plus metadata of one repository."""

    repo_id: str
    as_of: datetime
    archived: bool
    stars: int
    size_loc: int
    topics: list[str]
    owner: str
    readme_text: str
    events: list[Event]
    # "repo_local" when owner-wide history was unavailable at ingest time
    owner_scope: str = "owner_wide"

    def validate(self) -> None:
        if self.stars < 0 or self.size_loc < 0:
            raise InvariantViolationError("stars and size_loc must be non-negative")
        if self.as_of.tzinfo is None:
            raise InvariantViolationError("as_of must be timezone-aware")
        prev = None
        for ev in self.events:
            ev.validate()
            if ev.timestamp > self.as_of:
                raise InvariantViolationError(
                    f"{self.repo_id}: event at {format_ts(ev.timestamp)} is after "
                    f"as_of {format_ts(self.as_of)}"
                )
            if prev is not None and ev.timestamp < prev:
                raise InvariantViolationError(
                    f"{self.repo_id}: events are not sorted by timestamp"
                )
            prev = ev.timestamp

    def events_of_kind(self, kind: str) -> list[Event]:
        return [ev for ev in self.events if ev.kind == kind]

    def commit_times(self) -> list[datetime]:
        return [ev.timestamp for ev in self.events if ev.kind == "commit"]

    def last_commit(self) -> datetime | None:
        last = None
        for ev in self.events:
            if ev.kind == "commit":
                last = ev.timestamp
        return last


def _sorted_events(events: list[Event]) -> list[Event]:
    return sorted(events, key=lambda ev: (ev.timestamp, ev.kind, ev.actor))


def _readme_sidecar(path: Path) -> str:
    name = path.name
    if name.endswith(SNAPSHOT_SUFFIX):
        name = name[: -len(SNAPSHOT_SUFFIX)]
    else:
        name = path.stem
    return name + ".readme.md"


def repo_id_to_filename(repo_id: str) -> str:
    return repo_id.replace("/", "__") + SNAPSHOT_SUFFIX


def store_snapshot(snapshot: ProjectSnapshot, path: str | Path) -> Path:
    """Persist a snapshot (and its README sidecar) at ``path``.

    ``path`` may be a directory, in which case the filename derives from the
    repo id. Returns the snapshot file path.
    """
    snapshot.validate()
    path = Path(path)
    if path.is_dir():
        path = path / repo_id_to_filename(snapshot.repo_id)
    path.parent.mkdir(parents=True, exist_ok=True)

    readme_path = ""
    if snapshot.readme_text:
        readme_path = _readme_sidecar(path)
        (path.parent / readme_path).write_bytes(snapshot.readme_text.encode("utf-8"))

    header = {
        "repo_id": snapshot.repo_id,
        "as_of": format_ts(snapshot.as_of),
        "archived": snapshot.archived,
        "stars": snapshot.stars,
        "size_loc": snapshot.size_loc,
        "topics": list(snapshot.topics),
        "owner": snapshot.owner,
        "readme_path": readme_path,
    }
    if snapshot.owner_scope != "owner_wide":
        header["owner_scope"] = snapshot.owner_scope

    lines = [json.dumps(header, ensure_ascii=False, separators=(",", ":"))]
    for ev in snapshot.events:
        lines.append(
            json.dumps(
                {"kind": ev.kind, "ts": format_ts(ev.timestamp), "actor": ev.actor},
                ensure_ascii=False,
                separators=(",", ":"),
            )
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def load_snapshot(path: str | Path) -> ProjectSnapshot:
    """Load and validate a snapshot file.

    Unsorted events are re-sorted (logged as a warning); any other invariant
    violation raises. Parse failures name the line of the first bad record.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SnapshotParseError(path, 0, f"cannot read file: {exc}") from exc

    lines = text.splitlines()
    if not lines:
        raise SnapshotParseError(path, 0, "empty snapshot file")

    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise SnapshotParseError(path, 1, f"bad header record: {exc}") from exc
    missing = [k for k in HEADER_FIELDS if k not in header]
    if missing:
        raise SnapshotParseError(path, 1, f"header missing fields: {missing}")

    try:
        as_of = parse_ts(header["as_of"])
    except ValueError as exc:
        raise SnapshotParseError(path, 1, f"bad as_of timestamp: {exc}") from exc

    events: list[Event] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            ev = Event(
                kind=rec["kind"], timestamp=parse_ts(rec["ts"]), actor=rec["actor"]
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise SnapshotParseError(
                path,
                lineno,
                f"bad event record after {len(events)} valid events: {exc}",
            ) from exc
        events.append(ev)

    timestamps = [ev.timestamp for ev in events]
    if timestamps != sorted(timestamps):
        logger.warning("%s: events were not sorted; re-sorting on load", path)
        events = _sorted_events(events)

    readme_text = ""
    readme_path = header["readme_path"]
    if readme_path:
        sidecar = path.parent / readme_path
        try:
            readme_text = sidecar.read_bytes().decode("utf-8")
        except OSError as exc:
            raise SnapshotParseError(path, 1, f"cannot read README sidecar: {exc}") from exc

    snapshot = ProjectSnapshot(
        repo_id=header["repo_id"],
        as_of=as_of,
        archived=bool(header["archived"]),
        stars=int(header["stars"]),
        size_loc=int(header["size_loc"]),
        topics=list(header["topics"]),
        owner=header["owner"],
        readme_text=readme_text,
        events=events,
        owner_scope=header.get("owner_scope", "owner_wide"),
    )
    snapshot.validate()
    return snapshot


def load_snapshot_dir(directory: str | Path) -> list[ProjectSnapshot]:
    """Load every snapshot in a directory, sorted by filename."""
    directory = Path(directory)
    paths = sorted(directory.glob("*" + SNAPSHOT_SUFFIX))
    return [load_snapshot(p) for p in paths]


def iter_snapshot_paths(directory: str | Path) -> list[Path]:
    return sorted(Path(directory).glob("*" + SNAPSHOT_SUFFIX))


def with_sorted_events(snapshot: ProjectSnapshot) -> ProjectSnapshot:
    return replace(snapshot, events=_sorted_events(snapshot.events))
