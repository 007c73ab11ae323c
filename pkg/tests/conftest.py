from __future__ import annotations

from datetime import datetime, timedelta, timezone

import pytest

from repo_vitality.snapshot import Event, ProjectSnapshot

BASE = datetime(2021, 6, 30, tzinfo=timezone.utc)


def days_before(days: float) -> datetime:
    return BASE - timedelta(days=days)


def ev(kind: str, days: float, actor: str = "alice") -> Event:
    """Event ``days`` before the shared as_of instant."""
    return Event(kind, days_before(days), actor)


def make_snapshot(
    repo_id: str = "octocat/hello",
    events: list[Event] | None = None,
    as_of: datetime = BASE,
    archived: bool = False,
    stars: int = 10,
    size_loc: int = 1000,
    topics: list[str] | None = None,
    owner: str = "octocat",
    readme_text: str = "",
) -> ProjectSnapshot:
    events = sorted(events or [], key=lambda e: (e.timestamp, e.kind, e.actor))
    return ProjectSnapshot(
        repo_id=repo_id,
        as_of=as_of,
        archived=archived,
        stars=stars,
        size_loc=size_loc,
        topics=topics or [],
        owner=owner,
        readme_text=readme_text,
        events=events,
    )


@pytest.fixture
def tmp_corpus(tmp_path):
    """Small deterministic synthetic corpus on disk."""
    from repo_vitality.synth import SynthParams, write_corpus

    corpus_dir = tmp_path / "corpus"
    params = SynthParams(n_projects=30, seed=5)
    write_corpus(params, corpus_dir)
    return corpus_dir
