"""GitHub REST API client: fetches a repository's event history into a
ProjectSnapshot so every later stage can run offline.

Issues and pull requests are decomposed into open/close/merge events at their
respective timestamps, so windowed counting uses one mechanism for everything.
Pagination is fully drained; hitting the rate limit sleeps until the reset
and retries a bounded number of times before failing with the endpoint name.

Owner dimension: projects created by the owner come from the owner-wide repo
listing. GitHub exposes no owner-wide commit history, so owner commits fall
back to repo-local commits authored by the owner and the snapshot records
``owner_scope="repo_local"``.
"""

from __future__ import annotations

import base64
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime

from .errors import (
    AuthFailureError,
    RateLimitExceededError,
    RepoNotFoundError,
    RepoVitalityError,
)
from .snapshot import Event, ProjectSnapshot, parse_ts

logger = logging.getLogger(__name__)

API_ROOT = "https://api.github.com"

# languages counted toward size_loc; aimed at programming languages only,
# markup/style/data languages deliberately absent
DEFAULT_LANGUAGE_ALLOWLIST = frozenset(
    {
        "Python", "C", "C++", "C#", "Java", "JavaScript", "TypeScript", "Go",
        "Rust", "Ruby", "PHP", "Swift", "Kotlin", "Scala", "R", "MATLAB",
        "Perl", "Objective-C", "Shell", "Haskell", "Lua", "Dart", "Elixir",
        "Erlang", "Clojure", "Julia", "Groovy", "F#", "OCaml", "Fortran",
        "Assembly", "Visual Basic", "Zig", "Nim", "Crystal", "D",
    }
)

# crude but explicit: language bytes reported by the API, divided by an
# average line width, stand in for the LOC measure the API cannot provide
BYTES_PER_LINE = 30


class GitHubClient:
    """Thin paginating wrapper over a requests-style session."""

    def __init__(
        self,
        token: str,
        session=None,
        per_page: int = 100,
        max_rate_limit_retries: int = 3,
        sleeper=time.sleep,
    ):
        if not token:
            raise AuthFailureError("no API token provided (set RV_TOKEN)")
        if session is None:
            import requests

            session = requests.Session()
        self._session = session
        self._token = token
        self._per_page = per_page
        self._max_retries = max_rate_limit_retries
        self._sleep = sleeper

    def _headers(self) -> dict[str, str]:
        return {
            "Accept": "application/vnd.github+json",
            "Authorization": f"Bearer {self._token}",
        }

    def get_json(self, path: str, params: dict | None = None):
        url = API_ROOT + path
        retries = 0
        while True:
            resp = self._session.get(url, headers=self._headers(), params=params or {})
            status = resp.status_code
            if status == 200:
                return resp.json()
            if status == 401:
                raise AuthFailureError("token rejected", endpoint=path)
            if status == 404:
                raise RepoNotFoundError(path, path)
            if status in (403, 429) and resp.headers.get("X-RateLimit-Remaining") == "0":
                if retries >= self._max_retries:
                    raise RateLimitExceededError(path, retries)
                reset = float(resp.headers.get("X-RateLimit-Reset", "0"))
                wait = max(0.0, reset - time.time()) + 1.0
                logger.warning("rate limit exhausted on %s; sleeping %.0fs", path, wait)
                self._sleep(wait)
                retries += 1
                continue
            if status == 202:
                # the platform is still computing the result
                self._sleep(2.0)
                retries += 1
                if retries > self._max_retries + 2:
                    raise RateLimitExceededError(path, retries)
                continue
            raise RepoVitalityError(f"unexpected status {status} from {path}")

    def paginate(self, path: str, params: dict | None = None) -> list:
        """Drain every page of a list endpoint."""
        out: list = []
        page = 1
        while True:
            batch = self.get_json(
                path, {**(params or {}), "per_page": self._per_page, "page": page}
            )
            if not batch:
                break
            out.extend(batch)
            if len(batch) < self._per_page:
                break
            page += 1
        return out


def _maybe_event(kind: str, ts_text, actor: str, as_of: datetime) -> Event | None:
    if not ts_text:
        return None
    ts = parse_ts(ts_text)
    if ts > as_of:
        return None
    return Event(kind, ts, actor)


def _commit_author(item: dict) -> str:
    author = item.get("author") or {}
    if author.get("login"):
        return author["login"]
    commit_author = (item.get("commit") or {}).get("author") or {}
    return commit_author.get("email") or commit_author.get("name") or "(unknown)"


def _login(item: dict, key: str = "user") -> str:
    return ((item.get(key) or {}).get("login")) or "(unknown)"


def fetch_snapshot(
    repo_id: str,
    token: str,
    as_of: datetime,
    session=None,
    language_allowlist=DEFAULT_LANGUAGE_ALLOWLIST,
    parallelism: int = 4,
    client: GitHubClient | None = None,
) -> ProjectSnapshot:
    """Fetch one repository's full event history up to ``as_of``.

    Endpoint categories are fetched concurrently (bounded by ``parallelism``);
    the snapshot is assembled and validated only after every page completed.
    """
    if client is None:
        client = GitHubClient(token, session=session)
    try:
        meta = client.get_json(f"/repos/{repo_id}")
    except RepoNotFoundError:
        raise RepoNotFoundError(repo_id, f"/repos/{repo_id}") from None
    owner = (meta.get("owner") or {}).get("login") or repo_id.split("/")[0]

    def fetch_commits():
        items = client.paginate(
            f"/repos/{repo_id}/commits", {"until": as_of.isoformat()}
        )
        events = []
        for item in items:
            ts = ((item.get("commit") or {}).get("author") or {}).get("date")
            ev = _maybe_event("commit", ts, _commit_author(item), as_of)
            if ev:
                events.append(ev)
        return events

    def fetch_issues():
        items = client.paginate(f"/repos/{repo_id}/issues", {"state": "all"})
        events = []
        for item in items:
            if "pull_request" in item:
                continue  # the issues endpoint interleaves pull requests
            actor = _login(item)
            for kind, key in (("issue_open", "created_at"), ("issue_close", "closed_at")):
                ev = _maybe_event(kind, item.get(key), actor, as_of)
                if ev:
                    events.append(ev)
        return events

    def fetch_pulls():
        items = client.paginate(f"/repos/{repo_id}/pulls", {"state": "all"})
        events = []
        for item in items:
            actor = _login(item)
            for kind, key in (
                ("pr_open", "created_at"),
                ("pr_close", "closed_at"),
                ("pr_merge", "merged_at"),
            ):
                ev = _maybe_event(kind, item.get(key), actor, as_of)
                if ev:
                    events.append(ev)
        return events

    def fetch_forks():
        items = client.paginate(f"/repos/{repo_id}/forks", {"sort": "oldest"})
        events = []
        for item in items:
            ev = _maybe_event("fork", item.get("created_at"), _login(item, "owner"), as_of)
            if ev:
                events.append(ev)
        return events

    def fetch_releases():
        items = client.paginate(f"/repos/{repo_id}/releases")
        events = []
        for item in items:
            ts = item.get("published_at") or item.get("created_at")
            ev = _maybe_event("release", ts, _login(item, "author"), as_of)
            if ev:
                events.append(ev)
        return events

    def fetch_owner_repos():
        items = client.paginate(f"/users/{owner}/repos")
        events = []
        for item in items:
            ev = _maybe_event("owner_repo_created", item.get("created_at"), owner, as_of)
            if ev:
                events.append(ev)
        return events

    def fetch_languages():
        try:
            return client.get_json(f"/repos/{repo_id}/languages")
        except RepoNotFoundError:
            return {}

    def fetch_readme():
        try:
            payload = client.get_json(f"/repos/{repo_id}/readme")
        except RepoNotFoundError:
            return ""
        content = payload.get("content", "")
        if payload.get("encoding") == "base64" and content:
            return base64.b64decode(content).decode("utf-8", errors="replace")
        return content

    tasks = {
        "commits": fetch_commits,
        "issues": fetch_issues,
        "pulls": fetch_pulls,
        "forks": fetch_forks,
        "releases": fetch_releases,
        "owner_repos": fetch_owner_repos,
        "languages": fetch_languages,
        "readme": fetch_readme,
    }
    results = {}
    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            futures = {name: pool.submit(fn) for name, fn in tasks.items()}
            for name, fut in futures.items():
                results[name] = fut.result()
    else:
        for name, fn in tasks.items():
            results[name] = fn()

    events = (
        results["commits"]
        + results["issues"]
        + results["pulls"]
        + results["forks"]
        + results["releases"]
        + results["owner_repos"]
    )
    # owner commits: repo-local fallback (no owner-wide listing exists)
    events.extend(
        Event("owner_commit", ev.timestamp, owner)
        for ev in results["commits"]
        if ev.actor == owner
    )
    events.sort(key=lambda ev: (ev.timestamp, ev.kind, ev.actor))

    lang_bytes = sum(
        size for lang, size in results["languages"].items() if lang in language_allowlist
    )
    size_loc = max(1, lang_bytes // BYTES_PER_LINE) if lang_bytes > 0 else 0

    snapshot = ProjectSnapshot(
        repo_id=repo_id,
        as_of=as_of,
        archived=bool(meta.get("archived", False)),
        stars=int(meta.get("stargazers_count", 0)),
        size_loc=size_loc,
        topics=sorted(meta.get("topics", [])),
        owner=owner,
        readme_text=results["readme"],
        events=events,
        owner_scope="repo_local",
    )
    snapshot.validate()
    return snapshot
