"""Error taxonomy shared across the pipeline.

Every domain failure raised by this package derives from RepoVitalityError so
the CLI can map them to exit code 1 while usage errors stay on exit code 2.
"""

from __future__ import annotations


class RepoVitalityError(Exception):
    """Base class for all domain errors raised by repo_vitality."""


# --- ingest ---------------------------------------------------------------

class RepoNotFoundError(RepoVitalityError):
    def __init__(self, repo_id: str, endpoint: str):
        super().__init__(f"repository not found: {repo_id} (endpoint {endpoint})")
        self.repo_id = repo_id
        self.endpoint = endpoint


class AuthFailureError(RepoVitalityError):
    def __init__(self, detail: str, endpoint: str = ""):
        msg = f"authentication failure: {detail}"
        if endpoint:
            msg += f" (endpoint {endpoint})"
        super().__init__(msg)
        self.endpoint = endpoint


class RateLimitExceededError(RepoVitalityError):
    def __init__(self, endpoint: str, retries: int):
        super().__init__(
            f"rate limit still exhausted after {retries} retries (endpoint {endpoint})"
        )
        self.endpoint = endpoint
        self.retries = retries


class SnapshotParseError(RepoVitalityError):
    """Malformed snapshot file; carries the position of the last valid record."""

    def __init__(self, path, line: int, detail: str):
        super().__init__(f"{path}:{line}: {detail}")
        self.path = path
        self.line = line


class InvariantViolationError(RepoVitalityError):
    """Snapshot content violates a structural invariant (e.g. event after as_of)."""


# --- dataset ---------------------------------------------------------------

class LabelConflictError(RepoVitalityError):
    def __init__(self, repo_id: str, detail: str):
        super().__init__(f"conflicting label evidence for {repo_id}: {detail}")
        self.repo_id = repo_id


# --- features --------------------------------------------------------------

class InvalidScenarioError(RepoVitalityError):
    pass


class UnknownFeatureError(RepoVitalityError):
    def __init__(self, name: str):
        super().__init__(f"unknown feature: {name!r}")
        self.name = name


class NoCommitsError(RepoVitalityError):
    def __init__(self, repo_id: str):
        super().__init__(f"{repo_id} has no commit events; window anchor undefined")
        self.repo_id = repo_id


class MalformedTableError(RepoVitalityError):
    pass


# --- prune -----------------------------------------------------------------

class TooFewRowsError(RepoVitalityError):
    pass


# --- forest ----------------------------------------------------------------

class EmptyInputError(RepoVitalityError):
    pass


class SingleClassError(RepoVitalityError):
    pass


class MissingFeatureError(RepoVitalityError):
    def __init__(self, names):
        names = list(names)
        super().__init__(f"input vector is missing model features: {names}")
        self.names = names


class NoOobError(RepoVitalityError):
    pass


# --- eval ------------------------------------------------------------------

class ClassTooSmallError(RepoVitalityError):
    def __init__(self, label: str, count: int, k: int):
        super().__init__(f"class {label!r} has {count} members, fewer than k={k}")
        self.label = label


class InconsistentInputsError(RepoVitalityError):
    pass


# --- readme_scan / report ---------------------------------------------------

class MissingPredictionError(RepoVitalityError):
    def __init__(self, repo_ids):
        repo_ids = sorted(repo_ids)
        super().__init__(f"no prediction for ground-truth projects: {repo_ids}")
        self.repo_ids = repo_ids


class EmptyGroundTruthError(RepoVitalityError):
    pass


class LengthMismatchError(RepoVitalityError):
    pass


class DegenerateInputError(RepoVitalityError):
    pass
