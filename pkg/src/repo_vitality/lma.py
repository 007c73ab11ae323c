"""Level of Maintenance Activity: maps the forest's active-vote proportion
p in [0.5, 1.0] onto a 0..100 scale via 2 * (p - 0.5) * 100.

The score is defined only for projects predicted under maintenance (p >= 0.5);
below that the project is classified unmaintained and the score is absent.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import RepoVitalityError
from .forest import ForestModel, predict_proba
from .stats import quartiles


@dataclass(frozen=True)
class LmaScore:
    repo_id: str
    p_active: float
    lma: float | None  # present iff p_active >= 0.5


@dataclass(frozen=True)
class LmaSummary:
    n_scored: int
    n_active: int
    q1: float | None
    q2: float | None
    q3: float | None
    count_max: int  # projects at LMA == 100


def lma(p_active: float) -> float | None:
    """LMA value for one vote proportion; None when the project is classified
    unmaintained (p < 0.5)."""
    if not 0.0 <= p_active <= 1.0:
        raise RepoVitalityError(f"vote proportion out of range: {p_active}")
    if p_active < 0.5:
        return None
    return 2.0 * (p_active - 0.5) * 100.0


def score_snapshot_vector(model: ForestModel, vector) -> LmaScore:
    p = predict_proba(model, vector)
    return LmaScore(repo_id=vector.repo_id, p_active=p, lma=lma(p))


def score_corpus(model: ForestModel, vectors) -> tuple[list[LmaScore], LmaSummary]:
    """Score every project; the summary covers only those predicted active.

    Quartiles use linear interpolation; an empty active set yields an empty
    summary, not an error.
    """
    scores = [score_snapshot_vector(model, vec) for vec in vectors]
    values = [s.lma for s in scores if s.lma is not None]
    if values:
        q1, q2, q3 = quartiles(values)
        summary = LmaSummary(
            n_scored=len(scores),
            n_active=len(values),
            q1=q1,
            q2=q2,
            q3=q3,
            count_max=sum(1 for v in values if v == 100.0),
        )
    else:
        summary = LmaSummary(
            n_scored=len(scores), n_active=0, q1=None, q2=None, q3=None, count_max=0
        )
    return scores, summary
