"""README ground-truth scanning: detect self-declared unmaintained status.

Matching is a case-insensitive substring search over normalized text:
markdown markup is stripped (code fences, inline code, link URLs, HTML tags),
curly quotes become ASCII apostrophes, and whitespace runs collapse to single
spaces. Every hit is flagged for manual review; raw matches routinely refer to
deprecated methods or dependencies rather than the project itself, so the
output is a worklist, not a verdict.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import EmptyGroundTruthError, MissingPredictionError

# Published default sentence list. One entry ("no longer supported") appears
# twice in the source table; the duplicate is kept here verbatim and collapses
# at scan time because identical (sentence, offset) hits are deduplicated.
DEFAULT_SENTENCES = (
    "no longer under development",
    "no longer supported or updated",
    "deprecation notice",
    "dead project",
    "deprecated",
    "unmaintained",
    "no longer being actively maintained",
    "not maintained anymore",
    "not under active development",
    "no longer supported",
    "is not supported",
    "is not more supported",
    "no longer supported",
    "no new features should be expected",
    "isn't maintained anymore",
)


@dataclass(frozen=True)
class ScanResult:
    repo_id: str
    matched: tuple[tuple[str, int], ...]  # (sentence, byte offset in normalized text)
    needs_manual_review: bool


_FENCE_RE = re.compile(r"```.*?```", re.DOTALL)
_INLINE_CODE_RE = re.compile(r"`[^`\n]*`")
_IMAGE_RE = re.compile(r"!\[([^\]]*)\]\([^)]*\)")
_LINK_RE = re.compile(r"\[([^\]]*)\]\([^)]*\)")
_HTML_TAG_RE = re.compile(r"<[^>\n]+>")
_WS_RE = re.compile(r"\s+")

_QUOTE_MAP = str.maketrans({"‘": "'", "’": "'", "“": '"', "”": '"'})


def normalize_readme(text: str) -> str:
    """Strip markdown markup and collapse whitespace; offsets reported by
    :func:`scan` index into this normalized form (UTF-8 bytes)."""
    text = text.translate(_QUOTE_MAP)
    text = _FENCE_RE.sub(" ", text)
    text = _INLINE_CODE_RE.sub(" ", text)
    text = _IMAGE_RE.sub(r"\1", text)
    text = _LINK_RE.sub(r"\1", text)
    text = _HTML_TAG_RE.sub(" ", text)
    return _WS_RE.sub(" ", text)


def scan(readme_text: str, sentences=DEFAULT_SENTENCES, repo_id: str = "") -> ScanResult:
    """All sentence-list hits in a README, with byte offsets.

    ``needs_manual_review`` is always true when anything matched: the sentence
    list is deliberately aggressive and needs human confirmation.
    """
    if not sentences:
        raise ValueError("sentence list must be nonempty")
    normalized = normalize_readme(readme_text)
    hits: set[tuple[str, int]] = set()
    for sentence in sentences:
        wanted = _WS_RE.sub(" ", sentence.translate(_QUOTE_MAP)).strip()
        if not wanted:
            continue
        for match in re.finditer(re.escape(wanted), normalized, flags=re.IGNORECASE):
            byte_offset = len(normalized[: match.start()].encode("utf-8"))
            hits.add((wanted, byte_offset))
    matched = tuple(sorted(hits, key=lambda h: (h[1], h[0])))
    return ScanResult(
        repo_id=repo_id, matched=matched, needs_manual_review=bool(matched)
    )


def load_sentences(path) -> tuple[str, ...]:
    """One sentence per line; blank lines and #-comments are skipped."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                out.append(line)
    if not out:
        raise ValueError(f"{path}: no sentences found")
    return tuple(out)


def recall_against_ground_truth(predictions: dict[str, str], ground_truth) -> float:
    """Share of ground-truth unmaintained projects the model also flags."""
    ground_truth = set(ground_truth)
    if not ground_truth:
        raise EmptyGroundTruthError("ground truth is empty; recall undefined")
    missing = [g for g in ground_truth if g not in predictions]
    if missing:
        raise MissingPredictionError(missing)
    hit = sum(1 for g in ground_truth if predictions[g] == "unmaintained")
    return hit / len(ground_truth)
