"""Correlation-based data-point pruning.

Data points are clustered by agglomerative complete linkage on the distance
1 - |rho| (Spearman); the dendrogram is cut at 1 - threshold and each cluster
keeps exactly one representative, the member earliest in canonical order.
Complete linkage makes the pruning guarantee provable: every removed point has
|rho| >= threshold with its cluster's representative.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import TooFewRowsError
from .features import FeatureTable
from .stats import average_ranks

DEFAULT_THRESHOLD = 0.7


@dataclass
class Cluster:
    members: list[str]
    representative: str


@dataclass
class CorrelationReport:
    threshold: float
    clusters: list[Cluster]
    kept: list[str]
    removed: list[str]
    constant_points: list[str]

    def to_json(self) -> str:
        payload = {
            "threshold": self.threshold,
            "clusters": [
                {"members": c.members, "representative": c.representative}
                for c in self.clusters
            ],
            "kept": self.kept,
            "removed": self.removed,
            "constant_points": self.constant_points,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def constant_columns(table: FeatureTable) -> list[str]:
    values = table.values
    mask = np.all(values == values[0:1, :], axis=0) if len(table.repo_ids) else []
    return [name for name, flag in zip(table.names, mask) if flag]


def correlation_matrix(table: FeatureTable) -> np.ndarray:
    """Symmetric Spearman correlation matrix over the table's columns.

    Constant columns correlate 0 with everything else (diagonal stays 1);
    use :func:`constant_columns` to list them.
    """
    n_rows, n_cols = table.values.shape
    if n_rows < 2:
        raise TooFewRowsError(f"need at least 2 rows, got {n_rows}")
    ranks = np.empty_like(table.values)
    for j in range(n_cols):
        ranks[:, j] = average_ranks(table.values[:, j])
    centered = ranks - ranks.mean(axis=0, keepdims=True)
    cov = centered.T @ centered
    diag = np.diag(cov).copy()
    constant = diag <= 0.0
    denom = np.sqrt(np.outer(np.where(constant, 1.0, diag), np.where(constant, 1.0, diag)))
    matrix = cov / denom
    matrix[constant, :] = 0.0
    matrix[:, constant] = 0.0
    np.fill_diagonal(matrix, 1.0)
    return np.clip(matrix, -1.0, 1.0)


def _complete_linkage_clusters(dist: np.ndarray, cut: float) -> list[list[int]]:
    """Flat clusters from agglomerative complete linkage, merging while the
    closest pair is within ``cut`` (inclusive). Ties merge the pair whose
    smallest member indices come first, keeping the result deterministic.

    A cluster is keyed by its smallest member, so scanning the active ids in
    ascending order realizes that tie-break via row-major argmin.
    """
    n = dist.shape[0]
    clusters: dict[int, list[int]] = {i: [i] for i in range(n)}
    d = dist.copy()
    np.fill_diagonal(d, np.inf)
    active = sorted(clusters)
    while len(active) > 1:
        sub = d[np.ix_(active, active)]
        i, j = divmod(int(np.argmin(sub)), len(active))
        if sub[i, j] > cut:
            break
        a, b = sorted((active[i], active[j]))
        # complete linkage: distance to the merged cluster is the pairwise max
        for c in active:
            if c not in (a, b):
                d[a, c] = d[c, a] = max(d[a, c], d[b, c])
        d[b, :] = d[:, b] = np.inf
        clusters[a] = sorted(clusters[a] + clusters[b])
        del clusters[b]
        active.remove(b)
    return [clusters[a] for a in sorted(clusters)]


def cluster_and_select(
    matrix: np.ndarray, names: list[str], threshold: float = DEFAULT_THRESHOLD,
    constant_points: list[str] | None = None,
) -> CorrelationReport:
    """Cut the complete-linkage hierarchy at 1-threshold and keep one
    representative per cluster (the canonical-order-first member).

    ``names`` must be in canonical order: the representative tie-break and the
    ordering of ``kept`` both follow the input order.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape != (len(names), len(names)):
        raise ValueError("matrix shape does not match names")
    dist = 1.0 - np.abs(matrix)
    member_sets = _complete_linkage_clusters(dist, cut=1.0 - threshold)
    # order clusters by their representative's canonical position
    member_sets.sort(key=lambda members: members[0])
    clusters = [
        Cluster(members=[names[i] for i in members], representative=names[members[0]])
        for members in member_sets
    ]
    kept = [c.representative for c in clusters]
    kept_set = set(kept)
    removed = [name for name in names if name not in kept_set]
    return CorrelationReport(
        threshold=threshold,
        clusters=clusters,
        kept=kept,
        removed=removed,
        constant_points=list(constant_points or []),
    )


def prune_table(
    table: FeatureTable, threshold: float = DEFAULT_THRESHOLD
) -> tuple[FeatureTable, CorrelationReport]:
    """Convenience wrapper: correlation matrix, clustering, column selection."""
    matrix = correlation_matrix(table)
    report = cluster_and_select(
        matrix, table.names, threshold, constant_points=constant_columns(table)
    )
    return table.select(report.kept), report
