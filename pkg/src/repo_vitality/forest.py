"""From-scratch Random Forest: bootstrap bagging, Gini-split trees,
vote-proportion probabilities, and out-of-bag permutation importance.

Determinism contract: every random draw flows from the master seed through
numpy SeedSequence entropy tuples ([seed, tree]) for growth/bootstraps and
([seed, tree, feature]) for importance permutations, so results do not depend
on parallelism degree or iteration order.

Split rule: at each node the best Gini split is chosen among ``mtry`` features
sampled without replacement, with candidate thresholds at midpoints between
consecutive distinct sorted values. Ties go to the smallest feature index and
then the smallest threshold; a split must strictly improve on the parent's
impurity. Class order is (unmaintained, active); leaf ties vote unmaintained.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    EmptyInputError,
    MissingFeatureError,
    NoOobError,
    SingleClassError,
)
from .features import DataPointVector, ScenarioConfig

CLASS_ORDER = ("unmaintained", "active")
_UNMAINTAINED, _ACTIVE = 0, 1

MODEL_FORMAT = "rvf"
MODEL_VERSION = 1


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    mtry: int | None = None  # None -> floor(sqrt(#features)) at training time
    min_leaf: int = 1
    max_depth: int | None = None
    seed: int = 0
    bootstrap: bool = True  # False -> identity sample (testing hook)

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")


@dataclass
class DecisionTree:
    """Binary tree in flat arrays; feature[i] == -1 marks node i as a leaf."""

    feature: np.ndarray  # int32
    threshold: np.ndarray  # float64
    left: np.ndarray  # int32, -1 at leaves
    right: np.ndarray  # int32, -1 at leaves
    counts: np.ndarray  # int64 (n_nodes, 2): training class counts per node

    def used_features(self) -> set[int]:
        return {int(f) for f in self.feature if f >= 0}

    def votes(self, X: np.ndarray) -> np.ndarray:
        """Per-row class vote (0/1); leaf majorities, ties to unmaintained."""
        out = np.zeros(X.shape[0], dtype=np.int8)
        stack = [(0, np.arange(X.shape[0]))]
        while stack:
            node, rows = stack.pop()
            if rows.size == 0:
                continue
            f = self.feature[node]
            if f < 0:
                n0, n1 = self.counts[node]
                out[rows] = _ACTIVE if n1 > n0 else _UNMAINTAINED
                continue
            mask = X[rows, f] <= self.threshold[node]
            stack.append((self.right[node], rows[~mask]))
            stack.append((self.left[node], rows[mask]))
        return out


@dataclass
class ForestModel:
    trees: list[DecisionTree]
    feature_names: list[str]
    oob_indices: list[np.ndarray]  # per tree, sorted training-row indices
    params: ForestParams
    class_order: tuple[str, str] = CLASS_ORDER
    scenario: ScenarioConfig | None = None

    @property
    def n_trees(self) -> int:
        return len(self.trees)


def _tree_rng(seed: int, tree_idx: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, tree_idx]))


def _perm_rng(seed: int, tree_idx: int, feat_idx: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, tree_idx, feat_idx]))


def encode_labels(y) -> np.ndarray:
    out = np.empty(len(y), dtype=np.int8)
    for i, label in enumerate(y):
        if label == "active":
            out[i] = _ACTIVE
        elif label == "unmaintained":
            out[i] = _UNMAINTAINED
        else:
            raise ValueError(f"unknown class label: {label!r}")
    return out


class _TreeBuilder:
    def __init__(self, X, y01, mtry, min_leaf, max_depth, rng):
        self.X = X
        self.y = y01
        self.mtry = mtry
        self.min_leaf = min_leaf
        self.max_depth = max_depth
        self.rng = rng
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.counts: list[tuple[int, int]] = []

    def _new_node(self, idx) -> int:
        n1 = int(self.y[idx].sum())
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.counts.append((idx.size - n1, n1))
        return len(self.feature) - 1

    def _best_split(self, idx):
        """Best (quality, feature, threshold, mask) among mtry sampled features.

        quality = sum_child (count0^2 + count1^2) / n_child, to be maximized;
        equivalent to minimizing weighted Gini but cheaper. Must strictly beat
        the parent's quality for the split to count as improving.
        """
        n = idx.size
        n1 = int(self.y[idx].sum())
        n0 = n - n1
        parent_quality = (n0 * n0 + n1 * n1) / n
        n_feats = self.X.shape[1]
        mtry = min(self.mtry, n_feats)
        candidates = np.sort(self.rng.choice(n_feats, size=mtry, replace=False))
        y_node = self.y[idx]
        best = None  # (quality, feature, threshold)
        for f in candidates:
            x = self.X[idx, f]
            order = np.argsort(x, kind="stable")
            xs = x[order]
            ys = y_node[order]
            cuts = np.nonzero(xs[1:] != xs[:-1])[0]
            if cuts.size == 0:
                continue
            cum1 = np.cumsum(ys)
            left_n = cuts + 1.0
            left1 = cum1[cuts].astype(float)
            left0 = left_n - left1
            right_n = n - left_n
            right1 = n1 - left1
            right0 = right_n - right1
            ok = (left_n >= self.min_leaf) & (right_n >= self.min_leaf)
            if not ok.any():
                continue
            quality = (left0 * left0 + left1 * left1) / left_n + (
                right0 * right0 + right1 * right1
            ) / right_n
            quality = np.where(ok, quality, -np.inf)
            j = int(np.argmax(quality))  # first max -> smallest threshold
            if quality[j] > parent_quality and (best is None or quality[j] > best[0]):
                thr = (xs[cuts[j]] + xs[cuts[j] + 1]) / 2.0
                best = (float(quality[j]), int(f), float(thr))
        return best

    def build(self, root_idx) -> DecisionTree:
        root = self._new_node(root_idx)
        stack = [(root, root_idx, 0)]
        while stack:
            node, idx, depth = stack.pop()
            n0, n1 = self.counts[node]
            if (
                n0 == 0
                or n1 == 0
                or idx.size <= self.min_leaf
                or (self.max_depth is not None and depth >= self.max_depth)
            ):
                continue
            best = self._best_split(idx)
            if best is None:
                continue
            _, f, thr = best
            mask = self.X[idx, f] <= thr
            left_idx, right_idx = idx[mask], idx[~mask]
            self.feature[node] = f
            self.threshold[node] = thr
            left_node = self._new_node(left_idx)
            right_node = self._new_node(right_idx)
            self.left[node] = left_node
            self.right[node] = right_node
            # LIFO: push right first so the left subtree is grown first
            stack.append((right_node, right_idx, depth + 1))
            stack.append((left_node, left_idx, depth + 1))
        return DecisionTree(
            feature=np.asarray(self.feature, dtype=np.int32),
            threshold=np.asarray(self.threshold, dtype=np.float64),
            left=np.asarray(self.left, dtype=np.int32),
            right=np.asarray(self.right, dtype=np.int32),
            counts=np.asarray(self.counts, dtype=np.int64),
        )


def _grow_tree(X, y01, params, mtry, tree_idx):
    rng = _tree_rng(params.seed, tree_idx)
    n = X.shape[0]
    if params.bootstrap:
        boot = rng.integers(0, n, size=n)
        oob = np.setdiff1d(np.arange(n), boot)
    else:
        boot = np.arange(n)
        oob = np.empty(0, dtype=int)
    builder = _TreeBuilder(X[boot], y01[boot], mtry, params.min_leaf, params.max_depth, rng)
    tree = builder.build(np.arange(n))
    return tree, oob


def train(
    X: np.ndarray,
    y,
    params: ForestParams,
    feature_names: list[str] | None = None,
    scenario: ScenarioConfig | None = None,
    n_jobs: int = 1,
) -> ForestModel:
    """Grow ``params.n_trees`` trees on bootstrap samples of (X, y).

    ``y`` holds class labels ("unmaintained"/"active") or an already encoded
    0/1 array. Identical inputs and seed give an identical model at any
    ``n_jobs``; trees are ordered by tree index.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyInputError("training matrix is empty")
    if X.shape[0] != len(y):
        raise EmptyInputError(f"{X.shape[0]} rows but {len(y)} labels")
    if X.shape[0] < 2:
        raise EmptyInputError("need at least 2 training rows")
    y01 = y.astype(np.int8) if isinstance(y, np.ndarray) else encode_labels(y)
    present = np.unique(y01)
    if present.size < 2:
        raise SingleClassError(
            f"training labels contain a single class: {CLASS_ORDER[int(present[0])]}"
        )
    if feature_names is None:
        feature_names = [f"f{i}" for i in range(X.shape[1])]
    if len(feature_names) != X.shape[1]:
        raise ValueError("feature_names length does not match matrix width")
    mtry = params.mtry if params.mtry is not None else max(1, int(math.isqrt(X.shape[1])))
    if not 1 <= mtry <= X.shape[1]:
        raise ValueError(f"mtry must be in [1, {X.shape[1]}], got {mtry}")

    indices = range(params.n_trees)
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            grown = list(pool.map(lambda t: _grow_tree(X, y01, params, mtry, t), indices))
    else:
        grown = [_grow_tree(X, y01, params, mtry, t) for t in indices]

    return ForestModel(
        trees=[tree for tree, _ in grown],
        feature_names=list(feature_names),
        oob_indices=[oob for _, oob in grown],
        params=params,
        scenario=scenario,
    )


def _vote_matrix(model: ForestModel, X: np.ndarray) -> np.ndarray:
    """(n_trees, n_rows) matrix of per-tree class votes."""
    return np.stack([tree.votes(X) for tree in model.trees])


def predict_proba_matrix(model: ForestModel, X: np.ndarray) -> np.ndarray:
    """Active-vote proportion per row; denominator is exactly n_trees."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    votes = _vote_matrix(model, X)
    return votes.sum(axis=0, dtype=np.int64) / model.n_trees


def _as_row(model: ForestModel, x) -> np.ndarray:
    points = x.points if isinstance(x, DataPointVector) else x
    missing = [name for name in model.feature_names if name not in points]
    if missing:
        raise MissingFeatureError(missing)
    return np.asarray([[points[name] for name in model.feature_names]], dtype=np.float64)


def predict_proba(model: ForestModel, x) -> float:
    """p(active) for one data-point vector (mapping or DataPointVector)."""
    return float(predict_proba_matrix(model, _as_row(model, x))[0])


def predict_label(model: ForestModel, x) -> str:
    """"active" iff the active-vote proportion is >= 0.5 (ties classify active)."""
    return "active" if predict_proba(model, x) >= 0.5 else "unmaintained"


@dataclass
class ImportanceTable:
    """Per-feature Mean Decrease Accuracy, in percentage points."""

    rows: list[tuple[str, float]] = field(default_factory=list)

    def sorted_rows(self) -> list[tuple[str, float]]:
        order = {name: i for i, (name, _) in enumerate(self.rows)}
        return sorted(self.rows, key=lambda r: (-r[1], order[r[0]]))

    def top(self, n: int) -> list[tuple[str, float]]:
        return self.sorted_rows()[:n]

    def as_dict(self) -> dict[str, float]:
        return dict(self.rows)


def mda_importance(
    model: ForestModel, X: np.ndarray, y, repeats: int = 10
) -> ImportanceTable:
    """Permutation importance over each tree's out-of-bag rows.

    For tree t and feature f: permute f's values across t's OOB rows and
    record the drop in OOB accuracy; MDA(f) is the mean drop over all
    (tree, repeat) pairs, scaled to percentage points. A feature a tree never
    splits on contributes exactly 0 for that tree. Trees with an empty OOB set
    contribute nothing; it is an error only if every OOB set is empty.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y01 = y.astype(np.int8) if isinstance(y, np.ndarray) else encode_labels(y)
    n_features = X.shape[1]
    diff_sums = np.zeros(n_features)
    n_valid = 0
    for t_idx, tree in enumerate(model.trees):
        oob = model.oob_indices[t_idx]
        if oob.size == 0:
            continue
        n_valid += 1
        Xo = X[oob]
        yo = y01[oob]
        base_acc = float(np.mean(tree.votes(Xo) == yo))
        for f in sorted(tree.used_features()):
            rng = _perm_rng(model.params.seed, t_idx, f)
            Xp = Xo.copy()
            for _ in range(repeats):
                Xp[:, f] = Xo[rng.permutation(oob.size), f]
                acc = float(np.mean(tree.votes(Xp) == yo))
                diff_sums[f] += base_acc - acc
    if n_valid == 0:
        raise NoOobError("every tree has an empty out-of-bag set")
    mda = 100.0 * diff_sums / (n_valid * repeats)
    return ImportanceTable(rows=[(name, float(m)) for name, m in zip(model.feature_names, mda)])


# --- serialization ----------------------------------------------------------

def save_model(model: ForestModel, path: str | Path) -> None:
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "params": {
            "n_trees": model.params.n_trees,
            "mtry": model.params.mtry,
            "min_leaf": model.params.min_leaf,
            "max_depth": model.params.max_depth,
            "seed": model.params.seed,
            "bootstrap": model.params.bootstrap,
        },
        "class_order": list(model.class_order),
        "feature_names": model.feature_names,
        "scenario": (
            {
                "length_months": model.scenario.length_months,
                "interval_months": model.scenario.interval_months,
            }
            if model.scenario is not None
            else None
        ),
        "oob_indices": [oob.tolist() for oob in model.oob_indices],
        "trees": [
            {
                "feature": tree.feature.tolist(),
                "threshold": tree.threshold.tolist(),
                "left": tree.left.tolist(),
                "right": tree.right.tolist(),
                "counts": tree.counts.tolist(),
            }
            for tree in model.trees
        ],
    }
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )


def load_model(path: str | Path) -> ForestModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a {MODEL_FORMAT} model file")
    if payload.get("version") != MODEL_VERSION:
        raise ValueError(f"{path}: unsupported model version {payload.get('version')}")
    params = ForestParams(**payload["params"])
    trees = [
        DecisionTree(
            feature=np.asarray(t["feature"], dtype=np.int32),
            threshold=np.asarray(t["threshold"], dtype=np.float64),
            left=np.asarray(t["left"], dtype=np.int32),
            right=np.asarray(t["right"], dtype=np.int32),
            counts=np.asarray(t["counts"], dtype=np.int64),
        )
        for t in payload["trees"]
    ]
    scenario = None
    if payload["scenario"] is not None:
        scenario = ScenarioConfig(
            payload["scenario"]["length_months"], payload["scenario"]["interval_months"]
        )
    return ForestModel(
        trees=trees,
        feature_names=list(payload["feature_names"]),
        oob_indices=[np.asarray(o, dtype=int) for o in payload["oob_indices"]],
        params=params,
        class_order=tuple(payload["class_order"]),
        scenario=scenario,
    )
