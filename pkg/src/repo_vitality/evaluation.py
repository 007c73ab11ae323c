"""Model evaluation: stratified k-fold CV over repeated rounds, the six
metrics (accuracy, precision, recall, F-measure, Kappa, AUC), and the two
trivial baselines (always-unmaintained, random).

The positive class is ``unmaintained`` throughout. Per round, fold confusions
and score lists are pooled into one MetricSet (micro-average); per-fold
averaging is available behind ``aggregate="per_fold"``. Round means use
compensated summation so aggregation order cannot perturb results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ClassTooSmallError, InconsistentInputsError
from .forest import ForestParams, encode_labels, predict_proba_matrix, train
from .stats import average_ranks


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with unmaintained as the positive class."""

    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise InconsistentInputsError("negative confusion count")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn
        )


@dataclass(frozen=True)
class MetricSet:
    accuracy: float
    precision: float
    recall: float
    f_measure: float
    kappa: float
    auc: float
    # names of metrics whose 0/0 (or p_e=1) convention fired
    degenerate: frozenset[str] = frozenset()

    FIELDS = ("accuracy", "precision", "recall", "f_measure", "kappa", "auc")

    def as_tuple(self) -> tuple[float, ...]:
        return (self.accuracy, self.precision, self.recall, self.f_measure, self.kappa, self.auc)


def _seed_from(*entropy: int) -> int:
    return int(np.random.SeedSequence(list(entropy)).generate_state(1, np.uint64)[0])


def stratified_kfold(labels, k: int = 5, seed: int = 0) -> list[np.ndarray]:
    """k disjoint index folds with per-class counts differing by at most 1.

    Classes are shuffled independently with the seeded generator and dealt
    round-robin; the folds partition every index.
    """
    labels = list(labels)
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    folds: list[list[int]] = [[] for _ in range(k)]
    for cls in sorted(set(labels)):
        idx = np.asarray([i for i, lab in enumerate(labels) if lab == cls])
        if idx.size < k:
            raise ClassTooSmallError(str(cls), int(idx.size), k)
        idx = idx[rng.permutation(idx.size)]
        for j, i in enumerate(idx):
            folds[j % k].append(int(i))
    return [np.asarray(sorted(f), dtype=int) for f in folds]


def auc_score(scores, positives) -> tuple[float, bool]:
    """Mann-Whitney AUC with tie correction (ties contribute 1/2).

    ``scores`` are p(unmaintained); ``positives`` is a boolean mask of truly
    unmaintained items. Returns (auc, degenerate); degenerate when either
    class is absent (value 0.0 by the 0/0 convention).
    """
    scores = np.asarray(scores, dtype=float)
    positives = np.asarray(positives, dtype=bool)
    n_pos = int(positives.sum())
    n_neg = int(positives.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        return 0.0, True
    ranks = average_ranks(scores)
    rank_sum = float(ranks[positives].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg), False


def compute_metrics(cm: ConfusionMatrix, scores: list[tuple[float, str]]) -> MetricSet:
    """Six metrics from a confusion matrix plus (p_unmaintained, true label) scores.

    0/0 ratios evaluate to 0 and are flagged in ``degenerate``; the same
    convention covers kappa when expected agreement is 1.
    """
    if cm.total != len(scores):
        raise InconsistentInputsError(
            f"confusion matrix covers {cm.total} instances but {len(scores)} scores given"
        )
    degenerate = set()

    def ratio(num: int, den: int, name: str) -> float:
        if den == 0:
            degenerate.add(name)
            return 0.0
        return num / den

    total = cm.total
    accuracy = ratio(cm.tp + cm.tn, total, "accuracy")
    precision = ratio(cm.tp, cm.tp + cm.fp, "precision")
    recall = ratio(cm.tp, cm.tp + cm.fn, "recall")
    if precision + recall == 0.0:
        degenerate.add("f_measure")
        f_measure = 0.0
    else:
        f_measure = 2.0 * precision * recall / (precision + recall)

    if total == 0:
        degenerate.add("kappa")
        kappa = 0.0
    else:
        p_o = (cm.tp + cm.tn) / total
        p_e = (
            (cm.tp + cm.fp) * (cm.tp + cm.fn) + (cm.fn + cm.tn) * (cm.fp + cm.tn)
        ) / (total * total)
        if p_e == 1.0:
            degenerate.add("kappa")
            kappa = 0.0
        else:
            kappa = (p_o - p_e) / (1.0 - p_e)

    auc, auc_degenerate = auc_score(
        [s for s, _ in scores], [lab == "unmaintained" for _, lab in scores]
    )
    if auc_degenerate:
        degenerate.add("auc")

    return MetricSet(
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f_measure=f_measure,
        kappa=kappa,
        auc=auc,
        degenerate=frozenset(degenerate),
    )


def confusion_from_predictions(predicted, actual) -> ConfusionMatrix:
    tp = fp = fn = tn = 0
    for pred, act in zip(predicted, actual):
        if act == "unmaintained":
            if pred == "unmaintained":
                tp += 1
            else:
                fn += 1
        else:
            if pred == "unmaintained":
                fp += 1
            else:
                tn += 1
    return ConfusionMatrix(tp, fp, fn, tn)


def baseline_all_unmaintained(y_test) -> MetricSet:
    """Baseline #1: every project predicted unmaintained (score 1.0 for all)."""
    y_test = list(y_test)
    if not y_test:
        raise InconsistentInputsError("empty test set")
    cm = confusion_from_predictions(["unmaintained"] * len(y_test), y_test)
    return compute_metrics(cm, [(1.0, lab) for lab in y_test])


def baseline_random(y_test, seed: int = 0) -> MetricSet:
    """Baseline #2: uniform random scores, each class predicted with prob 1/2."""
    y_test = list(y_test)
    if not y_test:
        raise InconsistentInputsError("empty test set")
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    scores = rng.random(len(y_test))
    predicted = ["unmaintained" if s >= 0.5 else "active" for s in scores]
    cm = confusion_from_predictions(predicted, y_test)
    return compute_metrics(cm, list(zip(scores.tolist(), y_test)))


def _mean_and_std(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def _aggregate_metric_sets(sets: list[MetricSet]) -> tuple[MetricSet, MetricSet]:
    means, stds = {}, {}
    for name in MetricSet.FIELDS:
        mean, std = _mean_and_std([getattr(s, name) for s in sets])
        means[name] = mean
        stds[name] = std
    flags = frozenset().union(*(s.degenerate for s in sets))
    return MetricSet(**means, degenerate=flags), MetricSet(**stds)


@dataclass
class RoundResult:
    model: MetricSet
    baseline1: MetricSet
    baseline2: MetricSet


@dataclass
class ExperimentResult:
    mean: RoundResult
    std: RoundResult
    rounds: list[RoundResult] = field(default_factory=list)


def run_experiment(
    X: np.ndarray,
    y,
    params: ForestParams,
    k: int = 5,
    rounds: int = 100,
    feature_names: list[str] | None = None,
    aggregate: str = "pooled",
    n_jobs: int = 1,
) -> ExperimentResult:
    """Repeated stratified k-fold cross-validation with baselines.

    Each round gets a fresh seeded fold split; the model trains on k-1 folds
    and is scored on the held-out fold. Per-round fold results are pooled
    (default) or averaged per fold (``aggregate="per_fold"``). The result
    carries per-round MetricSets plus their mean and standard deviation.
    """
    if aggregate not in ("pooled", "per_fold"):
        raise ValueError(f"unknown aggregate mode: {aggregate!r}")
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = list(y)
    y01 = encode_labels(y)
    round_results: list[RoundResult] = []
    for r in range(rounds):
        folds = stratified_kfold(y, k=k, seed=_seed_from(params.seed, r))
        pooled_cm = ConfusionMatrix(0, 0, 0, 0)
        pooled_scores: list[tuple[float, str]] = []
        fold_sets: list[MetricSet] = []
        for fold_idx, test_idx in enumerate(folds):
            train_mask = np.ones(len(y), dtype=bool)
            train_mask[test_idx] = False
            fold_params = ForestParams(
                n_trees=params.n_trees,
                mtry=params.mtry,
                min_leaf=params.min_leaf,
                max_depth=params.max_depth,
                seed=_seed_from(params.seed, r, fold_idx),
                bootstrap=params.bootstrap,
            )
            model = train(
                X[train_mask],
                y01[train_mask],
                fold_params,
                feature_names=feature_names,
                n_jobs=n_jobs,
            )
            p_active = predict_proba_matrix(model, X[test_idx])
            predicted = ["active" if p >= 0.5 else "unmaintained" for p in p_active]
            actual = [y[i] for i in test_idx]
            cm = confusion_from_predictions(predicted, actual)
            scores = list(zip((1.0 - p_active).tolist(), actual))
            if aggregate == "pooled":
                pooled_cm = pooled_cm + cm
                pooled_scores.extend(scores)
            else:
                fold_sets.append(compute_metrics(cm, scores))
        if aggregate == "pooled":
            model_metrics = compute_metrics(pooled_cm, pooled_scores)
            test_labels = [lab for _, lab in pooled_scores]
        else:
            model_metrics, _ = _aggregate_metric_sets(fold_sets)
            test_labels = y
        round_results.append(
            RoundResult(
                model=model_metrics,
                baseline1=baseline_all_unmaintained(test_labels),
                baseline2=baseline_random(test_labels, seed=_seed_from(params.seed, r, k)),
            )
        )
    mean = RoundResult(
        model=_aggregate_metric_sets([r.model for r in round_results])[0],
        baseline1=_aggregate_metric_sets([r.baseline1 for r in round_results])[0],
        baseline2=_aggregate_metric_sets([r.baseline2 for r in round_results])[0],
    )
    std = RoundResult(
        model=_aggregate_metric_sets([r.model for r in round_results])[1],
        baseline1=_aggregate_metric_sets([r.baseline1 for r in round_results])[1],
        baseline2=_aggregate_metric_sets([r.baseline2 for r in round_results])[1],
    )
    return ExperimentResult(mean=mean, std=std, rounds=round_results)
