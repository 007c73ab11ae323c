from __future__ import annotations

import numpy as np
import pytest

from repo_vitality.errors import (
    EmptyInputError,
    MissingFeatureError,
    NoOobError,
    SingleClassError,
)
from repo_vitality.features import DataPointVector, ScenarioConfig
from repo_vitality.forest import (
    DecisionTree,
    ForestModel,
    ForestParams,
    load_model,
    mda_importance,
    predict_label,
    predict_proba,
    predict_proba_matrix,
    save_model,
    train,
)


def _labels(y01):
    return ["active" if v else "unmaintained" for v in y01]


def _separable(n=20, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 10, size=(n, 1))
    y01 = (X[:, 0] > 5).astype(int)
    # guarantee both classes
    X[0, 0], X[1, 0] = 1.0, 9.0
    y01[0], y01[1] = 0, 1
    return X, _labels(y01)


# --- reference CART oracle (exhaustive splits, same split definition) -----------

def _gini_quality(y_left, y_right):
    def side(y):
        n = len(y)
        n1 = int(sum(y))
        n0 = n - n1
        return (n0 * n0 + n1 * n1) / n

    return side(y_left) + side(y_right)


def _oracle_cart(X, y01, min_leaf=1):
    """Exhaustive-split CART: every feature, every midpoint threshold, first
    strictly-best split wins (features ascending, thresholds ascending)."""

    def build(idx):
        ys = [y01[i] for i in idx]
        node = {"n0": len(ys) - sum(ys), "n1": sum(ys)}
        if node["n0"] == 0 or node["n1"] == 0 or len(idx) <= min_leaf:
            return node
        n = len(idx)
        parent_quality = (node["n0"] ** 2 + node["n1"] ** 2) / n
        best = None
        for f in range(X.shape[1]):
            values = sorted({X[i, f] for i in idx})
            for lo, hi in zip(values, values[1:]):
                thr = (lo + hi) / 2.0
                left = [i for i in idx if X[i, f] <= thr]
                right = [i for i in idx if X[i, f] > thr]
                if len(left) < min_leaf or len(right) < min_leaf:
                    continue
                quality = _gini_quality([y01[i] for i in left], [y01[i] for i in right])
                if quality > parent_quality and (best is None or quality > best[0]):
                    best = (quality, f, thr, left, right)
        if best is None:
            return node
        _, f, thr, left, right = best
        node.update(
            feature=f, threshold=thr, left=build(left), right=build(right)
        )
        return node

    return build(list(range(len(y01))))


def _oracle_predict(node, x):
    while "feature" in node:
        node = node["left"] if x[node["feature"]] <= node["threshold"] else node["right"]
    if node["n1"] > node["n0"]:
        return 1
    return 0


# --- training basics -------------------------------------------------------------

def test_separable_training_accuracy():
    X, y = _separable()
    model = train(X, y, ForestParams(n_trees=25, seed=1))
    p = predict_proba_matrix(model, X)
    predicted = (p >= 0.5).astype(int)
    assert np.array_equal(predicted, np.asarray([1 if l == "active" else 0 for l in y]))


def test_single_tree_matches_exhaustive_cart_oracle():
    rng = np.random.default_rng(5)
    for trial in range(5):
        X = rng.uniform(0, 1, size=(6, 2))
        y01 = rng.integers(0, 2, size=6)
        y01[0], y01[1] = 0, 1
        params = ForestParams(n_trees=1, mtry=2, seed=trial, bootstrap=False)
        model = train(X, _labels(y01), params)
        oracle_root = _oracle_cart(X, y01)
        X_test = rng.uniform(0, 1, size=(40, 2))
        mine = model.trees[0].votes(X_test)
        theirs = np.asarray([_oracle_predict(oracle_root, x) for x in X_test])
        assert np.array_equal(mine, theirs)


def test_bit_identical_given_seed():
    X, y = _separable(n=60, seed=2)
    params = ForestParams(n_trees=30, seed=99)
    p1 = predict_proba_matrix(train(X, y, params), X)
    p2 = predict_proba_matrix(train(X, y, params), X)
    assert np.array_equal(p1, p2)


def test_parallel_training_reproduces_serial():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(80, 5))
    y = _labels((X[:, 2] > 0).astype(int))
    params = ForestParams(n_trees=16, seed=7)
    serial = train(X, y, params, n_jobs=1)
    parallel = train(X, y, params, n_jobs=4)
    assert np.array_equal(
        predict_proba_matrix(serial, X), predict_proba_matrix(parallel, X)
    )
    for a, b in zip(serial.trees, parallel.trees):
        assert np.array_equal(a.feature, b.feature)
        assert np.array_equal(a.threshold, b.threshold)


def test_errors():
    X, y = _separable()
    with pytest.raises(SingleClassError):
        train(X, ["active"] * len(y), ForestParams(n_trees=2, seed=0))
    with pytest.raises(EmptyInputError):
        train(np.empty((0, 2)), [], ForestParams(n_trees=2, seed=0))


# --- voting --------------------------------------------------------------------

def _leaf_tree(n0: int, n1: int) -> DecisionTree:
    return DecisionTree(
        feature=np.asarray([-1], dtype=np.int32),
        threshold=np.asarray([0.0]),
        left=np.asarray([-1], dtype=np.int32),
        right=np.asarray([-1], dtype=np.int32),
        counts=np.asarray([[n0, n1]], dtype=np.int64),
    )


def _stub_model(n_active_votes: int, n_trees: int = 100) -> ForestModel:
    trees = [_leaf_tree(0, 1) for _ in range(n_active_votes)]
    trees += [_leaf_tree(1, 0) for _ in range(n_trees - n_active_votes)]
    return ForestModel(
        trees=trees,
        feature_names=["f0"],
        oob_indices=[np.empty(0, dtype=int)] * n_trees,
        params=ForestParams(n_trees=n_trees, seed=0),
    )


def test_vote_proportions_exact():
    x = {"f0": 0.0}
    assert predict_proba(_stub_model(100), x) == 1.0
    assert predict_proba(_stub_model(50), x) == 0.5
    assert predict_proba(_stub_model(54), x) == 0.54


def test_label_thresholds():
    x = {"f0": 0.0}
    assert predict_label(_stub_model(75), x) == "active"
    assert predict_label(_stub_model(49), x) == "unmaintained"
    # tie at exactly 0.5 classifies active
    assert predict_label(_stub_model(50), x) == "active"


def test_vote_complement_sums_to_one():
    for n_trees in (100, 7, 33):
        for k in range(n_trees + 1):
            p_active = k / n_trees
            p_unmaintained = (n_trees - k) / n_trees
            assert p_active + p_unmaintained == 1.0


def test_leaf_tie_votes_unmaintained():
    tree = _leaf_tree(3, 3)
    assert tree.votes(np.zeros((1, 1)))[0] == 0


def test_missing_feature_named():
    model = _stub_model(10)
    with pytest.raises(MissingFeatureError) as exc_info:
        predict_proba(model, {"other": 1.0})
    assert exc_info.value.names == ["f0"]


def test_predict_accepts_data_point_vector():
    model = _stub_model(60)
    vec = DataPointVector("r/x", ScenarioConfig(6, 6), {"f0": 1.0})
    assert predict_proba(model, vec) == 0.6


def test_label_probability_consistency():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(50, 3))
    y = _labels((X[:, 0] + 0.3 * rng.normal(size=50) > 0).astype(int))
    model = train(X, y, ForestParams(n_trees=9, seed=4))
    p = predict_proba_matrix(model, X)
    for i, row in enumerate(X):
        vec = dict(zip(model.feature_names, row))
        assert (predict_label(model, vec) == "active") == (p[i] >= 0.5)


# --- bootstrap / OOB ---------------------------------------------------------------

def test_oob_fraction_in_expected_band():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(250, 4))
    y = _labels((X[:, 1] > 0).astype(int))
    model = train(X, y, ForestParams(n_trees=40, seed=12))
    for oob in model.oob_indices:
        assert 0.25 <= oob.size / 250 <= 0.48


def test_bootstrap_union_covers_everything():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(50, 2))
    y = _labels((X[:, 0] > 0).astype(int))
    model = train(X, y, ForestParams(n_trees=5, seed=3))
    for t_idx, oob in enumerate(model.oob_indices):
        boot = np.random.default_rng(
            np.random.SeedSequence([model.params.seed, t_idx])
        ).integers(0, 50, size=50)
        assert set(boot) | set(oob) == set(range(50))
        assert not set(boot) & set(oob)


def test_forest_beats_mean_single_tree_on_separable_data():
    rng = np.random.default_rng(21)
    wins = 0
    for seed in range(20):
        X = rng.normal(size=(60, 4))
        y01 = (X[:, 0] + X[:, 1] > 0).astype(int)
        y01[:2] = [0, 1]
        y = _labels(y01)
        model = train(X, y, ForestParams(n_trees=15, seed=seed))
        forest_acc = np.mean((predict_proba_matrix(model, X) >= 0.5).astype(int) == y01)
        tree_accs = [np.mean(tree.votes(X) == y01) for tree in model.trees]
        if forest_acc >= np.mean(tree_accs):
            wins += 1
    assert wins >= 18


# --- MDA ---------------------------------------------------------------------------

def _mda_dataset(n=500, seed=0):
    rng = np.random.default_rng(seed)
    signal = rng.uniform(-1, 1, size=n)
    noise = rng.uniform(-1, 1, size=n)
    constant = np.zeros(n)
    X = np.column_stack([signal, noise, constant, constant])
    y = _labels((signal > 0).astype(int))
    return X, y


def test_mda_separates_signal_from_noise():
    X, y = _mda_dataset()
    model = train(
        X, y, ForestParams(n_trees=60, seed=5),
        feature_names=["signal", "noise", "const_a", "const_b"],
    )
    table = mda_importance(model, X, y, repeats=5)
    values = table.as_dict()
    assert values["signal"] > values["noise"]
    assert values["signal"] == max(values.values())
    assert abs(values["noise"]) < 3.0
    assert values["const_a"] == 0.0 and values["const_b"] == 0.0
    assert table.top(1)[0][0] == "signal"


def test_mda_deterministic():
    X, y = _mda_dataset(n=120, seed=2)
    model = train(X, y, ForestParams(n_trees=20, seed=6))
    t1 = mda_importance(model, X, y, repeats=3)
    t2 = mda_importance(model, X, y, repeats=3)
    assert t1.rows == t2.rows


def test_mda_requires_oob():
    X, y = _separable(n=12)
    model = train(X, y, ForestParams(n_trees=3, seed=1, bootstrap=False))
    with pytest.raises(NoOobError):
        mda_importance(model, X, y)


# --- serialization -------------------------------------------------------------------

def test_model_round_trip(tmp_path):
    rng = np.random.default_rng(13)
    X = rng.normal(size=(70, 4))
    y = _labels((X[:, 3] > 0).astype(int))
    model = train(
        X, y, ForestParams(n_trees=12, seed=44),
        feature_names=["a", "b", "c", "d"], scenario=ScenarioConfig(24, 3),
    )
    path = tmp_path / "model.rvf"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.feature_names == model.feature_names
    assert loaded.scenario == model.scenario
    assert loaded.params == model.params
    assert np.array_equal(
        predict_proba_matrix(loaded, X), predict_proba_matrix(model, X)
    )
    save_model(loaded, tmp_path / "again.rvf")
    assert (tmp_path / "again.rvf").read_bytes() == path.read_bytes()


def test_mda_after_reload_matches(tmp_path):
    X, y = _mda_dataset(n=150, seed=3)
    model = train(X, y, ForestParams(n_trees=15, seed=9))
    path = tmp_path / "m.rvf"
    save_model(model, path)
    reloaded = load_model(path)
    assert mda_importance(model, X, y, repeats=2).rows == mda_importance(
        reloaded, X, y, repeats=2
    ).rows
