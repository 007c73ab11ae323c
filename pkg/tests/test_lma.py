from __future__ import annotations

import numpy as np
import pytest

from repo_vitality.errors import RepoVitalityError
from repo_vitality.features import DataPointVector, ScenarioConfig
from repo_vitality.lma import lma, score_corpus

from test_forest import _stub_model


def test_scale_endpoints():
    assert lma(0.5) == 0.0
    assert lma(1.0) == 100.0


def test_direct_arithmetic():
    assert lma(0.54) == pytest.approx(8.0)


def test_absent_below_half():
    assert lma(0.49) is None
    assert lma(0.0) is None


def test_out_of_range_rejected():
    with pytest.raises(RepoVitalityError):
        lma(1.5)
    with pytest.raises(RepoVitalityError):
        lma(-0.1)


def test_strictly_increasing_with_exact_endpoints():
    grid = np.linspace(0.5, 1.0, 101)
    values = [lma(p) for p in grid]
    assert values[0] == 0.0 and values[-1] == 100.0
    assert all(b > a for a, b in zip(values, values[1:]))


def test_quantized_to_vote_grid_with_100_trees():
    for k in range(50, 101):
        value = lma(k / 100)
        assert value == pytest.approx(2 * (k - 50), abs=1e-9)
        assert round(value) % 2 == 0


def test_round_trip_recovers_p():
    for k in range(50, 101):
        p = k / 100
        value = lma(p)
        assert value / 200 + 0.5 == pytest.approx(p, abs=1e-12)


def _vec(name: str) -> DataPointVector:
    return DataPointVector(name, ScenarioConfig(6, 6), {"f0": 0.0})


def test_score_corpus_all_max():
    model = _stub_model(100)
    scores, summary = score_corpus(model, [_vec(f"r/{i}") for i in range(4)])
    assert all(s.lma == 100.0 for s in scores)
    assert (summary.q1, summary.q2, summary.q3) == (100.0, 100.0, 100.0)
    assert summary.count_max == 4


def test_score_corpus_constructed_quartile_sample():
    # p values whose scores are exactly the reported quartile shape 0/48/82/97
    p_list = [0.5, 0.74, 0.91, 0.985]
    scores = []
    for i, p in enumerate(p_list):
        model = _stub_model(int(round(p * 1000)), n_trees=1000)
        result, _ = score_corpus(model, [_vec(f"r/{i}")])
        scores.append(result[0].lma)
    assert scores == pytest.approx([0.0, 48.0, 82.0, 97.0], abs=1e-9)


def test_score_corpus_empty_active_set():
    model = _stub_model(0)  # every tree votes unmaintained
    scores, summary = score_corpus(model, [_vec("r/0"), _vec("r/1")])
    assert all(s.lma is None for s in scores)
    assert summary.n_active == 0
    assert summary.q1 is None and summary.count_max == 0
