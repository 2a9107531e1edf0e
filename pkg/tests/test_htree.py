"""Incremental decision tree: splits, guarantees, limits."""

import math

import numpy as np
import pytest

from apustream.learn.htree import HoeffdingTreeClassifier, hoeffding_bound


def two_blob_stream(n, seed=0, gap=6.0, n_features=4):
    """Linearly separable two-class stream on the first feature."""
    rng = np.random.default_rng(seed)
    X = rng.normal(0, 1, size=(n, n_features))
    y = rng.integers(0, 2, size=n)
    X[:, 0] += y * gap
    return X, y


def run_prequential(model, X, y):
    hits = []
    for i in range(len(X)):
        pred, _ = model.predict_one(X[i])
        hits.append(pred == y[i])
        model.learn_one(X[i], int(y[i]))
    return np.asarray(hits)


def test_hoeffding_bound_formula():
    # epsilon = sqrt(R^2 ln(1/delta) / 2n)
    got = hoeffding_bound(2.0, 1e-7, 200.0)
    expect = math.sqrt(4.0 * math.log(1e7) / 400.0)
    assert got == pytest.approx(expect, rel=1e-12)


def test_bound_shrinks_with_samples():
    assert hoeffding_bound(1, 1e-7, 400) < hoeffding_bound(1, 1e-7, 200)


def test_learns_separable_stream():
    X, y = two_blob_stream(3_000, seed=1)
    model = HoeffdingTreeClassifier(n_classes=2)
    hits = run_prequential(model, X, y)
    assert hits[-500:].mean() >= 0.95
    assert model.n_nodes > 1  # actually split


def test_no_split_before_grace_period():
    X, y = two_blob_stream(300, seed=2)
    model = HoeffdingTreeClassifier(n_classes=2, grace_period=200)
    for i in range(199):
        model.learn_one(X[i], int(y[i]))
    assert model.n_nodes == 1
    assert model.split_events == []


def test_split_event_records_feature():
    X, y = two_blob_stream(3_000, seed=3)
    model = HoeffdingTreeClassifier(n_classes=2)
    run_prequential(model, X, y)
    assert model.split_events
    # the informative feature is chosen at the root
    assert model.split_events[0].feature == 0


def test_depth_limit_respected():
    rng = np.random.default_rng(4)
    X = rng.normal(0, 1, size=(6_000, 3))
    y = rng.integers(0, 4, size=6_000)  # pure noise invites overgrowth
    model = HoeffdingTreeClassifier(
        n_classes=4, depth_limit=2, grace_period=50, split_confidence=0.5,
        tie_threshold=0.5,
    )
    run_prequential(model, X, y)
    assert model.height <= 2


def test_decision_path_routes_like_predict():
    X, y = two_blob_stream(3_000, seed=5)
    model = HoeffdingTreeClassifier(n_classes=2)
    run_prequential(model, X, y)
    assert model.n_nodes > 1
    for i in range(0, 200, 7):
        path = model.decision_path(X[i])
        # replay the comparisons by hand
        for feature, threshold, went_right in path:
            assert went_right == (X[i][feature] > threshold)


def test_predict_before_learn_ties_to_lowest():
    model = HoeffdingTreeClassifier(n_classes=4)
    pred, scores = model.predict_one(np.zeros(3))
    assert pred == 0  # all-zero scores tie; lowest class wins
    np.testing.assert_array_equal(scores, np.zeros(4))


def test_scores_are_class_masses():
    X, y = two_blob_stream(500, seed=6)
    model = HoeffdingTreeClassifier(n_classes=2)
    for i in range(400):
        model.learn_one(X[i], int(y[i]))
    for i in range(400, 410):
        pred, scores = model.predict_one(X[i])
        assert (scores >= 0).all()
        assert pred == int(np.argmax(scores))


def test_memory_budget_deactivates_leaves():
    rng = np.random.default_rng(7)
    n = 8_000
    X = rng.normal(0, 1, size=(n, 8))
    y = (X[:, 0] * 3 + X[:, 1] > 0).astype(int) + 2 * (X[:, 2] > 0.5)
    tight = HoeffdingTreeClassifier(
        n_classes=4, max_size=0.05, grace_period=50, split_confidence=1e-3
    )
    loose = HoeffdingTreeClassifier(
        n_classes=4, max_size=100.0, grace_period=50, split_confidence=1e-3
    )
    run_prequential(tight, X, y)
    run_prequential(loose, X, y)
    assert tight.memory_bytes <= 0.05 * 2**20 * 1.1
    assert tight.n_nodes <= loose.n_nodes


def test_subspace_restricts_split_features():
    X, y = two_blob_stream(4_000, seed=8, n_features=6)
    rng = np.random.default_rng(8)
    model = HoeffdingTreeClassifier(
        n_classes=2, subspace_size=2, rng=rng, split_confidence=1e-3
    )
    run_prequential(model, X, y)
    for ev in model.split_events:
        assert 0 <= ev.feature < 6
