"""Streaming naive Bayes against the batch reference."""

import numpy as np
import pytest

from apustream.learn.gnb import GaussianNaiveBayes


def gaussian_data(n, seed=0, n_classes=3, n_features=8, sep=2.5):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, n_classes, size=n)
    centers = rng.normal(0, sep, size=(n_classes, n_features))
    X = centers[y] + rng.normal(0, 1.0, size=(n, n_features))
    return X, y


def test_agrees_with_batch_reference():
    """Train once through the stream, then >=99% prediction agreement with
    sklearn fit on the same data."""
    sklearn_gnb = pytest.importorskip("sklearn.naive_bayes")
    X, y = gaussian_data(4_000, seed=1)
    model = GaussianNaiveBayes(n_classes=3)
    for i in range(len(X)):
        model.learn_one(X[i], int(y[i]))
    batch = sklearn_gnb.GaussianNB(var_smoothing=0.0).fit(X, y)
    Xq, _ = gaussian_data(2_000, seed=2)
    ours = np.array([model.predict_one(x)[0] for x in Xq])
    theirs = batch.predict(Xq)
    assert (ours == theirs).mean() >= 0.99


def test_class_stats_match_batch_moments():
    X, y = gaussian_data(1_500, seed=3)
    model = GaussianNaiveBayes(n_classes=3)
    for i in range(len(X)):
        model.learn_one(X[i], int(y[i]))
    for c in range(3):
        count, means, variances = model.class_stats(c)
        mask = y == c
        assert count == mask.sum()
        np.testing.assert_allclose(means, X[mask].mean(axis=0), rtol=1e-9)
        np.testing.assert_allclose(
            variances, X[mask].var(axis=0), rtol=1e-9, atol=1e-9
        )


def test_prequential_accuracy_on_separated_classes():
    X, y = gaussian_data(3_000, seed=4, sep=4.0)
    model = GaussianNaiveBayes(n_classes=3)
    hits = []
    for i in range(len(X)):
        p, _ = model.predict_one(X[i])
        hits.append(p == y[i])
        model.learn_one(X[i], int(y[i]))
    assert np.mean(hits[-500:]) >= 0.95


def test_unseen_model_predicts_lowest_class():
    model = GaussianNaiveBayes(n_classes=4)
    pred, scores = model.predict_one(np.zeros(5))
    assert pred == 0


def test_point_mass_feature_does_not_blow_up():
    model = GaussianNaiveBayes(n_classes=2)
    for i in range(50):
        x = np.array([1.0, float(i % 2)])  # first feature constant
        model.learn_one(x, i % 2)
    pred, scores = model.predict_one(np.array([1.0, 1.0]))
    assert np.isfinite(scores).all()
    assert pred == 1


def test_label_validation():
    model = GaussianNaiveBayes(n_classes=2)
    with pytest.raises(ValueError):
        model.learn_one(np.zeros(3), 2)
