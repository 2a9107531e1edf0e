"""Prequential protocol, confusion bookkeeping, F-measures, grid search."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apustream.errors import MetricsError
from apustream.eval import (
    ConfusionMatrix,
    GRIDS,
    GridPoint,
    compute_fmeasure,
    expand_grid,
    grid_search,
    metrics_from_records,
    prequential_run,
)
from apustream.schema import ClassLabel


def batch_fmeasure(truth, preds, n_classes=4):
    """Independent per-class F1 from scratch."""
    fs = []
    for c in range(n_classes):
        tp = sum(1 for t, p in zip(truth, preds) if t == c and p == c)
        fp = sum(1 for t, p in zip(truth, preds) if t != c and p == c)
        fn = sum(1 for t, p in zip(truth, preds) if t == c and p != c)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        fs.append(2 * prec * rec / (prec + rec) if prec + rec else 0.0)
    return fs


class OracleModel:
    """Reads the answer straight off the feature slot; accuracy 1 by design."""

    def predict_one(self, fv):
        return int(fv), np.zeros(4)

    def learn_one(self, fv, y):
        pass


class ConstantModel:
    def __init__(self, c):
        self.c = c

    def predict_one(self, fv):
        return self.c, np.zeros(4)

    def learn_one(self, fv, y):
        pass


def label_stream(labels):
    return [(int(c), ClassLabel(c)) for c in labels]


def test_oracle_model_scores_perfectly():
    labels = [0, 1, 2, 3] * 50
    stream = label_stream(labels)
    metrics, records = prequential_run(OracleModel(), stream)
    assert metrics.accuracy == 1.0
    assert metrics.macro_f == 1.0
    assert metrics.micro_f == 1.0
    assert len(records) == len(stream)


def test_constant_model_accuracy_is_class_share():
    labels = [0] * 70 + [1] * 30
    metrics, _ = prequential_run(ConstantModel(0), label_stream(labels))
    assert metrics.accuracy == pytest.approx(0.7)


def test_empty_stream_raises():
    with pytest.raises(MetricsError):
        prequential_run(ConstantModel(0), [])


def test_predict_happens_before_learn():
    """Leakage check: a cheater that memorizes inside learn_one still cannot
    see the current label at prediction time."""
    seen_at_predict = []

    class Spy:
        def __init__(self):
            self.labels = []

        def predict_one(self, fv):
            seen_at_predict.append(len(self.labels))
            return 0, np.zeros(4)

        def learn_one(self, fv, y):
            self.labels.append(y)

    prequential_run(Spy(), label_stream([1, 2, 3]))
    assert seen_at_predict == [0, 1, 2]  # current label never visible


def test_records_align_with_stream():
    labels = [3, 1, 0, 2]
    stream = [((i, 1_000 + i), ClassLabel(c)) for i, c in enumerate(labels)]

    class FV:
        def __init__(self, seq_id, timestamp):
            self.seq_id = seq_id
            self.timestamp = timestamp

    stream = [(FV(i, 1_000 + i), ClassLabel(c)) for i, c in enumerate(labels)]
    _, records = prequential_run(ConstantModel(1), stream)
    assert [r.seq_id for r in records] == [0, 1, 2, 3]
    assert [r.timestamp for r in records] == [1_000, 1_001, 1_002, 1_003]
    assert [r.true for r in records] == labels
    assert all(r.predicted == 1 for r in records)
    assert all(r.latency_s >= 0 for r in records)


def test_on_predict_fires_with_prediction_state():
    calls = []

    def hook(fv, pred):
        calls.append(pred)

    prequential_run(ConstantModel(2), label_stream([0, 1]), on_predict=hook)
    assert calls == [2, 2]


@settings(max_examples=60, deadline=None)
@given(
    st.lists(
        st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=400
    )
)
def test_fmeasure_matches_batch_recompute(pairs):
    cm = ConfusionMatrix()
    for t, p in pairs:
        cm.add(t, p)
    macro, micro, per_class = compute_fmeasure(cm)
    truth = [t for t, _ in pairs]
    preds = [p for _, p in pairs]
    expect = batch_fmeasure(truth, preds)
    np.testing.assert_allclose(per_class, expect, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(macro, np.mean(expect), rtol=1e-12)
    # micro F over a single-label task collapses onto accuracy
    acc = np.mean([t == p for t, p in pairs])
    np.testing.assert_allclose(micro, acc, rtol=1e-12)


def test_confusion_matrix_counts():
    cm = ConfusionMatrix()
    cm.add(0, 0)
    cm.add(0, 1)
    cm.add(1, 1)
    assert cm.total == 3
    assert cm.accuracy() == pytest.approx(2 / 3)
    assert cm.counts[0, 1] == 1


def test_metrics_from_records_consistent():
    labels = [0, 1, 2, 0, 3, 1] * 10
    metrics, records = prequential_run(ConstantModel(0), label_stream(labels))
    again = metrics_from_records(records)
    assert again.accuracy == metrics.accuracy
    assert again.macro_f == metrics.macro_f
    np.testing.assert_array_equal(again.confusion.counts, metrics.confusion.counts)


def test_table_row_format():
    labels = [0, 1] * 40
    metrics, _ = prequential_run(ConstantModel(0), label_stream(labels))
    row = metrics.table_row("demo")
    assert row.startswith("demo")
    assert "50.00" in row  # accuracy percent


# -- grid search ---------------------------------------------------------------


def test_expand_grid_orders_and_counts():
    grid = {"a": [1, 2], "b": ["x", "y", "z"]}
    points = expand_grid(grid)
    assert len(points) == 6
    assert points[0] == {"a": 1, "b": "x"}
    assert points[-1] == {"a": 2, "b": "z"}


def test_expand_grid_empty_rejected():
    with pytest.raises(ValueError):
        expand_grid({})


def test_grid_search_ranks_by_macro_f():
    labels = [0, 1, 2, 3] * 30

    def factory(mode):
        return OracleModel() if mode == "oracle" else ConstantModel(0)

    result = grid_search(factory, {"mode": ["constant", "oracle"]},
                         label_stream(labels))
    assert result.best.params == {"mode": "oracle"}
    assert result.leaderboard[0].metrics.macro_f >= result.leaderboard[1].metrics.macro_f
    assert len(result.leaderboard) == 2


def test_grid_search_tie_breaks_stably():
    labels = [0, 1] * 30

    def factory(k):
        return ConstantModel(0)

    result = grid_search(factory, {"k": [5, 1, 3]}, label_stream(labels))
    # equal scores: earliest grid point (after wall tie) should not crash
    assert len(result.leaderboard) == 3
    assert {p.params["k"] for p in result.leaderboard} == {1, 3, 5}


def test_builtin_grids_shape():
    assert set(GRIDS) == {"htc", "hatc", "arfc", "gnb"}
    for family in ("htc", "hatc", "arfc"):
        assert len(expand_grid(GRIDS[family])) == 27
    assert GRIDS["gnb"] == {}  # nothing to tune
