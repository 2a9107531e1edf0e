"""Decision-path explanations: counting, summaries, anomalies, rendering."""

import numpy as np
import pytest

from apustream.calibrate import WindowSpec
from apustream.errors import TemplateError, UnsupportedModelError
from apustream.explain import (
    AnomalyTracker,
    DEFAULT_TEMPLATE,
    ExplanationAccumulator,
    PathFeature,
    build_explanation,
    decision_path_features,
    render_explanation,
    top_relevant_features,
)
from apustream.features import FeatureName, FeatureSchema, FeatureVector
from apustream.learn.forest import AdaptiveRandomForestClassifier
from apustream.learn.gnb import GaussianNaiveBayes
from apustream.learn.htree import HoeffdingTreeClassifier
from apustream.schema import ClassLabel

from conftest import feature_vectors, random_samples


@pytest.fixture
def schema(small_spec):
    return FeatureSchema(small_spec)


def make_fv(schema, values, seq_id=7, timestamp=1_000):
    return FeatureVector(seq_id=seq_id, timestamp=timestamp, schema=schema,
                         values=np.asarray(values, dtype=np.float64))


def train_tree(schema, seed=0, n=2_500, informative=(3, 9)):
    """Tree over the full 400-wide schema, splits on two planted features."""
    rng = np.random.default_rng(seed)
    model = HoeffdingTreeClassifier(n_classes=2, grace_period=100)
    X = rng.normal(0, 1, size=(n, len(schema)))
    y = rng.integers(0, 2, size=n)
    X[:, informative[0]] += y * 6.0
    X[:, informative[1]] -= y * 4.0
    for i in range(n):
        model.learn_one(X[i], int(y[i]))
    assert model.n_nodes > 1
    return model, X, y


def path_count_oracle(tree, fv):
    """Walk the tree by hand; count only greater-than branch features."""
    counts = {}
    node = tree.root
    arr = fv.values
    while hasattr(node, "feature"):
        if arr[node.feature] > node.threshold:
            counts[node.feature] = counts.get(node.feature, 0) + 1
            node = node.right
        else:
            node = node.left
    return counts


def test_path_features_match_hand_walk(schema):
    model, X, _ = train_tree(schema)
    for i in range(0, 300, 11):
        fv = make_fv(schema, X[i])
        got = decision_path_features(model, fv)
        expect = path_count_oracle(model, fv)
        as_dict = {}
        for pf in got:
            idx = schema.position(pf.feature)
            as_dict[idx] = pf.frequency
        assert as_dict == expect


def test_left_only_path_is_empty(schema):
    """A sample routed left everywhere contributes no path features."""
    model, X, _ = train_tree(schema)
    fv = make_fv(schema, np.full(len(schema), -1e9))
    assert decision_path_features(model, fv) == []


def test_top_relevant_features_ranking(schema):
    model, X, _ = train_tree(schema)
    # pick a sample that takes at least one right branch
    for i in range(len(X)):
        fv = make_fv(schema, X[i])
        feats = top_relevant_features(model, fv)
        if feats:
            break
    assert len(feats) <= 5
    freqs = [f.frequency for f in feats]
    assert freqs == sorted(freqs, reverse=True)
    # ties broken by serialized name
    for a, b in zip(feats, feats[1:]):
        if a.frequency == b.frequency:
            assert a.feature.serialize() < b.feature.serialize()


def test_forest_merges_tree_paths(schema):
    rng = np.random.default_rng(1)
    model = AdaptiveRandomForestClassifier(
        n_models=4, subspace_size=50, n_classes=2, seed=5,
        tree_params={"grace_period": 100},
    )
    X = rng.normal(0, 1, size=(1_200, len(schema)))
    y = rng.integers(0, 2, size=1_200)
    X[:, 3] += y * 6.0
    for i in range(len(X)):
        model.learn_one(X[i], int(y[i]))
    fv = make_fv(schema, X[-1])
    merged = {}
    for tree in model.trees:
        for idx, c in path_count_oracle(tree, fv).items():
            merged[idx] = merged.get(idx, 0) + c
    got = top_relevant_features(model, fv, k=len(merged) + 5)
    got_map = {schema.position(pf.feature): pf.frequency for pf in got}
    assert got_map == merged


def test_n_estimators_limits_trees(schema):
    rng = np.random.default_rng(2)
    model = AdaptiveRandomForestClassifier(
        n_models=6, subspace_size=50, n_classes=2, seed=9,
        tree_params={"grace_period": 80},
    )
    X = rng.normal(0, 1, size=(900, len(schema)))
    y = rng.integers(0, 2, size=900)
    X[:, 5] += y * 7.0
    for i in range(len(X)):
        model.learn_one(X[i], int(y[i]))
    fv = make_fv(schema, X[-1])
    full = top_relevant_features(model, fv, k=400)
    first_two = top_relevant_features(model, fv, n_estimators=2, k=400)
    merged = {}
    for tree in model.trees[:2]:
        for idx, c in path_count_oracle(tree, fv).items():
            merged[idx] = merged.get(idx, 0) + c
    got_map = {schema.position(pf.feature): pf.frequency for pf in first_two}
    assert got_map == merged
    assert sum(f.frequency for f in first_two) <= sum(f.frequency for f in full)


def test_gnb_has_no_paths(schema):
    model = GaussianNaiveBayes(n_classes=2)
    fv = make_fv(schema, np.zeros(len(schema)))
    with pytest.raises(UnsupportedModelError):
        top_relevant_features(model, fv)


def test_phrase_wording(schema):
    pf = PathFeature(FeatureName("TP2", "std", "W_q1"), 3)
    text = pf.phrase()
    assert "TP2" in text
    assert "sliding window" in text
    raw = PathFeature(FeatureName("H1", "raw", "none"), 1)
    assert "sliding window" not in raw.phrase()


# -- run-level accumulation ----------------------------------------------------


def test_accumulator_summarizes_counts(schema):
    acc = ExplanationAccumulator()
    acc.add([PathFeature(FeatureName("TP2", "avg", "W_avg"), 2),
             PathFeature(FeatureName("TP3", "q2", "W_q2"), 1)])
    acc.add([PathFeature(FeatureName("TP2", "avg", "W_avg"), 1)])
    summary = acc.model_summary()
    assert dict(summary.top_windows) == {"W_avg": 3, "W_q2": 1}
    assert dict(summary.top_metrics) == {"avg": 3, "q2": 1}
    assert dict(summary.top_sensors) == {"TP2": 3, "TP3": 1}
    # descending frequency
    assert summary.top_windows[0] == ("W_avg", 3)
    assert summary.windows_equal is False


def test_accumulator_windows_equal_flag():
    acc = ExplanationAccumulator()
    for slot in ("W_avg", "W_q1", "W_q2", "W_q3"):
        acc.add([PathFeature(FeatureName("TP2", "avg", slot), 2)])
    assert acc.model_summary().windows_equal is True


# -- anomaly tracking ----------------------------------------------------------


def anomaly_schema():
    spec = WindowSpec(w_avg=4, w_q1=4, w_q2=4, w_q3=4)
    return FeatureSchema(spec)


def fv_with(schema, sensor, raw, avg, std, q1, q3, timestamp):
    vals = np.zeros(len(schema))
    vals[schema.position(FeatureName(sensor, "raw", "none"))] = raw
    vals[schema.position(FeatureName(sensor, "avg", "W_avg"))] = avg
    vals[schema.position(FeatureName(sensor, "std", "W_avg"))] = std
    vals[schema.position(FeatureName(sensor, "q1", "W_avg"))] = q1
    vals[schema.position(FeatureName(sensor, "q3", "W_avg"))] = q3
    return FeatureVector(seq_id=timestamp, timestamp=timestamp, schema=schema,
                         values=vals)


def test_pattern_anomaly_duration_grows_and_resets():
    schema = anomaly_schema()
    tracker = AnomalyTracker(schema)
    t = 100
    report = None
    for i in range(5):
        # raw 10 sigma away from the window mean
        report = tracker.update(fv_with(schema, "TP2", 10.0, 0.0, 1.0, -1.0, 1.0, t + i))
    assert report.durations["TP2"][0] == 5  # ts - start + 1
    # back to normal: duration resets
    report = tracker.update(fv_with(schema, "TP2", 0.0, 0.0, 1.0, -1.0, 1.0, t + 5))
    assert report.durations["TP2"][0] == 0.0


def test_value_anomaly_uses_iqr_fences():
    schema = anomaly_schema()
    tracker = AnomalyTracker(schema)
    t = 50
    # q1=-1, q3=1, IQR=2: fences at -7 and +7
    report = tracker.update(fv_with(schema, "H1", 6.9, 0.0, 10.0, -1.0, 1.0, t))
    assert report.durations["H1"][1] == 0.0
    report = tracker.update(fv_with(schema, "H1", 7.1, 0.0, 10.0, -1.0, 1.0, t + 1))
    assert report.durations["H1"][1] == 1.0


def test_zero_std_uses_floor_not_nan():
    schema = anomaly_schema()
    tracker = AnomalyTracker(schema)
    report = tracker.update(fv_with(schema, "TP2", 1e-6, 0.0, 0.0, 0.0, 0.0, 10))
    assert report.durations["TP2"][0] == 1.0  # floored std trips


def test_report_floors_filter_short_blips():
    schema = anomaly_schema()
    tracker = AnomalyTracker(schema)
    report = None
    for i in range(100):
        report = tracker.update(fv_with(schema, "TP2", 10.0, 0.0, 1.0, -1.0, 1.0, i))
    over = report.over_thresholds(pattern_floor_s=600.0, value_floor_s=120.0)
    assert over == []  # 100 s is under both floors
    over = report.over_thresholds(pattern_floor_s=50.0, value_floor_s=120.0)
    assert [(s, kind) for s, kind, _ in over] == [("TP2", "pattern")]


# -- rendering -----------------------------------------------------------------


def built_explanation(schema, predicted=ClassLabel.AirLeakDryer):
    model, X, _ = train_tree(schema)
    fv = None
    for i in range(len(X)):
        cand = make_fv(schema, X[i], seq_id=123, timestamp=9_999)
        if decision_path_features(model, cand):
            fv = cand
            break
    assert fv is not None
    acc = ExplanationAccumulator()
    tracker = AnomalyTracker(schema)
    report = tracker.update(fv)
    return build_explanation(model, fv, predicted, acc, report)


def test_explanation_text_sections(schema):
    exp = built_explanation(schema)
    text = exp.text
    assert "For sample 123" in text
    assert "the five most representative features are:" in text
    assert "The most representative parameters for the ML model are:" in text
    assert "Sliding windows:" in text
    assert "Signal Pre-Processing Technique:" in text
    assert "Sensors:" in text
    assert "then the prediction is that" in text


def test_render_is_deterministic(schema):
    a = built_explanation(schema)
    b = built_explanation(schema)
    assert a.text == b.text


def test_prediction_phrase_changes_with_class(schema):
    a = built_explanation(schema, ClassLabel.AirLeakDryer)
    b = built_explanation(schema, ClassLabel.NonFailure)
    assert a.text != b.text


def test_bad_template_raises(schema):
    model, X, _ = train_tree(schema)
    fv = make_fv(schema, X[0])
    acc = ExplanationAccumulator()
    tracker = AnomalyTracker(schema)
    report = tracker.update(fv)
    with pytest.raises(TemplateError):
        build_explanation(
            model, fv, ClassLabel.NonFailure, acc, report,
            template="{nonexistent_placeholder}",
        )


def test_empty_accumulator_renders_placeholders(schema):
    """First samples of a run: no splits anywhere yet, text still renders."""
    model = HoeffdingTreeClassifier(n_classes=2)
    model.learn_one(np.zeros(len(schema)), 0)
    fv = make_fv(schema, np.zeros(len(schema)))
    acc = ExplanationAccumulator()
    tracker = AnomalyTracker(schema)
    report = tracker.update(fv)
    exp = build_explanation(model, fv, ClassLabel.NonFailure, acc, report)
    assert "none traversed." in exp.text
