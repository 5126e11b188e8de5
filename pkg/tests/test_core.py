import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from threshcal.core import (
    Dataset,
    DecisionSet,
    InputError,
    LabeledPoint,
    Provenance,
    ScoredTriple,
    ThresholdMap,
    classify,
    compute_metrics,
    evaluate,
    weighted_accuracy,
    weighted_f1,
)

from conftest import brute_accuracy, make_dataset

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


class TestClassify:
    def test_boundary_inclusive(self):
        assert classify(0.7, 0.7) is True

    def test_sentinels(self):
        assert classify(0.7, math.inf) is False
        assert classify(-5.0, -math.inf) is True

    @given(finite, finite, finite)
    def test_monotone_in_score_antitone_in_threshold(self, a, b, tau):
        lo, hi = sorted((a, b))
        assert classify(lo, tau) <= classify(hi, tau)
        assert classify(tau, hi) <= classify(tau, lo)

    @given(finite, finite)
    def test_invariant_under_increasing_transform(self, s, tau):
        g = lambda x: math.atan(x / 1e3)  # noqa: E731
        assert classify(s, tau) == classify(g(s), g(tau)) or g(s) == g(tau)


class TestComputeMetrics:
    def test_hand_counted(self):
        m = compute_metrics([True, True, False, False], [True, False, False, False])
        assert (m.tp, m.fp, m.tn, m.fn) == (1, 1, 2, 0)
        assert m.accuracy == 0.75
        assert m.f1 == pytest.approx(2 / 3)

    def test_perfect(self):
        m = compute_metrics([True, False], [True, False])
        assert m.accuracy == 1.0 and m.f1 == 1.0

    def test_no_positives_f1_zero(self):
        m = compute_metrics([False, False], [False, False])
        assert m.accuracy == 1.0 and m.f1 == 0.0

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            compute_metrics([True], [True, False])

    def test_empty(self):
        with pytest.raises(InputError):
            compute_metrics([], [])

    def test_agrees_with_confusion_count(self, rng):
        for _ in range(1000):
            n = int(rng.integers(1, 65))
            pred = rng.random(n) < 0.5
            gold = rng.random(n) < 0.5
            tp = fp = tn = fn = 0
            for p, g in zip(pred, gold):
                if p and g:
                    tp += 1
                elif p:
                    fp += 1
                elif g:
                    fn += 1
                else:
                    tn += 1
            m = compute_metrics(pred, gold)
            assert (m.tp, m.fp, m.tn, m.fn) == (tp, fp, tn, fn)
            assert m.accuracy == (tp + tn) / n
            assert m.f1 == (2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else 0.0)


class TestWeightedMetrics:
    def test_separated(self):
        ds = DecisionSet([0.2, 0.9], [0.0, 1.0], True)
        assert weighted_accuracy(ds, 0.9) == 1.0

    @pytest.mark.parametrize("tau", [-math.inf, -1.0, 0.5, 0.6, math.inf])
    def test_max_uncertain_soft_label(self, tau):
        ds = DecisionSet([0.5], [0.5], False)
        assert weighted_accuracy(ds, tau) == 0.5

    def test_direct_sum(self):
        ds = DecisionSet([0.1, 0.4, 0.8], [1.0, 0.0, 1.0], True)
        assert weighted_accuracy(ds, 0.8) == pytest.approx(2 / 3)

    def test_f1_perfect_and_all_negative(self):
        ds = DecisionSet([0.1, 0.9], [0.0, 1.0], True)
        assert weighted_f1(ds, 0.9) == 1.0
        assert weighted_f1(ds, math.inf) == 0.0

    def test_f1_half_recall(self):
        ds = DecisionSet([0.1, 0.9], [1.0, 1.0], True)
        assert weighted_f1(ds, 0.5) == pytest.approx(2 / 3)

    def test_empty_set_rejected(self):
        empty = DecisionSet([], [], True)
        with pytest.raises(InputError):
            weighted_accuracy(empty, 0.0)
        with pytest.raises(InputError):
            weighted_f1(empty, 0.0)

    @settings(max_examples=200)
    @given(st.lists(st.tuples(finite, st.booleans()), min_size=1, max_size=40), finite)
    def test_hard_weights_match_plain_accuracy(self, rows, tau):
        scores = [s for s, _ in rows]
        labels = [y for _, y in rows]
        ds = DecisionSet.hard(scores, labels)
        m = compute_metrics([s >= tau for s in scores], labels)
        assert weighted_accuracy(ds, tau) == m.accuracy
        assert weighted_accuracy(ds, tau) == pytest.approx(brute_accuracy(scores, [float(y) for y in labels], tau))


class TestTypes:
    def test_non_finite_score_rejected(self):
        with pytest.raises(InputError):
            ScoredTriple("a", "r", "b", math.nan)

    def test_empty_relation_rejected(self):
        with pytest.raises(InputError):
            ScoredTriple("a", "", "b", 0.0)

    def test_duplicate_triples_rejected(self):
        t = ScoredTriple("a", "r", "b", 0.0)
        with pytest.raises(InputError):
            Dataset((t, t))

    def test_dataset_relations_and_order(self):
        ds = make_dataset([("r2", 1.0, True), ("r1", 0.0, None), ("r2", -1.0, False)])
        assert ds.relations == {"r1", "r2"}
        assert list(ds.scores) == [1.0, 0.0, -1.0]
        with pytest.raises(InputError):
            ds.require_labels()

    def test_gold_point_must_be_hard(self):
        with pytest.raises(InputError):
            LabeledPoint(0.0, 0.3, Provenance.GOLD)
        assert LabeledPoint(0.0, 0.3, Provenance.AUTO).label_weight == 0.3

    def test_decision_set_points_roundtrip(self):
        pts = [LabeledPoint(0.1, 1.0), LabeledPoint(0.2, 0.25, Provenance.AUTO)]
        ds = DecisionSet.from_points(pts, relation="r")
        assert ds.points == pts
        assert ds.n_auto == 1
        assert not ds.is_hard

    def test_threshold_map_lookup_and_predict(self):
        tm = ThresholdMap({"r1": 0.5, "r2": math.inf}, default=-1.0)
        ds = make_dataset([("r1", 0.5, True), ("r2", 9.0, False), ("r3", -0.5, True)])
        assert list(tm.predict(ds)) == [True, False, True]
        assert evaluate(tm, ds).accuracy == 1.0
        with pytest.raises(InputError):
            ThresholdMap({"r": math.nan})

    def test_dataset_arrays_are_read_only(self):
        ds = make_dataset([("r", 1.0, True)])
        with pytest.raises(ValueError):
            ds.scores[0] = 2.0
        assert np.array_equal(ds.labels, [True])
