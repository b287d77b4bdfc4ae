import itertools

import numpy as np
import pytest

from auxcalib.errors import InvalidInputError, UndefinedMetricError
from auxcalib.metrics import (EvalOutcome, aupr, auroc, bin_indices, brier,
                              ece, ece_from_table, evaluate, evaluate_arrays,
                              histogram_table, outcomes_from_arrays,
                              precision_at_recall, reliability_table)


def _outcomes(pairs):
    return [EvalOutcome(c, ok) for c, ok in pairs]


def _brute_force_auroc(outcomes):
    wrong = [1 - o.confidence for o in outcomes if not o.correct]
    right = [1 - o.confidence for o in outcomes if o.correct]
    won = 0.0
    for s_pos, s_neg in itertools.product(wrong, right):
        won += 1.0 if s_pos > s_neg else 0.5 if s_pos == s_neg else 0.0
    return won / (len(wrong) * len(right))


def _brute_force_aupr(outcomes):
    ranked = sorted(enumerate(outcomes),
                    key=lambda item: (-(1 - item[1].confidence), item[0]))
    hits, total = 0, 0.0
    for rank, (_, o) in enumerate(ranked, start=1):
        if not o.correct:
            hits += 1
            total += hits / rank
    return total / hits


def test_ece_examples():
    assert ece(_outcomes([(1.0, True)] * 5)) == 0.0
    assert ece(_outcomes([(0.95, True), (0.95, False)])) == \
        pytest.approx(0.45, abs=1e-12)
    assert ece(_outcomes([(0.10, False), (0.90, True)]), 20) == \
        pytest.approx(0.10, abs=1e-12)


def test_ece_lies_in_unit_interval(rng):
    confidences = rng.uniform(size=300)
    correct = rng.uniform(size=300) < 0.5
    value = ece(outcomes_from_arrays(confidences, correct))
    assert 0.0 <= value <= 1.0


def test_ece_equals_weighted_table_gap(rng):
    outcomes = outcomes_from_arrays(rng.uniform(size=100),
                                    rng.uniform(size=100) < 0.7)
    table = reliability_table(outcomes, 10)
    assert ece(outcomes, 10) == pytest.approx(ece_from_table(table))


def test_ece_of_empty_input_is_undefined():
    with pytest.raises(UndefinedMetricError):
        ece([])


def test_brier_examples():
    assert brier(_outcomes([(1.0, True)])) == 0.0
    assert brier(_outcomes([(0.8, True)])) == pytest.approx(0.04)
    assert brier(_outcomes([(0.8, False)])) == pytest.approx(0.64)


def test_auroc_examples():
    assert auroc(_outcomes([(0.1, False), (0.2, False), (0.8, True),
                            (0.9, True)])) == 1.0
    assert auroc(_outcomes([(0.5, False), (0.5, True), (0.5, True)])) == 0.5
    outcomes = _outcomes([(0.1, False), (0.6, False), (0.4, True),
                          (0.9, True)])
    assert auroc(outcomes) == pytest.approx(0.75)


def test_auroc_matches_pair_counting(rng):
    for _ in range(500):
        n = int(rng.integers(2, 13))
        confidences = np.round(rng.uniform(size=n), 1)
        correct = rng.uniform(size=n) < 0.6
        if correct.all() or not correct.any():
            continue
        outcomes = outcomes_from_arrays(confidences, correct)
        assert auroc(outcomes) == pytest.approx(_brute_force_auroc(outcomes),
                                                abs=1e-12)


def test_auroc_single_class_is_undefined():
    with pytest.raises(UndefinedMetricError):
        auroc(_outcomes([(0.5, True), (0.6, True)]))


def test_aupr_examples():
    assert aupr(_outcomes([(0.1, False), (0.2, False), (0.9, True)])) == 1.0
    assert aupr(_outcomes([(0.3, True), (0.6, False)])) == pytest.approx(0.5)
    assert aupr(_outcomes([(0.3, False), (0.6, False)])) == 1.0


def test_aupr_matches_direct_average_precision(rng):
    for _ in range(500):
        n = int(rng.integers(1, 13))
        confidences = np.round(rng.uniform(size=n), 1)
        correct = rng.uniform(size=n) < 0.5
        if correct.all():
            continue
        outcomes = outcomes_from_arrays(confidences, correct)
        assert aupr(outcomes) == pytest.approx(_brute_force_aupr(outcomes),
                                               abs=1e-12)


def test_aupr_needs_a_positive():
    with pytest.raises(UndefinedMetricError):
        aupr(_outcomes([(0.3, True)]))


def test_precision_at_recall_examples():
    assert precision_at_recall(
        _outcomes([(0.1, False), (0.2, False), (0.9, True)])) == 1.0
    # Misclassified samples score highest: detection score 1 - confidence.
    interleaved = _outcomes([(i / 20, i % 2 == 1) for i in range(20)])
    assert precision_at_recall(interleaved, 0.9) == pytest.approx(9 / 17)
    assert precision_at_recall(interleaved, 0.0) == 1.0


def test_reliability_table_of_empty_input_is_all_zero():
    table = reliability_table([], 20)
    assert len(table) == 20
    assert all(b.count == 0 and b.mean_confidence == 0 and b.accuracy == 0
               for b in table)
    assert table[0].lo == 0.0 and table[-1].hi == 1.0


def test_reliability_and_histogram_counts(rng):
    outcomes = outcomes_from_arrays(rng.uniform(size=200),
                                    rng.uniform(size=200) < 0.5)
    table = reliability_table(outcomes, 20)
    histogram = histogram_table(outcomes, 20)
    assert sum(b.count for b in table) == 200
    for r, h in zip(table, histogram):
        assert r.count == h.n_correct + h.n_wrong
        if r.count:
            assert r.accuracy == pytest.approx(h.n_correct / r.count)


def test_bin_edges():
    np.testing.assert_array_equal(bin_indices([0.0, 0.05, 0.999, 1.0], 20),
                                  [0, 1, 19, 19])
    with pytest.raises(InvalidInputError):
        bin_indices([0.5], 0)


def test_outcome_confidence_range():
    with pytest.raises(InvalidInputError):
        EvalOutcome(1.5, True)


def test_evaluate_reports_null_rank_metrics_with_warning():
    report = evaluate(_outcomes([(0.9, True), (0.8, True)]), 10)
    assert report["auroc"] is None
    assert report["aupr"] is None
    assert report["precisionAt90Recall"] is None
    assert len(report["warnings"]) == 3
    assert report["ece"] == pytest.approx(0.15)
    assert len(report["reliability"]) == 10
    assert report["histogram"][9]["nCorrect"] == 1


def test_evaluate_arrays_keys():
    report = evaluate_arrays([0.2, 0.9], [False, True], 5)
    assert report["n"] == 2
    assert report["accuracy"] == 0.5
    assert report["auroc"] == 1.0
    assert report["warnings"] == []
    assert set(report["reliability"][0]) == {"binLo", "binHi", "count",
                                             "conf", "acc"}
    with pytest.raises(UndefinedMetricError):
        evaluate_arrays([], [], 5)
