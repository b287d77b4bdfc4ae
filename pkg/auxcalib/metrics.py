"""
Calibration and misclassification-detection metrics over (confidence,
correctness) outcomes: ECE, Brier score, AUROC, AUPR, precision at a recall
level, and the reliability / histogram tables behind the diagrams.

Misclassified samples are the positives of the detection metrics, scored by
1 - confidence.
"""
import logging
from dataclasses import dataclass
from typing import List

import numpy as np
from scipy.stats import rankdata

from auxcalib.errors import InvalidInputError, UndefinedMetricError

logger = logging.getLogger(__name__)

DEFAULT_BINS = 20


@dataclass(frozen=True)
class EvalOutcome:
    """
    Calibrated confidence of one prediction and whether it was correct.
    """
    confidence: float
    correct: bool

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise InvalidInputError(
                f"Confidence must lie in [0, 1], got {self.confidence}.")


@dataclass(frozen=True)
class ReliabilityBin:
    lo: float
    hi: float
    count: int
    mean_confidence: float
    accuracy: float


@dataclass(frozen=True)
class HistogramBin:
    lo: float
    hi: float
    n_correct: int
    n_wrong: int


def outcomes_from_arrays(confidences, correct) -> List[EvalOutcome]:
    return [
        EvalOutcome(float(c), bool(ok))
        for c, ok in zip(np.asarray(confidences), np.asarray(correct))
    ]


def as_arrays(outcomes):
    """(confidences, correct) numpy arrays of an outcome list."""
    outcomes = list(outcomes)
    confidences = np.array([o.confidence for o in outcomes], dtype=np.float64)
    correct = np.array([o.correct for o in outcomes], dtype=bool)
    return confidences, correct


def _check_bins(n_bins):
    if int(n_bins) < 1:
        raise InvalidInputError(f"Bin count must be >= 1, got {n_bins}.")
    return int(n_bins)


def bin_indices(confidences, n_bins):
    """
    Equal-width bin of each confidence: bin m covers [m/M, (m+1)/M), the last
    bin is closed at 1.
    """
    n_bins = _check_bins(n_bins)
    idx = np.floor(np.asarray(confidences) * n_bins).astype(np.int64)
    return np.clip(idx, 0, n_bins - 1)


def reliability_table_arrays(confidences, correct, n_bins=DEFAULT_BINS):
    n_bins = _check_bins(n_bins)
    idx = bin_indices(confidences, n_bins)
    counts = np.bincount(idx, minlength=n_bins)
    conf_sums = np.bincount(idx, weights=confidences, minlength=n_bins)
    hit_sums = np.bincount(idx,
                           weights=correct.astype(np.float64),
                           minlength=n_bins)
    table = []
    for m in range(n_bins):
        count = int(counts[m])
        table.append(
            ReliabilityBin(lo=m / n_bins,
                           hi=(m + 1) / n_bins,
                           count=count,
                           mean_confidence=conf_sums[m] /
                           count if count else 0.0,
                           accuracy=hit_sums[m] / count if count else 0.0))
    return table


def reliability_table(outcomes, n_bins=DEFAULT_BINS) -> List[ReliabilityBin]:
    """
    Per-bin count, mean confidence and accuracy. Empty bins report zeros.
    """
    return reliability_table_arrays(*as_arrays(outcomes), n_bins)


def histogram_table(outcomes, n_bins=DEFAULT_BINS) -> List[HistogramBin]:
    """
    Per-bin counts of correct and wrong predictions.
    """
    return histogram_table_arrays(*as_arrays(outcomes), n_bins)


def histogram_table_arrays(confidences, correct, n_bins=DEFAULT_BINS):
    n_bins = _check_bins(n_bins)
    idx = bin_indices(confidences, n_bins)
    n_correct = np.bincount(idx[correct], minlength=n_bins)
    n_wrong = np.bincount(idx[~correct], minlength=n_bins)
    return [
        HistogramBin(lo=m / n_bins,
                     hi=(m + 1) / n_bins,
                     n_correct=int(n_correct[m]),
                     n_wrong=int(n_wrong[m])) for m in range(n_bins)
    ]


def ece_from_table(table):
    """
    ECE recomputed from a reliability table.
    """
    n = sum(b.count for b in table)
    if n == 0:
        raise UndefinedMetricError("ECE is undefined without outcomes.")
    return float(
        sum(b.count / n * abs(b.accuracy - b.mean_confidence) for b in table
            if b.count))


def ece_arrays(confidences, correct, n_bins=DEFAULT_BINS):
    return ece_from_table(
        reliability_table_arrays(confidences, correct, n_bins))


def ece(outcomes, n_bins=DEFAULT_BINS):
    """
    Expected calibration error with M equal-width bins.
    """
    return ece_arrays(*as_arrays(outcomes), n_bins)


def brier_arrays(confidences, correct):
    if len(confidences) == 0:
        raise UndefinedMetricError("Brier score is undefined without outcomes.")
    return float(np.mean((correct.astype(np.float64) - confidences)**2))


def brier(outcomes):
    """
    Mean squared error between correctness and confidence.
    """
    return brier_arrays(*as_arrays(outcomes))


def detection_scores(confidences):
    return 1.0 - np.asarray(confidences, dtype=np.float64)


def auroc_arrays(confidences, correct):
    positives = ~correct
    n_pos = int(positives.sum())
    n_neg = len(correct) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError(
            "AUROC needs both misclassified and correct samples.")
    ranks = rankdata(detection_scores(confidences))
    u_stat = ranks[positives].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u_stat / (n_pos * n_neg))


def auroc(outcomes):
    """
    Area under the ROC curve of detecting misclassified samples, via the
    Mann-Whitney statistic with midranks (ties count half).
    """
    return auroc_arrays(*as_arrays(outcomes))


def _ranked_positives(confidences, correct):
    positives = ~correct
    if not positives.any():
        raise UndefinedMetricError(
            "Detection metrics need at least one misclassified sample.")
    # Stable sort: ties keep their input order.
    order = np.argsort(-detection_scores(confidences), kind="stable")
    ranked = positives[order]
    true_positives = np.cumsum(ranked)
    precision = true_positives / np.arange(1, len(ranked) + 1)
    return ranked, true_positives, precision


def aupr_arrays(confidences, correct):
    ranked, true_positives, precision = _ranked_positives(
        confidences, correct)
    return float(precision[ranked].sum() / true_positives[-1])


def aupr(outcomes):
    """
    Step-wise average precision of detecting misclassified samples.
    """
    return aupr_arrays(*as_arrays(outcomes))


def precision_at_recall_arrays(confidences, correct, recall=0.9):
    _, true_positives, precision = _ranked_positives(confidences, correct)
    recalls = true_positives / true_positives[-1]
    index = int(np.argmax(recalls >= recall - 1e-12))
    return float(precision[index])


def precision_at_recall(outcomes, recall=0.9):
    """
    Precision at the first rank (descending detection score) where the recall
    of misclassified samples reaches the requested level.
    """
    return precision_at_recall_arrays(*as_arrays(outcomes), recall)


def evaluate_arrays(confidences, correct, n_bins=DEFAULT_BINS):
    """
    Full evaluation report as a JSON-ready dictionary.

    Rank metrics that are undefined for these outcomes are reported as None
    with an entry in "warnings".
    """
    confidences = np.asarray(confidences, dtype=np.float64)
    correct = np.asarray(correct, dtype=bool)
    if len(confidences) == 0:
        raise UndefinedMetricError("Cannot evaluate an empty outcome list.")
    table = reliability_table_arrays(confidences, correct, n_bins)
    histogram = histogram_table_arrays(confidences, correct, n_bins)
    report = {
        "n": int(len(confidences)),
        "accuracy": float(correct.mean()),
        "meanConfidence": float(confidences.mean()),
        "bins": int(n_bins),
        "ece": ece_from_table(table),
        "brier": brier_arrays(confidences, correct),
        "warnings": [],
    }
    for name, metric in (("auroc", auroc_arrays), ("aupr", aupr_arrays),
                         ("precisionAt90Recall", precision_at_recall_arrays)):
        try:
            report[name] = metric(confidences, correct)
        except UndefinedMetricError as e:
            logger.warning("%s reported as null: %s", name, e)
            report[name] = None
            report["warnings"].append(f"{name}: {e}")
    report["reliability"] = [{
        "binLo": b.lo,
        "binHi": b.hi,
        "count": b.count,
        "conf": b.mean_confidence,
        "acc": b.accuracy,
    } for b in table]
    report["histogram"] = [{
        "binLo": b.lo,
        "binHi": b.hi,
        "nCorrect": b.n_correct,
        "nWrong": b.n_wrong,
    } for b in histogram]
    return report


def evaluate(outcomes, n_bins=DEFAULT_BINS):
    return evaluate_arrays(*as_arrays(outcomes), n_bins)
