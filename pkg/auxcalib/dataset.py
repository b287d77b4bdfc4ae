"""
Module defining the logit datasets handled by the calibrators: records, the
target classifier's predictions, the auxiliary-class relabeling and the
train/validation/test splits.
"""
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import softmax as _softmax

from auxcalib.errors import InvalidInputError

# Label of samples that belong to none of the K classes (file encoding -1).
NULL_LABEL = -1


@dataclass(frozen=True)
class LogitRecord:
    """
    One sample: the target classifier's logit vector and its ground truth.

    Attributes:
        logits (tuple): K finite logits.
        label (int or None): Class index in [0, K) or None for NULL.
    """
    logits: Tuple[float, ...]
    label: Optional[int]


@dataclass(frozen=True)
class AuxLabeledRecord:
    """
    A logit vector with its (K+1)-class label. Index K is the auxiliary
    "misclassified" class.
    """
    logits: Tuple[float, ...]
    aux_label: int
    one_hot: Tuple[int, ...]


@dataclass(frozen=True)
class SplitSpec:
    """
    Fractions of a train/validation/test split and the shuffle seed.
    """
    train_fraction: float
    val_fraction: float
    test_fraction: float
    seed: int = 0

    def __post_init__(self):
        fractions = (self.train_fraction, self.val_fraction,
                     self.test_fraction)
        if any(not 0.0 <= f <= 1.0 for f in fractions):
            raise InvalidInputError(
                f"Split fractions must lie in [0, 1], got {fractions}.")
        if abs(sum(fractions) - 1.0) > 1e-9:
            raise InvalidInputError(
                f"Split fractions must sum to 1, got {sum(fractions)}.")
        if int(self.seed) < 0:
            raise InvalidInputError(
                f"Split seed must be unsigned, got {self.seed}.")


class CalibrationDataset:
    """
    An ordered collection of logit records sharing the class count K.

    Data is held column-wise: a read-only (N, K) float array of logits and a
    read-only (N,) integer array of labels where NULL is stored as -1.

    Attributes:
        k (int): Number of classes of the target classifier.
        logits (np.ndarray): (N, K) logits.
        labels (np.ndarray): (N,) labels, -1 for NULL.
    """

    def __init__(self, logits, labels, k=None):
        logits = np.array(logits, dtype=np.float64)
        labels = np.array(labels, dtype=np.int64).reshape(-1)
        if logits.size == 0:
            if k is None:
                raise InvalidInputError(
                    "The class count is required for an empty dataset.")
            logits = logits.reshape(0, int(k))
        if logits.ndim != 2:
            raise InvalidInputError(
                f"Logits must be a 2-D array, got shape {logits.shape}.")
        if k is not None and logits.shape[1] != int(k):
            raise InvalidInputError(
                f"Expected {k} logits per record, got {logits.shape[1]}.")
        if logits.shape[1] < 2:
            raise InvalidInputError(
                f"A dataset needs at least 2 classes, got {logits.shape[1]}.")
        if labels.shape[0] != logits.shape[0]:
            raise InvalidInputError(
                f"{logits.shape[0]} logit rows but {labels.shape[0]} labels.")
        if not np.all(np.isfinite(logits)):
            raise InvalidInputError("Logits must all be finite.")
        if np.any((labels < NULL_LABEL) | (labels >= logits.shape[1])):
            raise InvalidInputError(
                f"Labels must be -1 (NULL) or in [0, {logits.shape[1]}).")
        logits.setflags(write=False)
        labels.setflags(write=False)
        self.logits = logits
        self.labels = labels
        self.k = logits.shape[1]

    @staticmethod
    def from_records(records, k=None):
        """
        Builds a dataset from LogitRecord objects.

        Args:
            records (list): LogitRecord objects.
            k (int or None): Class count, required when records is empty.

        Returns:
            CalibrationDataset: The dataset.
        """
        records = list(records)
        if not records:
            return CalibrationDataset(np.zeros((0, k or 0)), [], k=k)
        lengths = {len(r.logits) for r in records}
        if len(lengths) != 1:
            raise InvalidInputError(
                f"Records have different logit lengths: {sorted(lengths)}.")
        labels = [NULL_LABEL if r.label is None else r.label for r in records]
        return CalibrationDataset([r.logits for r in records], labels, k=k)

    @property
    def records(self) -> List[LogitRecord]:
        return [
            LogitRecord(tuple(float(v) for v in row),
                        None if label == NULL_LABEL else int(label))
            for row, label in zip(self.logits, self.labels)
        ]

    @property
    def null_mask(self):
        return self.labels == NULL_LABEL

    def subset(self, indices):
        """Returns a new dataset with the records at the given indices."""
        indices = np.asarray(indices, dtype=np.int64)
        return CalibrationDataset(self.logits[indices],
                                  self.labels[indices],
                                  k=self.k)

    def __len__(self):
        return self.logits.shape[0]

    def __eq__(self, other):
        if not isinstance(other, CalibrationDataset):
            return NotImplemented
        return (self.k == other.k and np.array_equal(self.logits, other.logits)
                and np.array_equal(self.labels, other.labels))

    def __repr__(self):
        return (f"CalibrationDataset(k={self.k}, n={len(self)}, "
                f"null={int(self.null_mask.sum())})")


def _check_finite(z):
    z = np.asarray(z, dtype=np.float64)
    if z.size == 0:
        raise InvalidInputError("Logit vector must not be empty.")
    if not np.all(np.isfinite(z)):
        raise InvalidInputError(f"Logits must be finite, got {z}.")
    return z


def softmax(z):
    """
    Softmax over the last axis, with max-subtraction for overflow safety.

    Args:
        z (array-like): Logit vector, or (N, K) batch of logit vectors.

    Returns:
        np.ndarray: Probabilities of the same shape.
    """
    return _softmax(_check_finite(z), axis=-1)


def predict(z):
    """
    The target classifier's prediction for one logit vector.

    Ties are broken toward the lowest class index.

    Returns:
        tuple: (predicted label, max softmax probability).
    """
    p = softmax(z)
    if p.ndim != 1:
        raise InvalidInputError("predict expects a single logit vector.")
    label = int(np.argmax(p))
    return label, float(p[label])


def predict_batch(logits):
    """
    Vectorized predict over an (N, K) logit array.

    Returns:
        tuple: (labels (N,), max softmax probabilities (N,)).
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.shape[0] == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    p = softmax(logits)
    labels = np.argmax(p, axis=1)
    return labels, p[np.arange(p.shape[0]), labels]


def correctness(ds):
    """
    Whether the target classifier is right on each record. NULL is always wrong.
    """
    predicted, _ = predict_batch(ds.logits)
    return (ds.labels != NULL_LABEL) & (predicted == ds.labels)


def aux_labels(ds):
    """
    Vectorized relabeling: the true class for correct predictions, K otherwise.
    """
    return np.where(correctness(ds), ds.labels, ds.k).astype(np.int64)


def aux_one_hot(ds):
    """
    (N, K+1) one-hot encoding of aux_labels(ds).
    """
    labels = aux_labels(ds)
    one_hot = np.zeros((len(ds), ds.k + 1))
    one_hot[np.arange(len(ds)), labels] = 1.0
    return one_hot


def assign_aux_labels(ds) -> List[AuxLabeledRecord]:
    """
    Relabels a dataset for training with the auxiliary class.

    A record keeps its class when the target classifier predicts it correctly,
    otherwise (wrong prediction or NULL label) it moves to class K.

    Args:
        ds (CalibrationDataset): Dataset to relabel.

    Returns:
        list: One AuxLabeledRecord per record, in order.
    """
    labels = aux_labels(ds)
    records = []
    for row, label in zip(ds.logits, labels):
        one_hot = [0] * (ds.k + 1)
        one_hot[int(label)] = 1
        records.append(
            AuxLabeledRecord(tuple(float(v) for v in row), int(label),
                             tuple(one_hot)))
    return records


def split(ds, spec):
    """
    Shuffles a dataset under the spec's seed and cuts it into train, val, test.

    The validation and test sizes are floor-rounded and the remainder goes to
    train.

    Args:
        ds (CalibrationDataset): Dataset to split.
        spec (SplitSpec): Fractions and seed.

    Returns:
        tuple: (train, val, test) datasets.
    """
    n = len(ds)
    if n == 0:
        raise InvalidInputError("Cannot split an empty dataset.")
    rng = np.random.default_rng(int(spec.seed))
    order = rng.permutation(n)
    # Tolerance keeps products like 0.2 * 10 from flooring to 1.
    n_val = int(np.floor(n * spec.val_fraction + 1e-9))
    n_test = int(np.floor(n * spec.test_fraction + 1e-9))
    n_train = n - n_val - n_test
    train = ds.subset(order[:n_train])
    val = ds.subset(order[n_train:n_train + n_val])
    test = ds.subset(order[n_train + n_val:])
    return train, val, test
