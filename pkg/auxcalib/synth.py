"""
Seeded synthetic logits emulating an in-distribution set, a shifted set with
more errors, and confidently wrong out-of-distribution samples.
"""
import logging
from dataclasses import asdict, dataclass

import numpy as np

from auxcalib.dataset import NULL_LABEL, CalibrationDataset
from auxcalib.errors import InvalidInputError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SynthConfig:
    """
    Attributes:
        k (int): Class count.
        n_in, n_shift, n_ood (int): Sample counts of each regime.
        in_margin, shift_margin (float): Logit boost of the true class.
        ood_confidence_boost (float): Logit boost of the arbitrary class an
            OOD sample peaks at.
        seed (int): Generator seed.
    """
    k: int = 10
    n_in: int = 6000
    n_shift: int = 2000
    n_ood: int = 2000
    in_margin: float = 6.0
    shift_margin: float = 2.0
    ood_confidence_boost: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise InvalidInputError(f"Need at least 2 classes, got {self.k}.")
        if min(self.n_in, self.n_shift, self.n_ood) < 0:
            raise InvalidInputError("Sample counts must be >= 0.")
        if min(self.in_margin, self.shift_margin,
               self.ood_confidence_boost) <= 0:
            raise InvalidInputError("Margins and boost must be > 0.")
        if self.shift_margin >= self.in_margin:
            raise InvalidInputError(
                f"shift_margin ({self.shift_margin}) must be smaller than "
                f"in_margin ({self.in_margin}).")
        if self.seed < 0:
            raise InvalidInputError(f"Seed must be >= 0, got {self.seed}.")

    def to_dict(self):
        return asdict(self)


def _peaked_logits(rng, n, k, margin):
    classes = rng.integers(0, k, size=n)
    logits = rng.standard_normal((n, k))
    logits[np.arange(n), classes] += margin
    return logits, classes


def generate(cfg):
    """
    Generates a dataset: in-distribution records first, then shifted ones,
    then OOD ones (NULL label).

    Returns:
        CalibrationDataset: n_in + n_shift + n_ood records.
    """
    rng = np.random.default_rng(int(cfg.seed))
    in_logits, in_labels = _peaked_logits(rng, cfg.n_in, cfg.k, cfg.in_margin)
    shift_logits, shift_labels = _peaked_logits(rng, cfg.n_shift, cfg.k,
                                                cfg.shift_margin)
    ood_logits, _ = _peaked_logits(rng, cfg.n_ood, cfg.k,
                                   cfg.ood_confidence_boost)
    logits = np.concatenate([in_logits, shift_logits, ood_logits])
    labels = np.concatenate(
        [in_labels, shift_labels,
         np.full(cfg.n_ood, NULL_LABEL)]).astype(np.int64)
    logger.info("Generated %d in-distribution, %d shifted and %d OOD records "
                "with K=%d.", cfg.n_in, cfg.n_shift, cfg.n_ood, cfg.k)
    return CalibrationDataset(logits.reshape(-1, cfg.k), labels, k=cfg.k)
