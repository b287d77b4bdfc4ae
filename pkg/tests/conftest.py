import numpy as np
import pytest

from auxcalib.dataset import CalibrationDataset
from auxcalib.feed_forward_net import TrainConfig
from auxcalib.synth import SynthConfig, generate


@pytest.fixture
def tiny_dataset():
    # Predictions: 0 (right), 1 (right), 0 (wrong, label 1), 1 (NULL).
    logits = [[2.0, 0.0], [0.0, 3.0], [1.0, -1.0], [-2.0, 2.0]]
    return CalibrationDataset(logits, [0, 1, 1, -1])


@pytest.fixture
def small_synth():
    return generate(
        SynthConfig(k=4,
                    n_in=300,
                    n_shift=100,
                    n_ood=100,
                    in_margin=4.0,
                    shift_margin=1.5,
                    ood_confidence_boost=8.0,
                    seed=3))


@pytest.fixture
def fast_train_cfg():
    return TrainConfig(epochs=15, batch_size=64, learning_rate=0.01, seed=1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
