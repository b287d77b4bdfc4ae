import math

import numpy as np
import pytest
from scipy.special import softmax

from auxcalib.baselines import (DIRICHLET_TRAIN_CONFIG, DirichletModel,
                                ScalingBinningModel, TemperatureModel,
                                _clamped_log_probs, _fit_dirichlet_rho,
                                dirichlet_probs, fit_dirichlet,
                                fit_histogram_bins, fit_scaling_binning,
                                fit_temperature, golden_section_search,
                                off_diagonal_norm, sb_confidence,
                                temperature_nll, ts_confidence)
from auxcalib.calibrator_model import MaxProbabilityModel
from auxcalib.dataset import CalibrationDataset
from auxcalib.errors import FitError, InvalidModelError
from auxcalib.feed_forward_net import TrainConfig


def _sample_labels(rng, probs):
    cumulative = np.cumsum(probs, axis=1)
    draws = rng.uniform(size=(len(probs), 1))
    return np.minimum((draws > cumulative).sum(axis=1), probs.shape[1] - 1)


def _planted_temperature(rng, n=8000, k=5, temperature=2.0):
    calibrated = rng.normal(scale=1.5, size=(n, k))
    labels = _sample_labels(rng, softmax(calibrated, axis=1))
    return CalibrationDataset(calibrated * temperature, labels)


def _logit_of(confidence):
    return [math.log(confidence / (1 - confidence)), 0.0]


def test_golden_section_search_finds_minimum():
    argmin, value = golden_section_search(lambda x: (x - 3.0)**2 + 1.0, 0.0,
                                          10.0, tol=1e-6)
    assert argmin == pytest.approx(3.0, abs=1e-5)
    assert value == pytest.approx(1.0, abs=1e-9)


def test_fit_temperature_recovers_planted_temperature(rng):
    model = fit_temperature(_planted_temperature(rng))
    assert model.temperature == pytest.approx(2.0, abs=0.1)
    assert "trainNll" in model.selection


def test_fit_temperature_beats_a_dense_grid(rng):
    ds = _planted_temperature(rng, n=2000, k=4, temperature=3.0)
    model = fit_temperature(ds)
    grid = np.geomspace(0.05, 50.0, 200)
    best_on_grid = min(temperature_nll(ds.logits, ds.labels, t) for t in grid)
    assert temperature_nll(ds.logits, ds.labels,
                           model.temperature) <= best_on_grid + 1e-6


def test_fit_temperature_ignores_null_samples(rng):
    ds = _planted_temperature(rng, n=500, k=3)
    with_null = CalibrationDataset(
        np.concatenate([ds.logits, rng.normal(size=(50, 3)) * 10]),
        np.concatenate([ds.labels, np.full(50, -1)]))
    assert fit_temperature(with_null).temperature == pytest.approx(
        fit_temperature(ds).temperature, abs=1e-12)


def test_fit_temperature_all_null_fails():
    ds = CalibrationDataset([[1.0, 0.0], [0.0, 2.0]], [-1, -1])
    with pytest.raises(FitError):
        fit_temperature(ds)


def test_ts_confidence_examples(rng):
    model = TemperatureModel(2, 2.0)
    assert ts_confidence(model, [2.0, 0.0]) == pytest.approx(
        math.e / (math.e + 1), abs=1e-12)
    logits = rng.normal(size=(10, 4))
    np.testing.assert_allclose(
        TemperatureModel(4, 1.0).confidences(logits),
        MaxProbabilityModel(4).confidences(logits),
        atol=1e-15)
    assert ts_confidence(TemperatureModel(4, 1e9),
                         [5.0, 1.0, 0.0, -3.0]) == pytest.approx(0.25,
                                                                  abs=1e-6)


def test_temperature_must_be_positive():
    with pytest.raises(InvalidModelError):
        TemperatureModel(3, 0.0)


def test_fit_histogram_bins_quantile_example():
    edges, values = fit_histogram_bins([0.9, 0.6, 0.8, 0.7], 2)
    np.testing.assert_allclose(values, [0.65, 0.85])
    np.testing.assert_allclose(edges, [0.0, 0.75, 1.0])


def test_fit_histogram_bins_degenerate():
    with pytest.raises(FitError):
        fit_histogram_bins([0.6, 0.6, 0.7], 3)
    with pytest.raises(FitError):
        fit_histogram_bins([0.6, 0.7], 0)


def test_fit_histogram_bins_keeps_ties_in_one_bin():
    edges, values = fit_histogram_bins([0.4, 0.5, 0.5, 0.5, 0.5, 0.5, 0.6],
                                       3)
    np.testing.assert_allclose(values, [0.4, 0.5, 0.6])
    np.testing.assert_allclose(edges, [0.0, 0.45, 0.55, 1.0])

    edges, values = fit_histogram_bins([0.5] * 6 + [0.7, 0.8, 0.9, 0.95], 2)
    np.testing.assert_allclose(values, [0.5, 0.8375])
    np.testing.assert_allclose(edges, [0.0, 0.6, 1.0])


def test_fit_histogram_bins_heavy_ties_random(rng):
    for _ in range(200):
        confidences = rng.choice([0.3, 0.55, 0.7, 0.9, 0.99, 1.0],
                                 size=int(rng.integers(1, 60)))
        distinct = np.unique(confidences)
        bins = int(rng.integers(1, len(distinct) + 1))
        edges, values = fit_histogram_bins(confidences, bins)
        assert len(values) == bins
        assert np.all(np.diff(edges) > 0)
        # Every distinct value falls strictly inside one bin.
        index = np.searchsorted(edges[1:-1], distinct, side="right")
        assert len(np.unique(index)) == bins


def test_scaling_binning_with_saturated_confidences():
    confidences = [0.6] * 5 + [0.8] * 5 + [0.95] * 10
    ds = CalibrationDataset([_logit_of(c) for c in confidences], [0] * 20)
    model = fit_scaling_binning(ds, bins=3, temperature=1.0)
    np.testing.assert_allclose(model.bin_values, [0.6, 0.8, 0.95])


def test_scaling_binning_quantile_example():
    ds = CalibrationDataset([_logit_of(c) for c in (0.6, 0.7, 0.8, 0.9)],
                            [0, 0, 1, 0])
    model = fit_scaling_binning(ds, bins=2, temperature=1.0)
    np.testing.assert_allclose(model.bin_values, [0.65, 0.85])
    assert sb_confidence(model, _logit_of(0.62)) == pytest.approx(0.65)
    assert sb_confidence(model, _logit_of(0.88)) == pytest.approx(0.85)
    # Below the lowest chunk: still the first bin.
    assert sb_confidence(model, [0.0, 0.0]) == pytest.approx(0.65)


def test_scaling_binning_single_bin_is_global_mean(small_synth):
    model = fit_scaling_binning(small_synth, bins=1, temperature=1.5)
    expected = TemperatureModel(small_synth.k,
                                1.5).confidences(small_synth.logits).mean()
    confidences = model.confidences(small_synth.logits)
    np.testing.assert_allclose(confidences, expected)


def test_scaling_binning_fits_temperature_on_first_half(small_synth):
    model = fit_scaling_binning(small_synth, bins=10)
    half = small_synth.subset(range(len(small_synth) // 2))
    assert model.temperature == fit_temperature(half).temperature
    assert len(model.bin_values) == 10
    assert model.selection == {"bins": 10}


def test_scaling_binning_model_rejects_bad_edges():
    with pytest.raises(InvalidModelError):
        ScalingBinningModel(2, 1.0, [0.0, 0.5, 0.5, 1.0], [0.1, 0.2, 0.3])
    with pytest.raises(InvalidModelError):
        ScalingBinningModel(2, 1.0, [0.0, 1.0], [0.1, 0.2])


def test_dirichlet_identity_is_softmax(rng):
    z = rng.normal(scale=2.0, size=4)
    np.testing.assert_allclose(dirichlet_probs(DirichletModel.identity(4), z),
                               softmax(z), atol=1e-12)


def test_dirichlet_recovers_planted_diagonal_scaling():
    rng = np.random.default_rng(21)
    logits = rng.normal(size=(6000, 4))
    labels = _sample_labels(rng, softmax(2.0 * logits, axis=1))
    ds = CalibrationDataset(logits, labels)
    train, val = ds.subset(range(5000)), ds.subset(range(5000, 6000))
    model = fit_dirichlet(train, val, rho_grid=(0.01, ))
    np.testing.assert_allclose(np.diag(model.weights), 2.0, atol=0.2)
    assert model.selection["rho"] == 0.01


def test_dirichlet_off_diagonal_norm_shrinks_with_rho():
    rng = np.random.default_rng(5)
    logits = rng.normal(scale=2.0, size=(1500, 3))
    shifted = (np.argmax(logits, axis=1) + 1) % 3
    labels = np.where(rng.uniform(size=1500) < 0.8, shifted,
                      rng.integers(0, 3, size=1500))
    log_probs = _clamped_log_probs(logits)
    cfg = TrainConfig(epochs=100, batch_size=256, learning_rate=0.05, seed=0)
    norms = [
        off_diagonal_norm(
            _fit_dirichlet_rho(log_probs, labels, rho, cfg)[0][0])
        for rho in (0.0, 0.1, 10.0)
    ]
    assert norms[0] > norms[1] > norms[2]


def test_fit_dirichlet_selection_and_errors(small_synth):
    train, val = small_synth.subset(range(300)), small_synth.subset(
        range(300, 500))
    cfg = TrainConfig(epochs=5, batch_size=128, learning_rate=0.01, seed=0)
    model = fit_dirichlet(train, val, rho_grid=(0.0, 1.0), train_cfg=cfg)
    eces = [c["validationEce"] for c in model.selection["candidates"]]
    assert model.selection["validationEce"] == min(eces)
    assert model.rho == [0.0, 1.0][eces.index(min(eces))]
    with pytest.raises(FitError):
        fit_dirichlet(train, val, rho_grid=())
    with pytest.raises(FitError):
        fit_dirichlet(train, val.subset([]), train_cfg=cfg)
    other = CalibrationDataset(np.zeros((3, 3)), [0, 1, 2])
    with pytest.raises(FitError):
        fit_dirichlet(train, other, train_cfg=cfg)


def test_fit_dirichlet_is_deterministic(small_synth):
    train, val = small_synth.subset(range(300)), small_synth.subset(
        range(300, 500))
    cfg = DIRICHLET_TRAIN_CONFIG.with_seed(3)
    a = fit_dirichlet(train, val, rho_grid=(0.01, ), train_cfg=cfg)
    b = fit_dirichlet(train, val, rho_grid=(0.01, ), train_cfg=cfg)
    np.testing.assert_array_equal(a.weights, b.weights)
    np.testing.assert_array_equal(a.bias, b.bias)


def test_dirichlet_model_shape_check():
    with pytest.raises(InvalidModelError):
        DirichletModel(3, np.eye(2), np.zeros(3))
