"""
Seeded end-to-end experiments on synthetic logits. Run with ``pytest -m slow``.
"""
import numpy as np
import pytest

from auxcalib.calibrator_model import outcome_arrays
from auxcalib.calibrators import HyperGrid, fit_ccacs, transfer_ccacs
from auxcalib.dataset import SplitSpec, split
from auxcalib.load_config import LoadConfig
from auxcalib.metrics import auroc_arrays, ece_arrays
from auxcalib.processing import fit_calibrator
from auxcalib.run_config import RunConfig
from auxcalib.synth import SynthConfig, generate

SEEDS = range(5)


def _run_config(seed):
    config = LoadConfig()
    config["seed"] = seed
    return RunConfig.from_load_config(config)


def _test_metrics(model, test):
    confidences, correct = outcome_arrays(model, test)
    return ece_arrays(confidences, correct), auroc_arrays(
        confidences, correct)


@pytest.mark.slow
@pytest.mark.parametrize("seed", SEEDS)
def test_ccac_calibrates_confident_ood_samples(seed):
    run_cfg = _run_config(seed)
    ds = generate(SynthConfig(seed=seed))
    train, val, test = split(ds, run_cfg.split_spec())
    results = {
        kind: _test_metrics(fit_calibrator(kind, train, val, run_cfg), test)
        for kind in ("mp", "ts", "ccac")
    }
    ece = {kind: value[0] for kind, value in results.items()}
    assert ece["ccac"] < ece["ts"] < ece["mp"]
    assert ece["ccac"] < 0.05
    assert results["ccac"][1] >= results["mp"][1]


def _transfer_gap(seed):
    source = generate(SynthConfig(seed=seed))
    target = generate(
        SynthConfig(in_margin=4.0,
                    shift_margin=1.0,
                    ood_confidence_boost=8.0,
                    seed=seed + 100))
    spec = SplitSpec(0.6, 0.2, 0.2, seed=seed)
    source_train, source_val, _ = split(source, spec)
    target_train, target_val, target_test = split(target, spec)
    run_cfg = _run_config(seed)
    grid = HyperGrid.single(1.0, 1.0)
    pretrained = fit_ccacs(source_train, source_val, grid,
                           train_cfg=run_cfg.train_config("ccac-s"))
    order = np.random.default_rng(seed).permutation(len(target_train))
    transferred = transfer_ccacs(pretrained, target_train.subset(order[:320]),
                                 target_train.subset(order[320:520]),
                                 run_cfg.transfer_train_config())
    assert transferred.selection["trainableParameters"] == target.k + 2
    before = pretrained.aux_net.parameters()
    after = transferred.aux_net.parameters()
    for p, q in zip(before[:-2], after[:-2]):
        np.testing.assert_array_equal(p, q)
    scratch = fit_ccacs(target_train, target_val, grid,
                        train_cfg=run_cfg.train_config("ccac-s"))
    return abs(
        _test_metrics(transferred, target_test)[0] -
        _test_metrics(scratch, target_test)[0])


@pytest.mark.slow
def test_transfer_approaches_a_model_fitted_from_scratch():
    gaps = [_transfer_gap(seed) for seed in SEEDS]
    assert sum(gap <= 0.03 for gap in gaps) >= 4, gaps


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(3))
def test_transfer_improves_on_the_pretrained_model(seed):
    source = generate(SynthConfig(n_shift=0, n_ood=0, seed=seed))
    target = generate(
        SynthConfig(in_margin=4.0,
                    shift_margin=1.0,
                    ood_confidence_boost=8.0,
                    seed=seed + 100))
    spec = SplitSpec(0.6, 0.2, 0.2, seed=seed)
    source_train, source_val, _ = split(source, spec)
    target_train, _, target_test = split(target, spec)
    run_cfg = _run_config(seed)
    pretrained = fit_ccacs(source_train,
                           source_val,
                           HyperGrid.single(1.0, 1.0),
                           train_cfg=run_cfg.train_config("ccac-s"))
    order = np.random.default_rng(seed).permutation(len(target_train))
    transferred = transfer_ccacs(pretrained, target_train.subset(order[:320]),
                                 target_train.subset(order[320:520]),
                                 run_cfg.transfer_train_config())
    before = _test_metrics(pretrained, target_test)[0]
    after = _test_metrics(transferred, target_test)[0]
    assert after < before, (before, after)
