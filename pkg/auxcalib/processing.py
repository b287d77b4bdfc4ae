"""
Functions running each command end to end: synthesize a dataset, fit a
calibrator, evaluate one, transfer a CCAC-S model, compare every method.

Each command writes its artifacts under the output directory, then a
manifest.json that records the resolved configuration, so passing the
manifest back as --config replays the run.
"""
import logging
import os
import time

import numpy as np

from auxcalib.baselines import (DIRICHLET_TRAIN_CONFIG, fit_dirichlet,
                                fit_scaling_binning, fit_temperature)
from auxcalib.calibrator_model import (MaxProbabilityModel, outcome_arrays,
                                       validation_ece)
from auxcalib.calibrators import (CcacSModel, CcacTModel, fit_ccac, fit_ccacs,
                                  transfer_ccacs)
from auxcalib.dataset import split
from auxcalib.dataset_saver import load_dataset, write_dataset
from auxcalib.default_scheme_config import KINDS
from auxcalib.errors import FitError, InvalidModelError
from auxcalib.metrics import evaluate_arrays
from auxcalib.model_saver import load_model, save_model
from auxcalib.report_saver import (MODEL_FILE, REPORT_FILE, TABLES_DIRECTORY,
                                   read_json, write_comparison_csv, write_json,
                                   write_manifest, write_report_tables)
from auxcalib.synth import generate
from auxcalib.utils import generate_output_path

logger = logging.getLogger(__name__)

COMPARISON_FILE = "comparison.json"


def _relative(paths, out_dir):
    return [
        os.path.relpath(path, out_dir).replace(os.sep, "/") for path in paths
    ]


def _finish(run_cfg, command, outputs, warnings, start_time):
    """
    Writes the manifest, then re-reads every JSON artifact so that a command
    only succeeds once its outputs are readable.
    """
    manifest = write_manifest(run_cfg.out, command, run_cfg.to_dict(),
                              _relative(outputs, run_cfg.out),
                              run_cfg.warnings + list(warnings))
    for path in outputs + [manifest]:
        if os.path.basename(path) == MODEL_FILE:
            load_model(path)
        elif path.endswith(".json"):
            read_json(path)
        elif not os.path.isfile(path):
            raise FileNotFoundError(f"Output {path} was not written.")
    elapsed_time = time.time() - start_time
    logger.info("Elapsed time for %s: %.2f seconds", command, elapsed_time)
    return outputs + [manifest]


def _load_splits(run_cfg):
    ds = load_dataset(run_cfg.dataset, run_cfg.format)
    train, val, test = split(ds, run_cfg.split_spec())
    logger.info("Split %d records into %d train, %d val, %d test.", len(ds),
                len(train), len(val), len(test))
    return ds, train, val, test


def fit_calibrator(kind, train, val, run_cfg):
    """
    Fits one calibrator kind on train, selecting its hyperparameters on val.

    Returns:
        CalibratorModel: The fitted model.
    """
    logger.info("Fitting %s on %d samples...", kind, len(train))
    if kind == "mp":
        model = MaxProbabilityModel(train.k)
    elif kind == "ts":
        model = fit_temperature(train)
    elif kind == "sb":
        model = fit_scaling_binning(train, run_cfg.sb_bins)
    elif kind == "dirichlet":
        model = fit_dirichlet(
            train, val, run_cfg.rho_values,
            DIRICHLET_TRAIN_CONFIG.with_seed(
                run_cfg.derived_seed("dirichlet")), run_cfg.bins)
    elif kind == "ccac":
        model = fit_ccac(train, val, run_cfg.hyper_grid(),
                         run_cfg.hidden_layers, run_cfg.train_config("ccac"),
                         run_cfg.rules, run_cfg.bins)
    elif kind == "ccac-s":
        model = fit_ccacs(train,
                          val,
                          run_cfg.hyper_grid(),
                          run_cfg.aux_hidden_layers,
                          run_cfg.train_config("ccac-s"),
                          run_cfg.rules,
                          n_bins=run_cfg.bins)
    else:
        raise InvalidModelError(f"Unknown calibrator kind '{kind}'.")
    if "validationEce" not in model.selection and len(val):
        model.selection["validationEce"] = validation_ece(
            model, val, run_cfg.bins)
    return model


def cmd_synth(run_cfg):
    """
    Generates a synthetic dataset into the output directory.

    Returns:
        list: Written paths.
    """
    start_time = time.time()
    synth_cfg = run_cfg.synth_config()
    ds = generate(synth_cfg)
    path = generate_output_path(run_cfg.out,
                                f"dataset.{run_cfg.format or 'csv'}")
    write_dataset(ds, path, run_cfg.format)
    return _finish(run_cfg, "synth", [path], [], start_time)


def cmd_fit(run_cfg):
    """
    Fits the configured calibrator and writes model.json plus a selection
    report.
    """
    start_time = time.time()
    _, train, val, test = _load_splits(run_cfg)
    model = fit_calibrator(run_cfg.kind, train, val, run_cfg)
    model_path = generate_output_path(run_cfg.out, MODEL_FILE)
    save_model(model, model_path)
    report = {
        "command": "fit",
        "kind": model.kind,
        "k": model.k,
        "splitSizes": {
            "train": len(train),
            "val": len(val),
            "test": len(test)
        },
        "selection": model.selection,
        "validationEce": model.selection.get("validationEce"),
    }
    report_path = write_json(report,
                             generate_output_path(run_cfg.out, REPORT_FILE))
    return _finish(run_cfg, "fit", [model_path, report_path], [], start_time)


def select_eval_split(ds, run_cfg):
    if run_cfg.eval_split == "all":
        return ds
    train, val, test = split(ds, run_cfg.split_spec())
    return {"train": train, "val": val, "test": test}[run_cfg.eval_split]


def evaluation_report(model, ds, n_bins):
    """Metrics report of a model on a dataset."""
    confidences, correct = outcome_arrays(model, ds)
    report = evaluate_arrays(confidences, correct, n_bins)
    report["kind"] = model.kind
    report["k"] = model.k
    return report


def cmd_eval(run_cfg):
    """
    Evaluates a model file on a dataset file and writes report.json with the
    reliability and histogram tables.
    """
    start_time = time.time()
    model = load_model(run_cfg.model)
    ds = load_dataset(run_cfg.dataset, run_cfg.format)
    if ds.k != model.k:
        raise InvalidModelError(
            f"Model was fitted for K={model.k} but the dataset has K={ds.k}.")
    ds = select_eval_split(ds, run_cfg)
    logger.info("Evaluating %s on %d records (%s split)...", model.kind,
                len(ds), run_cfg.eval_split)
    report = evaluation_report(model, ds, run_cfg.bins)
    report["split"] = run_cfg.eval_split
    report_path = write_json(report,
                             generate_output_path(run_cfg.out, REPORT_FILE))
    tables = write_report_tables(report, run_cfg.out)
    return _finish(run_cfg, "eval", [report_path] + tables,
                   report["warnings"], start_time)


def transfer_sizes(n, train_cap, val_cap):
    """
    Sizes of the transfer train and validation sets drawn from n records.

    When n cannot cover both caps, every record is used and split in the
    caps' proportion.

    Returns:
        tuple: (n_train, n_val, clamped).
    """
    if n >= train_cap + val_cap:
        return train_cap, val_cap, False
    n_train = min(train_cap, int(round(n * train_cap / (train_cap + val_cap))))
    n_train = max(1, min(n_train, n - 1))
    return n_train, n - n_train, True


def cmd_transfer(run_cfg):
    """
    Transfers a CCAC-S model to the dataset file and writes the CCAC-T model.
    """
    start_time = time.time()
    pretrained = load_model(run_cfg.model)
    if pretrained.kind != CcacSModel.kind:
        raise InvalidModelError(
            f"transfer requires a CCAC-S model, got {pretrained.kind}.")
    ds = load_dataset(run_cfg.dataset, run_cfg.format)
    if len(ds) < 2:
        raise FitError("Transfer needs at least 2 records.")
    warnings = []
    n_train, n_val, clamped = transfer_sizes(len(ds),
                                             run_cfg.transfer_train_samples,
                                             run_cfg.transfer_val_samples)
    if clamped:
        message = (f"Dataset has {len(ds)} records, fewer than the "
                   f"{run_cfg.transfer_train_samples} + "
                   f"{run_cfg.transfer_val_samples} requested; using "
                   f"{n_train} train and {n_val} val records.")
        logger.warning(message)
        warnings.append(message)
    order = np.random.default_rng(
        run_cfg.derived_seed("transfer/sample")).permutation(len(ds))
    small_train = ds.subset(order[:n_train])
    small_val = ds.subset(order[n_train:n_train + n_val])
    model = transfer_ccacs(pretrained,
                           small_train,
                           small_val,
                           run_cfg.transfer_train_config(),
                           run_cfg.rules,
                           n_bins=run_cfg.bins)
    model_path = generate_output_path(run_cfg.out, MODEL_FILE)
    save_model(model, model_path)
    report = {
        "command": "transfer",
        "kind": model.kind,
        "k": model.k,
        "selection": model.selection,
        "validationEce": model.selection["validationEce"],
        "warnings": warnings,
    }
    report_path = write_json(report,
                             generate_output_path(run_cfg.out, REPORT_FILE))
    return _finish(run_cfg, "transfer", [model_path, report_path], warnings,
                   start_time)


def _transfer_for_comparison(run_cfg, train, val, warnings):
    """
    Transfers the --model CCAC-S file with at most the transfer caps of the
    train and val splits.
    """
    pretrained = load_model(run_cfg.model)
    if pretrained.kind != CcacSModel.kind:
        raise InvalidModelError(
            f"compare transfers a CCAC-S model, got {pretrained.kind}.")
    if pretrained.k != train.k:
        raise InvalidModelError(
            f"Model was fitted for K={pretrained.k} but the dataset has "
            f"K={train.k}.")
    n_train = min(run_cfg.transfer_train_samples, len(train))
    n_val = min(run_cfg.transfer_val_samples, len(val))
    if (n_train, n_val) != (run_cfg.transfer_train_samples,
                            run_cfg.transfer_val_samples):
        message = (f"ccac-t: transferring on {n_train} train and {n_val} val "
                   f"records instead of {run_cfg.transfer_train_samples} + "
                   f"{run_cfg.transfer_val_samples}.")
        logger.warning(message)
        warnings.append(message)
    # The splits are already shuffled, so their heads are random samples.
    return transfer_ccacs(pretrained,
                          train.subset(range(n_train)),
                          val.subset(range(n_val)),
                          run_cfg.transfer_train_config(),
                          run_cfg.rules,
                          n_bins=run_cfg.bins)


def cmd_compare(run_cfg, kinds=KINDS):
    """
    Fits every calibrator kind on the train split, evaluates each on the
    test split, and writes a comparison table.

    With --model naming a CCAC-S file, that model is also transferred to the
    dataset and evaluated as the ccac-t row.
    """
    start_time = time.time()
    _, train, val, test = _load_splits(run_cfg)
    if len(test) == 0:
        raise FitError("compare needs a non-empty test split.")
    warnings, rows, reports, outputs = [], [], {}, []
    tables_dir = os.path.join(run_cfg.out, TABLES_DIRECTORY)
    if run_cfg.model:
        kinds = list(kinds) + [CcacTModel.kind]
    for kind in kinds:
        try:
            if kind == CcacTModel.kind:
                model = _transfer_for_comparison(run_cfg, train, val,
                                                 warnings)
            else:
                model = fit_calibrator(kind, train, val, run_cfg)
        except FitError as e:
            message = f"{kind} skipped: {e}"
            logger.warning(message)
            warnings.append(message)
            continue
        report = evaluation_report(model, test, run_cfg.bins)
        report["selection"] = model.selection
        reports[kind] = report
        warnings.extend(f"{kind}: {w}" for w in report["warnings"])
        rows.append({
            "method": kind,
            "auroc": report["auroc"],
            "aupr": report["aupr"],
            "precisionAt90Recall": report["precisionAt90Recall"],
            "ece": report["ece"],
            "brier": report["brier"],
        })
        outputs.extend(write_report_tables(report, run_cfg.out, f"{kind}_"))
    comparison = {
        "command": "compare",
        "splitSizes": {
            "train": len(train),
            "val": len(val),
            "test": len(test)
        },
        "rows": rows,
        "methods": reports,
        "warnings": warnings,
    }
    outputs.append(
        write_json(comparison, generate_output_path(run_cfg.out,
                                                    COMPARISON_FILE)))
    outputs.append(
        write_comparison_csv(
            rows, generate_output_path(tables_dir, "comparison.csv")))
    return _finish(run_cfg, "compare", outputs, warnings, start_time)


COMMANDS = {
    "synth": cmd_synth,
    "fit": cmd_fit,
    "eval": cmd_eval,
    "transfer": cmd_transfer,
    "compare": cmd_compare,
}
