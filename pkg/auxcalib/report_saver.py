"""
Module to write run artifacts: JSON reports and manifests, and the CSV tables
behind reliability diagrams, confidence histograms and method comparisons.

Everything is written with sorted keys and without timestamps so that a
re-run produces identical bytes.
"""
import csv
import json
import logging
import os

from auxcalib import APP_NAME, __version__
from auxcalib.model_saver import convert_to_serializable
from auxcalib.utils import generate_output_path

logger = logging.getLogger(__name__)

TABLES_DIRECTORY = "tables"
MANIFEST_FILE = "manifest.json"
REPORT_FILE = "report.json"
MODEL_FILE = "model.json"

COMPARISON_COLUMNS = ("method", "auroc", "aupr", "precisionAt90Recall", "ece",
                      "brier")


def dumps_json(data):
    return json.dumps(convert_to_serializable(data), indent=4,
                      sort_keys=True) + "\n"


def write_json(data, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as file:
        file.write(dumps_json(data))
    logger.info("Wrote %s.", path)
    return path


def read_json(path):
    with open(path, "r", encoding="utf-8") as file:
        return json.load(file)


def write_manifest(out_dir, command, config, outputs, warnings=None):
    """
    Writes manifest.json: the command, the resolved configuration (enough to
    replay the run with --config), the produced files and any warnings.
    """
    manifest = {
        "command": command,
        "config": config,
        "outputs": sorted(outputs),
        "warnings": list(warnings or []),
        "generator": {
            "name": APP_NAME,
            "version": __version__
        },
    }
    return write_json(manifest, generate_output_path(out_dir, MANIFEST_FILE))


def _write_csv(path, header, rows):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    logger.info("Wrote %s.", path)
    return path


def _cell(value):
    if value is None:
        return ""
    return repr(float(value)) if isinstance(value, float) else value


def write_reliability_csv(report, path):
    return _write_csv(path, ("bin_lo", "bin_hi", "count", "conf", "acc"),
                      [(_cell(b["binLo"]), _cell(b["binHi"]), b["count"],
                        _cell(b["conf"]), _cell(b["acc"]))
                       for b in report["reliability"]])


def write_histogram_csv(report, path):
    return _write_csv(path, ("bin_lo", "bin_hi", "n_correct", "n_wrong"),
                      [(_cell(b["binLo"]), _cell(b["binHi"]), b["nCorrect"],
                        b["nWrong"]) for b in report["histogram"]])


def write_report_tables(report, out_dir, prefix=""):
    """
    Writes tables/<prefix>reliability.csv and tables/<prefix>histogram.csv.

    Returns:
        list: Paths of the written tables.
    """
    tables_dir = os.path.join(out_dir, TABLES_DIRECTORY)
    return [
        write_reliability_csv(
            report, generate_output_path(tables_dir,
                                         f"{prefix}reliability.csv")),
        write_histogram_csv(
            report, generate_output_path(tables_dir, f"{prefix}histogram.csv")),
    ]


def write_comparison_csv(rows, path):
    """
    One line per calibration method with its five test metrics; undefined
    metrics are left empty.
    """
    return _write_csv(path, COMPARISON_COLUMNS,
                      [[row["method"]] +
                       [_cell(row[name]) for name in COMPARISON_COLUMNS[1:]]
                       for row in rows])
