"""
Module to enable the save and load of logit datasets as CSV or JSONL files.

CSV: header ``logit_0,...,logit_{K-1},label``, label -1 for NULL.
JSONL: an optional ``{"k": K}`` header line, then one ``{"logits": [...],
"label": int or null}`` object per line.
"""
import csv
import json
import logging
import math
import os

import numpy as np

from auxcalib.dataset import NULL_LABEL, CalibrationDataset
from auxcalib.errors import DatasetParseError, InvalidInputError

logger = logging.getLogger(__name__)

FORMATS = ("csv", "jsonl")


def infer_format(path, fmt=None):
    """
    Returns the dataset format, from the explicit argument or the file extension.
    """
    if fmt:
        fmt = fmt.lower()
    else:
        fmt = os.path.splitext(path)[1].lstrip(".").lower()
    if fmt not in FORMATS:
        raise InvalidInputError(
            f"Unsupported dataset format '{fmt}' for {path}; use csv or jsonl.")
    return fmt


def _format_float(value):
    # repr is the shortest string that round-trips the double exactly.
    return repr(float(value))


def _parse_logit(text, line_number, path):
    try:
        value = float(text)
    except (ValueError, OverflowError) as e:
        raise DatasetParseError(f"invalid logit '{text}'", line_number,
                                path) from e
    if not math.isfinite(value):
        raise DatasetParseError(f"non-finite logit '{text}'", line_number,
                                path)
    return value


def _parse_label(raw, k, line_number, path):
    if raw is None:
        return NULL_LABEL
    if isinstance(raw, bool):
        raise DatasetParseError(f"invalid label '{raw}'", line_number, path)
    if isinstance(raw, str):
        try:
            raw = int(raw.strip())
        except ValueError as e:
            raise DatasetParseError(f"non-integer label '{raw}'", line_number,
                                    path) from e
    if not isinstance(raw, int):
        raise DatasetParseError(f"non-integer label '{raw}'", line_number,
                                path)
    if raw < NULL_LABEL or raw >= k:
        raise DatasetParseError(
            f"label {raw} out of range [-1, {k - 1}]", line_number, path)
    return raw


def _read_csv(path):
    with open(path, "r", encoding="utf-8", newline="") as file:
        reader = csv.reader(file)
        try:
            header = next(reader)
        except StopIteration as e:
            raise DatasetParseError("missing header", 1, path) from e
        k = len(header) - 1
        expected = [f"logit_{i}" for i in range(k)] + ["label"]
        if k < 2 or [h.strip() for h in header] != expected:
            raise DatasetParseError(
                "header must be logit_0,...,logit_{K-1},label with K >= 2", 1,
                path)
        logits, labels = [], []
        for row in reader:
            line_number = reader.line_num
            if not row:
                continue
            if len(row) != k + 1:
                raise DatasetParseError(
                    f"expected {k + 1} fields, got {len(row)}", line_number,
                    path)
            logits.append(
                [_parse_logit(v, line_number, path) for v in row[:k]])
            labels.append(_parse_label(row[k], k, line_number, path))
    return CalibrationDataset(np.array(logits).reshape(-1, k), labels, k=k)


def _read_jsonl(path):
    k = None
    logits, labels = [], []
    with open(path, "r", encoding="utf-8") as file:
        for line_number, line in enumerate(file, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetParseError(f"invalid JSON ({e.msg})", line_number,
                                        path) from e
            if not isinstance(obj, dict):
                raise DatasetParseError("expected a JSON object", line_number,
                                        path)
            if "logits" not in obj:
                if k is None and not logits and isinstance(obj.get("k"), int):
                    k = obj["k"]
                    continue
                raise DatasetParseError("missing field 'logits'", line_number,
                                        path)
            row = obj["logits"]
            if not isinstance(row, list):
                raise DatasetParseError("'logits' must be an array",
                                        line_number, path)
            if k is None:
                k = len(row)
            if len(row) != k:
                raise DatasetParseError(f"expected {k} logits, got {len(row)}",
                                        line_number, path)
            if any(isinstance(v, bool) or not isinstance(v, (int, float))
                   for v in row):
                raise DatasetParseError("non-numeric logit", line_number, path)
            logits.append([_parse_logit(v, line_number, path) for v in row])
            labels.append(_parse_label(obj.get("label"), k, line_number, path))
    if k is None:
        raise DatasetParseError("empty file without a 'k' header", 1, path)
    return CalibrationDataset(np.array(logits).reshape(-1, k), labels, k=k)


def load_dataset(path, fmt=None):
    """
    Loads a dataset file.

    Args:
        path (str): File to read.
        fmt (str or None): "csv" or "jsonl"; inferred from the extension if None.

    Returns:
        CalibrationDataset: The dataset.

    Raises:
        DatasetParseError: If a row is ragged, non-numeric or has a bad label.
    """
    fmt = infer_format(path, fmt)
    logger.info("Loading dataset from %s (%s)...", path, fmt)
    if not os.path.isfile(path):
        raise InvalidInputError(f"Dataset file {path} does not exist.")
    ds = _read_csv(path) if fmt == "csv" else _read_jsonl(path)
    logger.info("Loaded %d records with K=%d.", len(ds), ds.k)
    return ds


def write_dataset(ds, path, fmt=None):
    """
    Writes a dataset so that load_dataset reproduces it exactly.
    """
    fmt = infer_format(path, fmt)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    if fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as file:
            writer = csv.writer(file, lineterminator="\n")
            writer.writerow([f"logit_{i}" for i in range(ds.k)] + ["label"])
            for row, label in zip(ds.logits, ds.labels):
                writer.writerow([_format_float(v) for v in row] +
                                [int(label)])
    else:
        with open(path, "w", encoding="utf-8") as file:
            file.write(json.dumps({"k": ds.k}) + "\n")
            for row, label in zip(ds.logits, ds.labels):
                obj = {
                    "logits": [float(v) for v in row],
                    "label": None if label == NULL_LABEL else int(label),
                }
                file.write(json.dumps(obj) + "\n")
    logger.info("Wrote %d records to %s.", len(ds), path)
