import json

import numpy as np
import pytest

from auxcalib.dataset import CalibrationDataset
from auxcalib.dataset_saver import infer_format, load_dataset, write_dataset
from auxcalib.errors import DatasetParseError, InvalidInputError


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


@pytest.mark.parametrize("fmt", ["csv", "jsonl"])
def test_write_then_load_is_exact(tmp_path, rng, fmt):
    logits = rng.normal(scale=3.0, size=(25, 3))
    labels = rng.integers(-1, 3, size=25)
    ds = CalibrationDataset(logits, labels)
    path = str(tmp_path / f"data.{fmt}")
    write_dataset(ds, path)
    assert load_dataset(path) == ds


def test_csv_null_label_and_header(tmp_path):
    path = _write(tmp_path / "d.csv",
                  "logit_0,logit_1,label\n2.0,0.0,0\n0.5,1.5,-1\n")
    ds = load_dataset(path)
    assert ds.k == 2
    assert ds.records[1].label is None
    np.testing.assert_array_equal(ds.logits, [[2.0, 0.0], [0.5, 1.5]])


def test_jsonl_null_label(tmp_path):
    path = _write(tmp_path / "d.jsonl",
                  '{"logits": [1, 2, 3], "label": 2}\n'
                  '{"logits": [0.5, 0, 0], "label": null}\n')
    ds = load_dataset(path)
    assert ds.k == 3
    assert ds.labels.tolist() == [2, -1]


def test_jsonl_empty_with_header(tmp_path):
    path = _write(tmp_path / "d.jsonl", json.dumps({"k": 4}) + "\n")
    ds = load_dataset(path)
    assert len(ds) == 0
    assert ds.k == 4


@pytest.mark.parametrize("body, line", [
    ("1.0,2.0,0\n1.0,0\n", 3),
    ("1.0,abc,0\n", 2),
    ("1.0,2.0,5\n", 2),
    ("1.0,nan,0\n", 2),
    ("1.0,2.0,x\n", 2),
])
def test_csv_errors_name_the_line(tmp_path, body, line):
    path = _write(tmp_path / "d.csv", "logit_0,logit_1,label\n" + body)
    with pytest.raises(DatasetParseError) as info:
        load_dataset(path)
    assert info.value.line_number == line


def test_csv_bad_header(tmp_path):
    path = _write(tmp_path / "d.csv", "a,b,label\n1,2,0\n")
    with pytest.raises(DatasetParseError):
        load_dataset(path)


@pytest.mark.parametrize("body", [
    '{"logits": [1, 2], "label": 0}\n{"logits": [1, 2, 3], "label": 0}\n',
    '{"logits": [1, "a"], "label": 0}\n',
    '{"logits": [1, 2], "label": 2}\n',
    '{"logits": [1, 2], "label": true}\n',
    '{"label": 0}\n',
    'not json\n',
])
def test_jsonl_errors(tmp_path, body):
    path = _write(tmp_path / "d.jsonl", body)
    with pytest.raises(DatasetParseError):
        load_dataset(path)


def test_jsonl_logit_too_large_for_a_float(tmp_path):
    path = _write(tmp_path / "d.jsonl",
                  '{"logits": [1, 2], "label": 0}\n'
                  '{"logits": [1' + "0" * 400 + ', 0], "label": 0}\n')
    with pytest.raises(DatasetParseError) as info:
        load_dataset(path)
    assert info.value.line_number == 2


def test_format_resolution(tmp_path):
    assert infer_format("a/b.CSV") == "csv"
    assert infer_format("a/b.txt", "jsonl") == "jsonl"
    with pytest.raises(InvalidInputError):
        infer_format("a/b.txt")
    with pytest.raises(InvalidInputError):
        load_dataset(str(tmp_path / "missing.csv"))
