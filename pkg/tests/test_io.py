import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bipotoc.io import MatrixFormatError, dumps_json, flatten, format_complex, load_matrix, save_matrix, to_csv


def test_roundtrip_bit_exact(tmp_path, rng):
    m = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
    m[0, 0] = complex(-0.0, 1e-300)
    m[1, 1] = complex(np.inf, -np.inf)
    path = tmp_path / "m.txt"
    save_matrix(path, m)
    out = load_matrix(path)
    assert out.shape == m.shape
    assert out.tobytes() == m.tobytes()


def test_identity_file(tmp_path):
    path = tmp_path / "i.txt"
    path.write_text("2 2\n1+0j 0+0j\n0 1\n")
    assert np.array_equal(load_matrix(path), np.eye(2))


def test_format_complex():
    assert format_complex(1 - 2j) == "1.0-2.0j"
    assert format_complex(complex(0.5, -0.0)) == "0.5-0.0j"
    assert complex(format_complex(complex(0.1, 0.2))) == complex(0.1, 0.2)


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("2 2\n1 0\n0\n", ":3: expected 2 entries, found 1"),
        ("2 2\n1 0\n0 1 5\n", ":3: expected 2 entries, found 3"),
        ("2 2\n1 0\n", "expected 2 rows, found 1"),
        ("2 x\n1 0\n0 1\n", ":1: header"),
        ("2 2\n1 0\n0 abc\n", ":3: column 2: cannot parse 'abc'"),
        ("", "empty file"),
        ("0 2\n", "dimensions must be positive"),
    ],
)
def test_malformed_files(tmp_path, text, fragment):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(MatrixFormatError) as err:
        load_matrix(path)
    assert fragment in str(err.value)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_matrix(tmp_path / "nope.txt")


def test_save_requires_2d(tmp_path):
    with pytest.raises(ValueError):
        save_matrix(tmp_path / "x.txt", np.zeros(3))


def test_json_numpy_types():
    payload = {"a": np.float64(0.1), "b": np.arange(3), "c": np.bool_(True), "d": np.int32(4)}
    assert json.loads(dumps_json(payload)) == {"a": 0.1, "b": [0, 1, 2], "c": True, "d": 4}


def test_flatten():
    assert flatten({"a": {"b": 1, "c": [2, 3]}}) == [("a.b", 1), ("a.c.0", 2), ("a.c.1", 3)]


def test_csv_table_and_kv():
    rows = list(csv.reader(io.StringIO(to_csv({"table": [{"t": 0.1, "G": 1 / 3}, {"t": 0.2}]}))))
    assert rows == [["t", "G"], ["0.1", repr(1 / 3)], ["0.2", ""]]
    rows = list(csv.reader(io.StringIO(to_csv({"x": 1.5, "y": {"z": None}}))))
    assert rows == [["key", "value"], ["x", "1.5"], ["y.z", ""]]


@settings(max_examples=60, deadline=None)
@given(st.complex_numbers(allow_nan=False))
def test_format_roundtrip_property(z):
    assert complex(format_complex(z)) == z
