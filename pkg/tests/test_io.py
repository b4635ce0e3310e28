import numpy as np
import pytest

from multidescent import ParseError
from multidescent.io import parse_list, read_manifest, read_matrix, write_manifest, write_matrix


@pytest.mark.parametrize("name", ["m.csv", "m.txt", "m.mat"])
def test_round_trip_exact(tmp_path, rng, name):
    M = rng.standard_normal((4, 3)) * 10.0 ** rng.integers(-20, 20, size=(4, 3))
    write_matrix(tmp_path / name, M)
    np.testing.assert_array_equal(read_matrix(tmp_path / name), M)


def test_whitespace_header(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("2 2\n1 2\n3 4\n")
    np.testing.assert_array_equal(read_matrix(p), [[1, 2], [3, 4]])


@pytest.mark.parametrize(
    "text, match",
    [("2 x\n1 2\n", "line 1"), ("2 2\n1 2\n3 y\n", "line 3"), ("2 2\n1 2\n", "header"), ("", "empty"),
     ("1 2\n1 2 3\n", "header")],
)
def test_whitespace_errors(tmp_path, text, match):
    p = tmp_path / "m.txt"
    p.write_text(text)
    with pytest.raises(ParseError, match=match):
        read_matrix(p)


def test_csv_errors(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("1,2\n3\n")
    with pytest.raises(ParseError, match="ragged"):
        read_matrix(p)
    p.write_text("1,2\nnan,inf\n")
    with pytest.raises(ValueError):
        read_matrix(p)


def test_manifest(tmp_path):
    p = tmp_path / "x.ini"
    write_manifest(p, {"a": {"k": "2,5", "x": 1.5}})
    assert read_manifest(p) == {"a": {"k": "2,5", "x": "1.5"}}
    with pytest.raises(FileNotFoundError):
        read_manifest(tmp_path / "missing.ini")


def test_parse_list():
    assert parse_list("1, 2 ,3", int) == (1, 2, 3)
    assert parse_list("") == ()
