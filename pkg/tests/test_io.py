import math

import numpy as np
from hypothesis import given, settings, strategies as st

from ddilab.io import fmt, read_csv, read_kv, write_csv, write_kv


@settings(max_examples=200, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trips(x):
    assert float(fmt(x)) == x


def test_fmt_special_values():
    assert fmt(True) == "1" and fmt(np.int64(3)) == "3" and fmt(math.nan) == "nan"
    assert fmt(-math.inf) == "-inf" and fmt(None) == ""


def test_csv_round_trip(tmp_path, rng):
    data = rng.standard_normal((7, 3)) * 10.0 ** rng.integers(-20, 20, (7, 3))
    path = tmp_path / "a.csv"
    write_csv(path, ["x", "y", "z"], data, preamble=["lambda0=0.5"])
    header, arr, pre = read_csv(path)
    assert header == ["x", "y", "z"] and pre == ["lambda0=0.5"]
    assert np.array_equal(arr, data)


def test_kv_round_trip(tmp_path):
    path = tmp_path / "m.txt"
    write_kv(path, {"a": 0.1, "b": "text", "c": [1.0, 2.5]})
    assert read_kv(path) == {"a": "0.10000000000000001", "b": "text", "c": "1;2.5"}
