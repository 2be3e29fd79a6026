from __future__ import annotations

import json

import numpy as np
import pytest

from collapse_lab.ensemble import chunks, normal_increments, run_chunked, stream
from collapse_lab.io import csv_text, format_value, read_csv, write_csv, write_manifest


def test_float_formatting_round_trips():
    for v in (0.1, 1 / 3, 1e-300, -2.5e17, np.float64(np.pi)):
        s = format_value(v)
        assert float(s) == float(v)
    assert format_value(True) == "true"
    assert format_value(np.int64(7)) == "7"
    assert format_value(float("nan")) == "nan"
    with pytest.raises(TypeError):
        format_value(1 + 2j)


def test_csv_is_rfc4180_with_crlf(tmp_path):
    text = csv_text(("a", "b"), [(1.5, 'say "hi", ok'), (2, "x")])
    assert text == 'a,b\r\n1.5,"say ""hi"", ok"\r\n2,x\r\n'
    path = write_csv(tmp_path / "s.csv", ("a", "b"), [(0.1, "x")])
    assert path.read_bytes() == b"a,b\r\n0.10000000000000001,x\r\n"
    header, rows = read_csv(path)
    assert header == ["a", "b"] and rows == [["0.10000000000000001", "x"]]
    with pytest.raises(ValueError):
        csv_text(("a",), [(1, 2)])


def test_manifest_handles_numpy(tmp_path):
    p = write_manifest(tmp_path / "m.json", {"a": np.arange(3), "b": np.float64(0.5), "c": complex(1, 2),
                                            "d": float("inf"), "e": np.bool_(True)})
    m = json.loads(p.read_text())
    assert m == {"a": [0, 1, 2], "b": 0.5, "c": {"re": 1.0, "im": 2.0}, "d": "inf", "e": True}


def test_streams_are_keyed_by_seed_name_and_index():
    a = stream(1, "x", 0).random(4)
    np.testing.assert_array_equal(a, stream(1, "x", 0).random(4))
    assert not np.array_equal(a, stream(2, "x", 0).random(4))
    assert not np.array_equal(a, stream(1, "y", 0).random(4))
    assert not np.array_equal(a, stream(1, "x", 1).random(4))
    stream(2**64 - 1, "x", 0)


def test_increments_depend_only_on_index():
    full = normal_increments(3, "w", range(10), 5, 0.01)
    part = normal_increments(3, "w", [7, 2], 5, 0.01)
    np.testing.assert_array_equal(part, full[[7, 2]])
    assert full.std() == pytest.approx(0.1, rel=0.5)


def test_chunks_cover_range():
    assert [list(r) for r in chunks(7, 3)] == [[0, 1, 2], [3, 4, 5], [6]]
    assert chunks(0, 3) == []


def _draw(indices, seed):
    return np.array([stream(seed, "draw", i).random() for i in indices])


def test_run_chunked_is_worker_invariant():
    serial = run_chunked(_draw, 50, (9,), workers=1, chunk=7)
    parallel = run_chunked(_draw, 50, (9,), workers=3, chunk=7)
    np.testing.assert_array_equal(serial, parallel)
    np.testing.assert_array_equal(serial, _draw(range(50), 9))
