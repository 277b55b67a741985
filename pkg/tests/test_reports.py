import csv
import io
import json
import math

import numpy as np
import pytest

from hyplab.reports import ConvergenceReport, trailing_slope


def sample_report():
    rows = [
        {"n": 4, "error": 0.125, "ok": True},
        {"n": 5, "error": np.float64(1 / 3), "ok": np.bool_(False)},
    ]
    return ConvergenceReport("demo", {"alpha": 0.3, "x": 0.1 + 0.2j}, ("n", "error", "ok"), rows, {"pass": False, "gap": math.inf})


def test_json_schema_and_values():
    doc = json.loads(sample_report().to_json())
    assert set(doc) == {"experiment", "params", "rows", "verdict"}
    assert doc["params"]["x"] == [0.1, 0.2]
    assert doc["rows"][1]["ok"] is False
    # non-finite floats are written as strings so the file stays valid JSON
    assert doc["verdict"]["gap"] == "inf"


def test_csv_layout_roundtrips_floats():
    text = sample_report().to_csv()
    assert "\r" not in text and text.endswith("\n")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["n", "error", "ok"]
    assert rows[2][0] == "5" and rows[2][2] == "false"
    assert float(rows[2][1]) == 1 / 3


def test_passed_and_column():
    rep = sample_report()
    assert not rep.passed
    assert np.array_equal(rep.column("error"), [0.125, 1 / 3])
    assert ConvergenceReport("x", {}, (), []).passed


def test_trailing_slope():
    xs = np.arange(10.0)
    ys = np.where(xs < 5, 0.0, 2.0 * xs)
    assert trailing_slope(xs, ys) == pytest.approx(2.0)
    assert trailing_slope([1.0], [3.0]) == 0.0
