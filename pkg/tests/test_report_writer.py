import json
import os

import numpy as np
import pytest

from utils.models.report_model import ConvergenceRowDocument
from utils.report_writer import ScenarioResult, dumps, round_significant, rounded, write_result
from utils.svg_chart import line_chart


def test_round_significant():
    assert round_significant(1.23456789, 3) == 1.23
    assert round_significant(0.0) == 0.0
    assert round_significant(float("nan")) is None
    assert round_significant(float("inf")) is None


def test_rounded_handles_numpy_values():
    data = {"a": np.float64(1.0 / 3.0), "b": np.array([1, 2]), "c": np.bool_(True), 4: (np.int64(7),)}
    assert rounded(data, 4) == {"a": 0.3333, "b": [1, 2], "c": True, "4": [7]}


def test_dumps_is_sorted_and_rounded():
    text = dumps({"z": 1.0 / 3.0, "a": [np.float32(2.5)]})
    assert text.index('"a"') < text.index('"z"')
    assert json.loads(text)["z"] == pytest.approx(1.0 / 3.0, rel=1e-11)


def test_rounded_dumps_pydantic_documents():
    row = ConvergenceRowDocument(resolution=64, residuals={"transport": 1.0 / 3.0})
    assert rounded(row, 3) == {"resolution": 64, "residuals": {"transport": 0.333}}


def test_result_passes_only_if_every_check_passes():
    result = ScenarioResult("demo")
    result.check("one", True)
    assert result.passed
    result.check("two", False, "broken")
    assert not result.passed
    assert [c.name for c in result.failures] == ["two"]


def test_write_result(tmp_path):
    result = ScenarioResult("demo")
    result.check("ok", True)
    result.documents["numbers"] = {"x": np.arange(3)}
    result.tables["rows"] = [{"n": 1, "values": [0.5]}, {"n": 2, "extra": "yes"}]
    result.chart("curve", "Curve", {"line": ([1, 2, 3], [3, 2, 1])})
    written = write_result(result, str(tmp_path / "out"), ["json", "csv", "svg"])
    assert sorted(os.path.basename(p) for p in written) == ["demo-curve.svg", "demo-rows.csv", "demo.json"]
    summary = json.loads((tmp_path / "out" / "demo.json").read_text())
    assert summary["passed"] is True
    assert summary["reports"]["numbers"]["x"] == [0, 1, 2]
    header = (tmp_path / "out" / "demo-rows.csv").read_text().splitlines()[0]
    assert header == "extra,n,values"


def test_write_result_respects_formats(tmp_path):
    result = ScenarioResult("demo")
    result.tables["rows"] = [{"n": 1}]
    written = write_result(result, str(tmp_path), ["json"])
    assert [os.path.basename(p) for p in written] == ["demo.json"]


def test_line_chart_drops_non_positive_values_on_log_axes():
    svg = line_chart("Ladder", {"transport <h>": ([64, 128, 256], [1e-3, 0.0, 2.5e-4])}, log_x=True, log_y=True)
    assert svg.startswith("<svg")
    assert svg.rstrip().endswith("</svg>")
    assert "transport &lt;h&gt;" in svg
    polyline = svg.split('<polyline points="')[1].split('"')[0]
    assert len(polyline.split()) == 2


def test_empty_chart_still_renders():
    svg = line_chart("Nothing", {"empty": ([], [])})
    assert "<polyline" not in svg
    assert "Nothing" in svg
