import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskrobust.reports import SCHEMA, ExperimentReport, report_parse, report_render


def test_empty_report_is_header_only():
    assert report_render(ExperimentReport(["theta", "d_psi"])) == "theta,d_psi\n"


def test_single_row_report_has_two_lines():
    rep = ExperimentReport(["n", "value", "flag"])
    rep.add(10, 0.1 + 0.2, "")
    text = report_render(rep)
    assert text == "n,value,flag\n10,0.3,\n"
    assert text.count("\n") == 2 and "\r" not in text


def test_cell_formatting():
    rep = ExperimentReport(["a", "b", "c", "d", "e", "f"])
    rep.add(math.pi, math.inf, -math.inf, math.nan, True, np.float64(1e-300))
    assert report_render(rep).splitlines()[1] == "3.14159265359,inf,-inf,nan,true,1e-300"


def test_row_length_checked():
    with pytest.raises(ValueError):
        ExperimentReport(["a", "b"]).add(1)


cells = st.one_of(
    st.integers(-10**6, 10**6),
    st.floats(allow_nan=True, allow_infinity=True),
    st.booleans(),
    st.text(alphabet="abc ,\"x-", max_size=6),
)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 4).flatmap(lambda k: st.lists(st.lists(cells, min_size=k, max_size=k), max_size=5)))
def test_render_parse_render_round_trip(rows):
    k = len(rows[0]) if rows else 2
    rep = ExperimentReport([f"c{i}" for i in range(k)])
    for r in rows:
        rep.add(*r)
    text = report_render(rep)
    assert report_render(report_parse(text)) == text


def test_json_output_is_strict_json():
    rep = ExperimentReport(["x"], metadata={"q_star": math.inf, "n": np.int64(3)})
    rep.add(math.nan)
    obj = json.loads(rep.to_json())
    assert obj["schema"] == SCHEMA
    assert obj["rows"] == [["nan"]]
    assert obj["metadata"] == {"q_star": "inf", "n": 3}


def test_write_csv_with_sidecar(tmp_path):
    rep = ExperimentReport(["n"], metadata={"seed": 1})
    rep.add(5)
    paths = rep.write(tmp_path / "out.csv")
    assert [p.name for p in paths] == ["out.csv", "out.json"]
    assert (tmp_path / "out.csv").read_bytes() == b"n\n5\n"
    side = json.loads((tmp_path / "out.json").read_text())
    assert side["metadata"] == {"seed": 1} and side["columns"] == ["n"]
    paths = rep.write(tmp_path / "r.json", fmt="json")
    assert json.loads(paths[0].read_text())["rows"] == [[5]]
