import numpy as np
import pytest

from demandcast import snapshot
from demandcast.errors import ParseError


def test_float_formatting_survives_round_trip():
    values = [0.1, 1 / 3, 1e-17, 123456.789, -2.5e300]
    text = snapshot.format_array(values)
    back = snapshot.parse_array(text)
    assert np.array_equal(back, np.array(values))


def test_empty_array_round_trip():
    assert snapshot.format_array([]) == ""
    assert snapshot.parse_array("").size == 0
    assert snapshot.parse_array("   ").size == 0


def test_parse_array_rejects_junk():
    with pytest.raises(ParseError):
        snapshot.parse_array("1.0 banana 2.0")


def test_header_line_round_trip():
    line = snapshot.header_line("efunn")
    assert line == "demandcast-snapshot v1 kind=efunn"
    assert snapshot.parse_header(line) == "efunn"


def test_parse_header_rejects_other_files():
    with pytest.raises(ParseError):
        snapshot.parse_header("timestamp,demand_mwh,tmin_c,tmax_c")
    with pytest.raises(ParseError):
        snapshot.parse_header("demandcast-snapshot v9 kind=mlp")
    with pytest.raises(ParseError):
        snapshot.parse_header("demandcast-snapshot v1 sort=mlp")


def test_parse_body_skips_blanks_and_requires_equals():
    body = snapshot.parse_body("header\nalpha=1\n\nbeta= 2 \n")
    assert body == {"alpha": "1", "beta": " 2 "}
    with pytest.raises(ParseError, match="no '='"):
        snapshot.parse_body("header\nnope\n")
    with pytest.raises(ParseError, match="duplicate"):
        snapshot.parse_body("header\na=1\na=2\n")


def test_need_reports_missing_keys():
    with pytest.raises(ParseError, match="missing"):
        snapshot.need({}, "layers")
