import copy
import json
from pathlib import Path

import pytest

from amv.cli import main
from amv.errors import InputError
from amv.io import (
    dumps,
    gamma_from_json,
    load_json,
    marked_ideal_from_json,
    marked_ideal_to_json,
    parse_input,
    single_chart_json,
)
from amv.poly import parse_poly

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
CUSP = str(FIXTURES / "cusp.json")
UMBRELLA = str(FIXTURES / "umbrella.json")


def write(tmp_path, obj, name="in.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


# reading and writing

@pytest.mark.parametrize("path", [CUSP, UMBRELLA])
def test_fixtures_round_trip(path):
    doc = load_json(path)
    T = marked_ideal_from_json(doc)
    assert marked_ideal_to_json(T) == doc
    assert dumps(marked_ideal_to_json(parse_input(path))) == dumps(doc)


def test_fixture_contents():
    T = parse_input(CUSP)
    assert T.mu == 1 and T.charts[0].gens == [parse_poly("x2^2-x1^3", 2)]
    U = parse_input(UMBRELLA)
    assert U.charts[0].gens == [parse_poly("x1^2-x2^2*x3", 3)]


def test_single_chart_helper_matches_fixture():
    assert single_chart_json([parse_poly("x2^2-x1^3", 2)], 2, 1) == load_json(CUSP)


def test_non_coordinate_divisor_rejected_with_pointer():
    doc = load_json(CUSP)
    doc["charts"][0]["E"] = [{"coord": "x1+x2", "tag": 0}]
    with pytest.raises(InputError, match=r"/charts/0/E/0/coord"):
        marked_ideal_from_json(doc)


def test_unknown_field_rejected():
    doc = load_json(CUSP)
    doc["charts"][0]["colour"] = "red"
    with pytest.raises(InputError, match=r"/charts/0/colour: unknown field"):
        marked_ideal_from_json(doc)


def test_bad_polynomial_reported_at_its_location():
    doc = load_json(CUSP)
    doc["charts"][0]["gens"] = ["x2^2-", "x1"]
    with pytest.raises(InputError, match=r"/charts/0/gens/0"):
        marked_ideal_from_json(doc)


def test_gamma_checks():
    assert gamma_from_json({"r": 0, "n": 2, "m": 2, "d": 3, "l": 1, "q": 1, "mu": 1}) == (0, 2, 2, 3, 1, 1, 1)
    with pytest.raises(InputError):
        gamma_from_json({"r": 0, "n": 1, "m": 2, "d": 3, "l": 1, "q": 1, "mu": 1})
    with pytest.raises(InputError):
        gamma_from_json({"r": -1, "n": 1, "m": 1, "d": 3, "l": 1, "q": 1, "mu": 1})


# command line

def test_resolve_cusp_exit_zero(tmp_path):
    out = tmp_path / "out.jsonl"
    assert main(["resolve", CUSP, "-o", str(out)]) == 0
    lines = [json.loads(x) for x in out.read_text().splitlines()]
    assert lines[0]["kind"] == "resolution_header"
    assert sum(1 for x in lines if x["kind"] == "year") == 8
    assert lines[-1]["kind"] == "final" and lines[-1]["snc"] is True


def test_year_limit_exit_three_keeps_partial_history(tmp_path):
    out = tmp_path / "out.jsonl"
    assert main(["resolve", CUSP, "--year-limit", "1", "-o", str(out)]) == 3
    kinds = [json.loads(x)["kind"] for x in out.read_text().splitlines()]
    assert kinds[0] == "resolution_header" and kinds[-1] == "error"


def test_bounds_command(tmp_path):
    out = tmp_path / "b.json"
    args = ["bounds", "--r", "0", "--n", "2", "--m", "1", "--d", "3", "--l", "1", "--q", "1", "--mu", "1"]
    assert main(args + ["-o", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["grz_class"]["Gamma"] == 4


def test_bounds_needs_all_entries():
    assert main(["bounds", "--r", "0"]) == 2


def test_check_command(tmp_path):
    out = tmp_path / "c.json"
    assert main(["check", CUSP, "-o", str(out)]) == 0
    assert json.loads(out.read_text())["ok"] is True


def test_transform_at_origin(tmp_path):
    out = tmp_path / "t.json"
    centre = json.dumps({"schema": "amv1", "kind": "centre", "charts": {"a0b0": {"params": ["x1", "x2"]}}})
    assert main(["transform", CUSP, "--centre", centre, "-o", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["data_vector"][0] == 1


def test_transform_outside_cosupport_is_bad_input(tmp_path):
    centre = json.dumps({"schema": "amv1", "kind": "centre", "charts": {"a0b0": {"params": ["x1"]}}})
    doc = load_json(CUSP)
    doc["mu"] = 2
    assert main(["transform", write(tmp_path, doc), "--centre", centre, "-o", str(tmp_path / "o")]) == 2


@pytest.mark.parametrize("argv", [
    ["resolve", "/nonexistent.json"],
    ["resolve", CUSP, "--year-limit", "0"],
    ["frobnicate"],
])
def test_bad_invocations_exit_two(argv):
    assert main(argv) == 2


def test_malformed_input_exit_two(tmp_path):
    doc = copy.deepcopy(load_json(CUSP))
    doc["schema"] = "other"
    assert main(["resolve", write(tmp_path, doc)]) == 2
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    assert main(["check", str(p)]) == 2


def test_resolve_output_is_deterministic(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert main(["resolve", CUSP, "--seed", "7", "--check-monotone", "-o", str(a)]) == 0
    assert main(["resolve", CUSP, "--seed", "7", "--check-monotone", "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
