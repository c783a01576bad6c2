import json

import pytest
from gmpy2 import mpq

from orbiforms.kernel import Poly
from orbiforms.scenario import ScenarioError, chart_witness, from_document, load, parse_document, parse_poly, rat

from conftest import ZOO

INTERVAL = {"id": "I", "type": "complex", "dim": 1, "charts": [{"box": [["0"], ["1"]]}]}


def doc(objects, suites=()):
    return {"name": "probe", "objects": list(objects), "suites": list(suites)}


def test_parse_poly():
    x0, x1 = Poly.var(2, 0), Poly.var(2, 1)
    assert parse_poly("x0**2 - 3*x1/2 + 1", 2) == x0 * x0 - x1.scale(mpq(3, 2)) + Poly.const(2, 1)
    assert parse_poly("(x0 + x1)**2", 2) == (x0 + x1) ** 2
    assert parse_poly("1/3", 2) == Poly.const(2, mpq(1, 3))


@pytest.mark.parametrize(
    "text, message",
    [
        ("x2", "unknown variable"),
        ("x0**x1", "exponent must be constant"),
        ("x0/x1", "divisor must be constant"),
        ("sin(x0)", "unsupported expression"),
        ("x0 +", "cannot parse"),
    ],
)
def test_parse_poly_rejects(text, message):
    with pytest.raises(ScenarioError, match=message):
        parse_poly(text, 2)


def test_rat():
    assert rat("3/4") == mpq(3, 4)
    assert rat(2) == 2
    with pytest.raises(ScenarioError):
        rat(0.5)


def test_json_error_reports_line_and_column():
    with pytest.raises(ScenarioError, match="line 2, column 14"):
        parse_document('{"name": "a",\n "objects": [}', "bad.json")


def test_unknown_type_and_duplicate_id():
    with pytest.raises(ScenarioError, match="unknown type 'widget'"):
        from_document(doc([{"id": "w", "type": "widget"}]))
    with pytest.raises(ScenarioError, match="duplicate object id 'I'"):
        from_document(doc([INTERVAL, INTERVAL]))


def test_suite_entries_are_checked():
    with pytest.raises(ScenarioError, match="names no known suite"):
        from_document(doc([INTERVAL], [{"suite": "nope"}]))
    with pytest.raises(ScenarioError, match="needs argument 'complex'"):
        from_document(doc([INTERVAL], [{"suite": "calculus"}]))
    with pytest.raises(ScenarioError, match="use holds or violated"):
        from_document(doc([INTERVAL], [{"suite": "calculus", "complex": "I", "expect": "maybe"}]))
    with pytest.raises(ScenarioError, match="does not take"):
        from_document(doc([INTERVAL], [{"suite": "calculus", "complex": "I", "colour": "red"}]))
    with pytest.raises(ScenarioError, match="unknown object 'J'"):
        from_document(doc([INTERVAL], [{"suite": "calculus", "complex": "J"}]))


def test_wrong_reference_kind():
    with pytest.raises(ScenarioError):
        from_document(doc([INTERVAL], [{"suite": "jk", "groupoid": "I"}]))


def test_polynomial_form_with_pieces():
    form = {"id": "h", "type": "form", "on": "I", "degree": 0, "charts": [[
        {"box": [["0"], ["1/2"]], "coefficients": {"": "x0"}},
        {"box": [["1/2"], ["1"]], "coefficients": {"": "1 - x0"}},
    ]], "smoothness": 0}
    sc = from_document(doc([INTERVAL, form]))
    h = sc.get("h", "form")
    assert h.evaluate(0, (mpq(1, 4),)) == {(): mpq(1, 4)}
    assert h.evaluate(0, (mpq(3, 4),)) == {(): mpq(1, 4)}


def test_validation_collects_chart_witnesses():
    sc = load(ZOO / "broken" / "broken_groupoid.json")
    issues = {v["issue"]: v["charts"] for v in sc.validation}
    assert issues["s∘i = t fails on charts [1]"] == [1]
    assert all(v["object"] == "G" and v["type"] == "groupoid" for v in sc.validation)


def test_chart_witness():
    assert chart_witness("m fails on charts [1, 3]; chart 2: empty") == [1, 3, 2]
    assert chart_witness("no charts named") == []


def test_zoo_files_load_cleanly():
    for path in sorted(ZOO.glob("*.json")):
        sc = load(path)
        assert sc.validation == [], path.name
        assert sc.suites, path.name
        json.loads(path.read_text())


def test_missing_file():
    with pytest.raises(ScenarioError):
        load(ZOO / "absent.json")
