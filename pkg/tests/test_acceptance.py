"""Acceptance criteria, each an exact pass/fail line printed to the terminal.

One full run of the bundled zoo is shared by the criteria that read suite
verdicts from it; the determinism criterion runs the zoo a second time.
"""

import json
import time
from collections import defaultdict

import pytest
from gmpy2 import mpq

from orbiforms import chart_suites as cs
from orbiforms import epg, harness
from orbiforms import epg_suites as es
from orbiforms.scenario import load

TEST_DEGREE = 3
CLAUSES = ("twomorphism", "composition", "projection_formula", "base_change", "stokes")


@pytest.fixture(scope="module")
def zoo_report():
    return harness.run(harness.zoo_paths(), test_degree=TEST_DEGREE)


@pytest.fixture
def report(capsys):
    def emit(title: str, ok: bool, detail: str, seconds: float) -> None:
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'}  {title}: {detail} ({seconds:.1f} s)")

    return emit


def entries(rep: dict, suites, files=None) -> list[tuple[str, dict]]:
    out = []
    for sc in rep["canonical"]["scenarios"]:
        if files is None or sc["file"] in files:
            out.extend((sc["file"], e) for e in sc["suites"] if e["suite"] in suites)
    return out


def seconds(rep: dict, found) -> float:
    t = rep["timings"]
    return sum(t[f]["suites"][f"{e['index']}:{e['suite']}"] for f, e in found)


def all_pass(found) -> bool:
    return bool(found) and all(e["status"] == "pass" for _, e in found)


def holding(found):
    return [(f, e) for f, e in found if e["verdict"] == "holds" and e["status"] == "pass"]


def check_names(found) -> set[str]:
    return {c["name"] for _, e in found for c in e["checks"]}


def test_exterior_calculus_kernel(report):
    complexes = {}
    for path in harness.zoo_paths():
        sc = load(path)
        for ref, (kind, value) in sc.objects.items():
            if kind == "complex":
                cx = value
            elif kind == "groupoid" and "." not in ref:
                cx = value.X0
            else:
                continue
            complexes.setdefault(json.dumps(cx.to_json(), sort_keys=True, default=str), cx)
    start = time.perf_counter()
    results = [cs.check_calculus(cx, seed=0, count=20) for cx in complexes.values()]
    elapsed = time.perf_counter() - start
    ok = all(c.holds and c.detail.startswith("20 cases") for checks in results for c in checks) and elapsed < 10
    report("exterior calculus kernel", ok, f"d∘d, Leibniz and pull-back functoriality on {len(complexes)} complexes x 20 instances", elapsed)
    assert ok


def test_integration_properties(zoo_report, report):
    found = entries(zoo_report, {"integration_properties"}, {"square_projection.json", "cube.json"})
    good = holding(found)
    parts = {"push-forward to a point integrates", "push-forward composes", "projection formula", "base change"}
    elapsed = seconds(zoo_report, found)
    ok = all_pass(found) and {f for f, _ in good} == {"square_projection.json", "cube.json"} and parts <= check_names(good) and elapsed < 30
    report("integration along fibers", ok, f"normalization, composition, projection formula and base change in {len(good)} invocations", elapsed)
    assert ok


def test_stokes_with_boundary_sign(zoo_report, report):
    found = entries(zoo_report, {"chart_stokes", "stokes"})
    good = holding(found)
    files = {f for f, _ in good}
    nonzero = [e for _, e in good if e["arguments"].get("require_nonzero") or e["arguments"].get("require_boundary")]
    sensitive = [e for _, e in found if e["expect"] == "violated" and e["status"] == "pass"]
    elapsed = seconds(zoo_report, found)
    ok = all_pass(found) and len(files) >= 3 and bool(nonzero) and bool(sensitive) and elapsed < 30
    report("Stokes with the vertical boundary", ok, f"{len(good)} invocations over {len(files)} scenarios, {len(nonzero)} with both sides nonzero, {len(sensitive)} sign fixtures caught", elapsed)
    assert ok


def test_orientation_signs(zoo_report, report):
    found = entries(zoo_report, {"orientation"})
    names = check_names(holding(found))
    minus = sorted(n for n in names if "sign -1" in n)
    kinds = ("pull-back of canonical is canonical", "swap orientation", "flip formula", "canonical orientations compose", "pull-back is push-forward along the inverse")
    ok = all_pass(found) and all(any(n.startswith(k) for n in names) for k in kinds) and bool(minus)
    report("orientation and sign bookkeeping", ok, f"{len(names)} chart-exact checks, {len(minus)} with sign -1", seconds(zoo_report, found))
    assert ok


def test_averaging_and_refinements(zoo_report, report):
    files = {"mirror.json", "cover.json", "klein.json"}
    found = entries(zoo_report, {"jk", "refinement", "refinement_inverse"}, files)
    good = holding(found)
    per_file = defaultdict(set)
    for f, e in good:
        per_file[f].add(e["suite"])
    names = check_names(good)
    needed = {"t_* s^* = s_* t^*", "J∘K = id", "K∘J = id modulo coboundaries", "J is a module map", "averaged integral is independent of ρ", "R_* R^* = id", "R^* R_* = id"}
    elapsed = seconds(zoo_report, found)
    ok = all_pass(found) and all(per_file[f] == {"jk", "refinement", "refinement_inverse"} for f in files) and needed <= names and elapsed < 60
    report("averaging maps J and K, refinements", ok, f"{len(good)} invocations on the mirror, cover and Klein four-group scenarios", elapsed)
    assert ok


def test_mirror_integral(zoo_report, report):
    start = time.perf_counter()
    sc = load(harness.zoo_paths()[[p.name for p in harness.zoo_paths()].index("mirror.json")])
    Y, x2 = sc.get("Y", "groupoid"), sc.get("x2", "form")
    direct = es.average_density(Y, x2)
    R = sc.get("RY", "functor")
    refined = es.average_density(R.source, epg.functor_pullback(R, x2))
    found = [(f, e) for f, e in entries(zoo_report, {"integral"}, {"mirror.json"}) if e["arguments"]["expected"] == "1/3"]
    elapsed = time.perf_counter() - start
    ok = direct == refined == mpq(1, 3) and all_pass(found) and any("refinement" in e["arguments"] for _, e in found)
    report("mirror orbifold integral", ok, f"∫ x² = {direct} on the action groupoid and {refined} through the two-piece restriction", elapsed)
    assert ok


def test_fiber_products(zoo_report, report):
    start = time.perf_counter()
    issues, count = [], 0
    for path in harness.zoo_paths():
        sc = load(path)
        for ref, (kind, value) in sc.objects.items():
            if kind == "fiber_product":
                count += 1
                issues += epg.validate_groupoid(value.P)
    found = entries(zoo_report, {"fiber_product", "base_change"})
    good = holding(found)
    names = check_names(good)
    elapsed = time.perf_counter() - start + seconds(zoo_report, found)
    ok = count > 0 and not issues and all_pass(found) and {"partition product is a partition of unity", "groupoid base change", "base change"} <= names
    report("weak fiber products", ok, f"{count} zoo fiber products valid, {len(good)} base change and partition product invocations", elapsed)
    assert ok


def test_orbifold_identities_with_fixtures(zoo_report, report):
    found = entries(zoo_report, set(CLAUSES))
    counts = {c: [0, 0] for c in CLAUSES}
    for _, e in found:
        if e["status"] == "pass":
            counts[e["suite"]][e["expect"] == "violated"] += 1
    summary = zoo_report["canonical"]["summary"]
    ok = all_pass(found) and all(h > 0 and v > 0 for h, v in counts.values()) and summary["status"] == "pass"
    detail = ", ".join(f"{c} {h}+{v}" for c, (h, v) in counts.items())
    report("orbifold push-forward identities", ok, f"holding+fixture counts: {detail}; zoo {summary['passed']}/{summary['suites']} suites pass", seconds(zoo_report, found))
    assert ok


def test_currents(zoo_report, report):
    names = {"bimodule", "chain_lemma", "current_twomorphism", "current_composition", "current_projection", "current_base_change", "relative_stokes"}
    found = entries(zoo_report, names | {"current_value", "current_d_squared"}, {"currents.json"})
    covered = {e["suite"] for _, e in holding(found)}
    elapsed = seconds(zoo_report, found)
    ok = zoo_report["canonical"]["test_degree"] == TEST_DEGREE and all_pass(found) and names <= covered and elapsed < 120
    report("currents", ok, f"{len(found)} invocations with test degree {TEST_DEGREE}", elapsed)
    assert ok


def test_determinism(zoo_report, report):
    start = time.perf_counter()
    second = harness.run(harness.zoo_paths(), test_degree=TEST_DEGREE)
    elapsed = time.perf_counter() - start
    first_text, second_text = harness.canonical_json(zoo_report), harness.canonical_json(second)
    ok = first_text == second_text
    report("determinism", ok, f"two full zoo runs give identical canonical reports ({len(first_text)} bytes)", elapsed)
    assert ok
