"""Scenario files: JSON declarations of geometric objects plus suite invocations.

A scenario is one JSON document::

    {
      "name": "mirror",
      "description": "...",
      "objects": [{"id": "M", "type": "complex", ...}, ...],
      "suites": [{"suite": "jk", "groupoid": "Y", "expect": "holds"}, ...]
    }

Objects are built in declaration order and may only refer to earlier ids.
Rationals are written as "p/q" strings or integers; polynomial coefficients
are arithmetic expressions in x0, x1, ...
"""

from __future__ import annotations

import ast
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from gmpy2 import mpq

from . import epg, orb
from . import currents as cu
from .epg import EPGError, Functor, Groupoid, WeakFiberProduct
from .forms import FormError, PPForm
from .geometry import ChartComplex, ChartMap, GeometryError, MapFlags, canonical_orientation, compose_maps, identity_map, to_point
from .kernel import AffineMap, Poly, Polytope, linalg as la


class ScenarioError(ValueError):
    """The document cannot be turned into objects; exit code 2."""


@dataclass(frozen=True)
class OrientedMap:
    map: ChartMap
    orientation: tuple | None = None


@dataclass
class Scenario:
    name: str
    description: str
    path: str
    objects: dict[str, tuple[str, Any]]
    suites: list[dict]
    validation: list[dict] = field(default_factory=list)

    def get(self, ref: str, kind: str | tuple[str, ...]) -> Any:
        kinds = (kind,) if isinstance(kind, str) else kind
        if ref not in self.objects:
            raise ScenarioError(f"unknown object {ref!r}")
        k, value = self.objects[ref]
        if k not in kinds:
            raise ScenarioError(f"object {ref!r} is a {k}, expected {' or '.join(kinds)}")
        return value

    def kind(self, ref: str) -> str:
        if ref not in self.objects:
            raise ScenarioError(f"unknown object {ref!r}")
        return self.objects[ref][0]


# scalars, polynomials, polytopes, affine maps ------------------------------------------


def rat(x) -> mpq:
    if isinstance(x, bool) or not isinstance(x, (int, str)):
        raise ScenarioError(f"rational expected, got {x!r}")
    try:
        return la.to_rat(x)
    except (ValueError, ZeroDivisionError) as exc:
        raise ScenarioError(f"bad rational {x!r}") from exc


def rat_vec(xs) -> tuple:
    if not isinstance(xs, list):
        raise ScenarioError(f"vector expected, got {xs!r}")
    return tuple(rat(x) for x in xs)


_VAR = re.compile(r"x(\d+)$")


def parse_poly(text, nvars: int) -> Poly:
    """Polynomial from an arithmetic expression in x0 … x{n−1}.

    Integers, + − * /, and ** with a constant non-negative integer exponent;
    division only by nonzero constants.
    """
    if isinstance(text, int) and not isinstance(text, bool):
        return Poly.const(nvars, text)
    if not isinstance(text, str):
        raise ScenarioError(f"polynomial expected, got {text!r}")
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ScenarioError(f"cannot parse polynomial {text!r}: {exc.msg}") from exc

    def const_of(p: Poly, what: str) -> mpq:
        if any(any(e) for e in p.terms):
            raise ScenarioError(f"{what} must be constant in {text!r}")
        return p.constant_term()

    def walk(node) -> Poly:
        if isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
            return Poly.const(nvars, node.value)
        if isinstance(node, ast.Name):
            m = _VAR.match(node.id)
            if not m or int(m.group(1)) >= nvars:
                raise ScenarioError(f"unknown variable {node.id!r} in {text!r} ({nvars} variables)")
            return Poly.var(nvars, int(m.group(1)))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
            p = walk(node.operand)
            return -p if isinstance(node.op, ast.USub) else p
        if isinstance(node, ast.BinOp):
            a, b = walk(node.left), walk(node.right)
            if isinstance(node.op, ast.Add):
                return a + b
            if isinstance(node.op, ast.Sub):
                return a - b
            if isinstance(node.op, ast.Mult):
                return a * b
            if isinstance(node.op, ast.Div):
                c = const_of(b, "divisor")
                if c == 0:
                    raise ScenarioError(f"division by zero in {text!r}")
                return a.scale(1 / c)
            if isinstance(node.op, ast.Pow):
                k = const_of(b, "exponent")
                if k.denominator != 1 or k < 0:
                    raise ScenarioError(f"exponent must be a non-negative integer in {text!r}")
                return a ** int(k)
        raise ScenarioError(f"unsupported expression {ast.dump(node)[:40]} in {text!r}")

    return walk(tree.body)


def halfspaces(rows) -> list[tuple]:
    if not isinstance(rows, list):
        raise ScenarioError("halfspaces must be a list of [normal, offset] pairs")
    out = []
    for row in rows:
        if not (isinstance(row, list) and len(row) == 2):
            raise ScenarioError(f"halfspace {row!r} is not [normal, offset]")
        out.append((rat_vec(row[0]), rat(row[1])))
    return out


def polytope(spec: dict, dim: int) -> Polytope:
    if dim == 0:
        return Polytope.point_space()
    if "box" in spec:
        lo, hi = spec["box"]
        p = Polytope.box(rat_vec(lo), rat_vec(hi))
    elif "halfspaces" in spec:
        p = Polytope.make(dim, halfspaces(spec["halfspaces"]))
    elif "hull" in spec:
        try:
            p = Polytope.hull([rat_vec(v) for v in spec["hull"]])
        except ValueError as exc:
            raise ScenarioError(str(exc)) from exc
    else:
        raise ScenarioError(f"region needs one of box, halfspaces, hull: {spec!r}")
    if p.ambient_dim != dim:
        raise ScenarioError(f"region {spec!r} is not in dimension {dim}")
    return p


def affine(spec: dict, domain_dim: int) -> AffineMap:
    matrix = [rat_vec(row) for row in spec.get("matrix", [])]
    offset = rat_vec(spec["offset"]) if "offset" in spec else None
    if offset is None and not matrix:
        offset = ()
    try:
        a = AffineMap.make(matrix, offset, domain_dim)
    except ValueError as exc:
        raise ScenarioError(f"bad affine map {spec!r}: {exc}") from exc
    return a


def assignment(records, source: ChartComplex) -> list[tuple[int, AffineMap]]:
    if not isinstance(records, list) or len(records) != len(source.charts):
        raise ScenarioError(f"one chart record per source chart is required ({len(source.charts)})")
    return [(int(r["chart_index"]), affine(r, source.dim)) for r in records]


def orientation_list(spec, n: int) -> tuple:
    if not isinstance(spec, list) or len(spec) != n or any(x not in (1, -1) for x in spec):
        raise ScenarioError(f"orientation must be {n} signs ±1, got {spec!r}")
    return tuple(spec)


# object builders ----------------------------------------------------------------------


def _need(decl: dict, key: str):
    if key not in decl:
        raise ScenarioError(f"{decl.get('type')} {decl.get('id')!r} needs field {key!r}")
    return decl[key]


def build_complex(sc: Scenario, decl: dict) -> ChartComplex:
    dim = int(_need(decl, "dim"))
    charts = _need(decl, "charts")
    if dim == 0:
        return ChartComplex.point()
    polys = [polytope(c, dim) for c in charts]
    cuts = [halfspaces(c["cuts"]) if "cuts" in c else None for c in charts]
    return ChartComplex.make(dim, polys, cuts)


def build_chartmap(sc: Scenario, decl: dict) -> OrientedMap:
    kind = decl.get("kind", "affine")
    if kind == "affine":
        src = sc.get(_need(decl, "source"), "complex")
        tgt = sc.get(_need(decl, "target"), "complex")
        f = ChartMap.build(src, tgt, assignment(_need(decl, "charts"), src), decl.get("product_data"))
    elif kind == "identity":
        f = identity_map(sc.get(_need(decl, "complex"), "complex"))
    elif kind == "to_point":
        f = to_point(sc.get(_need(decl, "complex"), "complex"))
    elif kind == "compose":
        outer = sc.get(_need(decl, "outer"), "chartmap").map
        inner = sc.get(_need(decl, "inner"), "chartmap").map
        f = compose_maps(outer, inner)
    else:
        raise ScenarioError(f"unknown chart map kind {kind!r}")
    o = decl.get("orientation")
    if o == "canonical":
        o = canonical_orientation(f)
    elif o is not None:
        o = orientation_list(o, len(f.source.charts))
    return OrientedMap(f, o)


def _pieces(dim: int, specs) -> list[tuple[int, Polytope]]:
    return [(int(p.get("chart_index", 0)), polytope(p, dim)) for p in specs]


def build_groupoid(sc: Scenario, decl: dict) -> Groupoid:
    kind = _need(decl, "kind")
    name = decl["id"]
    if kind == "trivial":
        return epg.trivial(sc.get(_need(decl, "complex"), "complex"), name=name)
    if kind == "point":
        return epg.point_groupoid()
    if kind == "action":
        M = sc.get(_need(decl, "complex"), "complex")
        return epg.action(M, [affine(e, M.dim) for e in _need(decl, "elements")], name=name)
    if kind in ("restrict", "cover"):
        if kind == "restrict":
            parent = sc.get(_need(decl, "groupoid"), "groupoid")
            G, R = epg.restrict(parent, _pieces(parent.dim, _need(decl, "pieces")), name=name)
        else:
            M = sc.get(_need(decl, "complex"), "complex")
            G, R = epg.cover(M, _pieces(M.dim, _need(decl, "pieces")), name=name)
        if "functor" in decl:
            _register(sc, decl["functor"], "functor", R)
        return G
    if kind == "explicit":
        X0 = sc.get(_need(decl, "objects_complex"), "complex")
        X1 = sc.get(_need(decl, "arrows_complex"), "complex")
        s = assignment(_need(decl, "s"), X1)
        t = assignment(_need(decl, "t"), X1)
        e = assignment(_need(decl, "e"), X0)
        i = assignment(_need(decl, "i"), X1)
        m = [(int(r["chart_index"]), affine(r, X1.dim)) for r in _need(decl, "m")]
        return epg.explicit(name, X0, X1, s, t, e, i, m)
    raise ScenarioError(f"unknown groupoid kind {kind!r}")


def _orient(F: Functor, spec) -> Functor:
    if spec is None:
        return F
    if spec == "canonical":
        return F.canonical()
    if isinstance(spec, dict):
        o0 = orientation_list(_need(spec, "objects"), len(F.source.X0.charts))
        o1 = orientation_list(_need(spec, "arrows"), len(F.source.X1.charts))
        return F.with_orientation(o0, o1)
    return epg.orient_functor(F, orientation_list(spec, len(F.source.X0.charts)))


def build_functor(sc: Scenario, decl: dict) -> Functor:
    kind = _need(decl, "kind")
    if kind in ("map", "equivariant", "explicit"):
        X = sc.get(_need(decl, "source"), "groupoid")
        Y = sc.get(_need(decl, "target"), "groupoid")
        if kind == "map":
            F = epg.map_functor(X, Y, assignment(_need(decl, "charts"), X.X0))
        elif kind == "equivariant":
            F = epg.equivariant_functor(X, Y, assignment(_need(decl, "charts"), X.X0), [int(h) for h in _need(decl, "hom")])
        else:
            F0 = ChartMap.build(X.X0, Y.X0, assignment(_need(decl, "objects"), X.X0))
            F1 = ChartMap.build(X.X1, Y.X1, assignment(_need(decl, "arrows"), X.X1))
            F = Functor(X, Y, F0, F1)
    elif kind == "identity":
        F = epg.identity_functor(sc.get(_need(decl, "groupoid"), "groupoid"))
    elif kind == "to_point":
        F = epg.to_point_functor(sc.get(_need(decl, "groupoid"), "groupoid"))
    elif kind == "compose":
        F = epg.compose_functors(sc.get(_need(decl, "outer"), "functor"), sc.get(_need(decl, "inner"), "functor"))
    elif kind == "same":
        F = sc.get(_need(decl, "functor"), "functor")
    else:
        raise ScenarioError(f"unknown functor kind {kind!r}")
    return _orient(F, decl.get("orientation"))


def build_morphism(sc: Scenario, decl: dict) -> orb.OrbMorphism:
    kind = _need(decl, "kind")
    name = decl["id"]
    if kind == "functor":
        f = orb.from_functor(sc.get(_need(decl, "functor"), "functor"), name)
    elif kind == "fraction":
        R = sc.get(_need(decl, "refinement"), "functor").canonical()
        f = orb.OrbMorphism(R, sc.get(_need(decl, "functor"), "functor"), name)
    elif kind == "identity":
        f = orb.identity(sc.get(_need(decl, "groupoid"), "groupoid"))
    elif kind == "inverse":
        f = orb.inverse_of_refinement(sc.get(_need(decl, "refinement"), "functor"))
    elif kind == "compose":
        f = orb.compose(sc.get(_need(decl, "outer"), "morphism"), sc.get(_need(decl, "inner"), "morphism"))
    else:
        raise ScenarioError(f"unknown morphism kind {kind!r}")
    if decl.get("negate"):
        f = f.negated()
    return f


def build_twomorphism(sc: Scenario, decl: dict) -> orb.Orb2Morphism:
    f = sc.get(_need(decl, "f"), "morphism")
    g = sc.get(_need(decl, "g"), "morphism")
    alpha = ChartMap.build(f.apex.X0, f.target.X1, assignment(_need(decl, "alpha"), f.apex.X0))
    o = decl.get("orientation")
    if o is not None:
        o = orientation_list(o, len(f.apex.X0.charts))
    return orb.simple_2morphism(f, g, alpha, orientation=o)


def build_fiber_product(sc: Scenario, decl: dict) -> WeakFiberProduct:
    w = epg.weak_fiber_product(sc.get(_need(decl, "left"), "functor"), sc.get(_need(decl, "right"), "functor"), name=decl["id"])
    _register(sc, f"{decl['id']}.P", "groupoid", w.P)
    _register(sc, f"{decl['id']}.A1", "functor", w.A1)
    _register(sc, f"{decl['id']}.A2", "functor", w.A2)
    return w


def _base_complex(sc: Scenario, ref: str) -> ChartComplex:
    kind = sc.kind(ref)
    if kind == "complex":
        return sc.get(ref, "complex")
    return sc.get(ref, "groupoid").X0


def _coeffs(table, degree: int, n: int) -> dict:
    if not isinstance(table, dict):
        raise ScenarioError(f"coefficient table expected, got {table!r}")
    out = {}
    for key, text in table.items():
        idx = tuple(int(k) for k in key.split(",")) if key.strip() else ()
        if len(idx) != degree:
            raise ScenarioError(f"multi-index {key!r} does not have degree {degree}")
        out[idx] = parse_poly(text, n)
    return out


def build_form(sc: Scenario, decl: dict) -> PPForm:
    base = _base_complex(sc, _need(decl, "on"))
    degree = int(_need(decl, "degree"))
    n = base.dim
    if "coefficients" in decl:
        per_chart = [decl["coefficients"]] * len(base.charts)
    else:
        per_chart = _need(decl, "charts")
        if len(per_chart) != len(base.charts):
            raise ScenarioError(f"form {decl['id']!r} needs {len(base.charts)} chart entries")
    cells = []
    for c, spec in enumerate(per_chart):
        if isinstance(spec, dict):
            cells.append([(base.polytope(c), _coeffs(spec, degree, n))])
        else:
            cells.append([(polytope(cell, n), _coeffs(_need(cell, "coefficients"), degree, n)) for cell in spec])
    smooth = decl.get("smoothness")
    return PPForm.from_cells(base, degree, cells, float("inf") if smooth is None else int(smooth))


def build_current(sc: Scenario, decl: dict) -> cu.Current:
    kind = _need(decl, "kind")
    if kind == "phi":
        G = sc.get(_need(decl, "groupoid"), "groupoid")
        return cu.phi(G, sc.get(_need(decl, "form"), "form"), orientation_list(_need(decl, "orientation"), len(G.X0.charts)))
    if kind == "dirac":
        G = sc.get(_need(decl, "groupoid"), "groupoid")
        return cu.dirac(G, int(_need(decl, "chart_index")), rat_vec(_need(decl, "point")))
    if kind == "simplex":
        G = sc.get(_need(decl, "groupoid"), "groupoid")
        return cu.chain(G, [cu.simplex_cell(G, int(_need(decl, "chart_index")), int(_need(decl, "dim")))])
    if kind == "push":
        return cu.pushforward(sc.get(_need(decl, "morphism"), "morphism"), sc.get(_need(decl, "current"), "current"))
    if kind == "pull":
        return cu.pullback(sc.get(_need(decl, "morphism"), "morphism"), sc.get(_need(decl, "current"), "current"))
    if kind == "d":
        return cu.d(sc.get(_need(decl, "current"), "current"))
    if kind == "psi":
        return cu.psi(sc.get(_need(decl, "current"), "current"))
    if kind == "left_wedge":
        return cu.left_wedge(sc.get(_need(decl, "form"), "form"), sc.get(_need(decl, "current"), "current"))
    if kind == "right_wedge":
        return cu.right_wedge(sc.get(_need(decl, "current"), "current"), sc.get(_need(decl, "form"), "form"))
    if kind == "combination":
        return cu.combination([(rat(c), sc.get(ref, "current")) for c, ref in _need(decl, "terms")])
    raise ScenarioError(f"unknown current kind {kind!r}")


BUILDERS = {
    "complex": build_complex,
    "chartmap": build_chartmap,
    "groupoid": build_groupoid,
    "functor": build_functor,
    "morphism": build_morphism,
    "twomorphism": build_twomorphism,
    "fiber_product": build_fiber_product,
    "form": build_form,
    "current": build_current,
}


def _register(sc: Scenario, ref: str, kind: str, value) -> None:
    if not isinstance(ref, str) or not ref:
        raise ScenarioError(f"object id must be a nonempty string, got {ref!r}")
    if ref in sc.objects:
        raise ScenarioError(f"duplicate object id {ref!r}")
    sc.objects[ref] = (kind, value)


# validation ---------------------------------------------------------------------------

_CHARTS = re.compile(r"charts? \[([\d, ]*)\]|charts? (\d+)")


def chart_witness(message: str) -> list[int]:
    """Chart indices named in a validator message."""
    out = []
    for m in _CHARTS.finditer(message):
        if m.group(1) is not None:
            out.extend(int(x) for x in m.group(1).replace(" ", "").split(",") if x)
        else:
            out.append(int(m.group(2)))
    return out


def validate_object(kind: str, value, decl: dict) -> list[str]:
    if kind == "complex":
        return value.validate()
    if kind == "chartmap":
        claimed = MapFlags(**decl["flags"]) if "flags" in decl else None
        return value.map.validate(claimed)
    if kind == "groupoid":
        return epg.validate_groupoid(value)
    if kind == "functor":
        issues = epg.validate_functor(value)
        if not issues and value.oriented:
            issues = epg.orientation_compatibility(value)
        return issues
    if kind == "fiber_product":
        return epg.validate_groupoid(value.P)
    if kind == "form" and decl.get("invariant"):
        G = decl["on"]
        return [] if epg.check_invariant(G, value) else ["form is not invariant"]
    return []


# loading ------------------------------------------------------------------------------


def parse_document(text: str, source: str = "<string>") -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{source}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError(f"{source}: top level must be an object")
    return doc


def load(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror}") from exc
    return from_document(parse_document(text, str(path)), path.name)


def from_document(doc: dict, path: str = "<string>") -> Scenario:
    sc = Scenario(str(doc.get("name", Path(path).stem)), str(doc.get("description", "")), path, {}, [])
    for k, decl in enumerate(doc.get("objects", [])):
        if not isinstance(decl, dict) or "id" not in decl or "type" not in decl:
            raise ScenarioError(f"{path}: object {k} needs 'id' and 'type'")
        kind = decl["type"]
        if kind not in BUILDERS:
            raise ScenarioError(f"{path}: object {decl['id']!r} has unknown type {kind!r}")
        try:
            value = BUILDERS[kind](sc, decl)
        except ScenarioError as exc:
            raise ScenarioError(f"{path}: object {decl['id']!r}: {exc}") from exc
        except (GeometryError, EPGError, FormError, cu.CurrentError, ValueError, KeyError, TypeError, IndexError) as exc:
            raise ScenarioError(f"{path}: object {decl['id']!r} cannot be built: {type(exc).__name__}: {exc}") from exc
        try:
            _register(sc, decl["id"], kind, value)
        except ScenarioError as exc:
            raise ScenarioError(f"{path}: {exc}") from exc
        check_decl = dict(decl)
        if kind == "form" and decl.get("invariant"):
            check_decl["on"] = sc.get(decl["on"], "groupoid")
        for msg in validate_object(kind, value, check_decl):
            sc.validation.append({"object": decl["id"], "type": kind, "issue": msg, "charts": chart_witness(msg)})
    suites = doc.get("suites", [])
    if not isinstance(suites, list):
        raise ScenarioError(f"{path}: 'suites' must be a list")
    from .suites import SUITES

    for k, inv in enumerate(suites):
        if not isinstance(inv, dict) or inv.get("suite") not in SUITES:
            raise ScenarioError(f"{path}: suite entry {k} names no known suite: {inv!r}")
        if inv.get("expect", "holds") not in ("holds", "violated"):
            raise ScenarioError(f"{path}: suite entry {k} has expect {inv.get('expect')!r}; use holds or violated")
        try:
            SUITES[inv["suite"]].check_args(inv, sc)
        except ScenarioError as exc:
            raise ScenarioError(f"{path}: suite entry {k}: {exc}") from exc
        sc.suites.append(inv)
    return sc


__all__ = [
    "OrientedMap",
    "Scenario",
    "ScenarioError",
    "chart_witness",
    "from_document",
    "load",
    "parse_document",
    "parse_poly",
]
