"""Étale proper groupoids whose object and arrow spaces are chart complexes.

Composable pairs are (g, h) with s(g) = t(h), and m(g, h) = g ∘ h, so that
s(g ∘ h) = s(h) and t(g ∘ h) = t(g).

Derived groupoids (restrictions to covers, boundaries, sub-groupoids) keep a
*lift* per arrow chart: the parent arrow chart and an injective affine map
into its coordinates. Their composition is derived from the parent's.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

from . import forms as fm
from .forms import PPForm
from .geometry import (
    Boundary,
    Chart,
    ChartComplex,
    ChartMap,
    FiberProduct,
    GeometryError,
    RelativeOrientation,
    boundary_relative_orientation,
    build_boundary,
    canonical_orientation,
    chart_from_raw,
    compose_maps,
    compose_orientation,
    decompose_boundary,
    fiber_product,
    identity_map,
    pullback_orientation,
    to_point,
    transpose_pullback_orientation,
    _pulled_functional,
)
from .kernel import AffineMap, Poly, Polytope, difference, linalg as la, normalize_halfspace


class EPGError(ValueError):
    pass


# chart-map helpers ------------------------------------------------------------


def left_inverse_map(a: AffineMap) -> AffineMap:
    """Affine left inverse of an injective affine map."""
    n = a.domain_dim
    if n == 0:
        return AffineMap((), (), a.codomain_dim)
    r = la.left_inverse(a.matrix, n)
    off = tuple(-v for v in la.matvec(r, a.offset))
    return AffineMap(tuple(r), off, a.codomain_dim)


def stack(a: AffineMap, b: AffineMap) -> AffineMap:
    return AffineMap(tuple(a.matrix) + tuple(b.matrix), tuple(a.offset) + tuple(b.offset), a.domain_dim)


def pair_map(fp: FiberProduct, a: ChartMap, b: ChartMap) -> ChartMap:
    """W → M ×_N P from a: W → M and b: W → P with f∘a = g∘b."""
    assignment = []
    for w in range(len(a.source.charts)):
        k1, am = a.assignment[w]
        k2, bm = b.assignment[w]
        c = fp.index(k1, k2)
        if c is None:
            raise EPGError(f"chart {w}: no fiber-product chart over ({k1}, {k2})")
        assignment.append((c, fp.select[c].compose(stack(am, bm))))
    return ChartMap.build(a.source, fp.complex, assignment)


def same_map(f: ChartMap, g: ChartMap) -> bool:
    return f.assignment == g.assignment


def map_mismatch(f: ChartMap, g: ChartMap) -> list[int]:
    return [i for i, (x, y) in enumerate(zip(f.assignment, g.assignment)) if x != y]


def restrict_map(f: ChartMap, sub: ChartComplex, lift: Sequence) -> ChartMap:
    """f precomposed with per-chart injections lift[k] = (chart, affine)."""
    assignment = []
    for j, a in lift:
        k, b = f.assignment[j]
        assignment.append((k, b.compose(a)))
    return ChartMap.build(sub, f.target, assignment)


def _locate(target: ChartComplex, candidates: Sequence[int], lifts: Sequence, image: AffineMap, source: Polytope):
    """Express an affine map into parent coordinates through one candidate chart."""
    for n in candidates:
        parent_map = lifts[n][1]
        coords = left_inverse_map(parent_map).compose(image)
        if parent_map.compose(coords) != image:
            continue
        poly = target.polytope(n)
        if all(poly.contains_point(coords(v)) for v in source.vertices):
            return n, coords
    return None


# groupoids --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Groupoid:
    name: str
    X0: ChartComplex
    X1: ChartComplex
    s: ChartMap
    t: ChartMap
    e: ChartMap
    i: ChartMap
    comp: FiberProduct
    m: ChartMap
    lift1: tuple = ()  # per arrow chart: (parent arrow chart, affine) for derived groupoids
    origin: tuple = ()  # how the groupoid was built, used to transport partitions of unity

    @property
    def dim(self) -> int:
        return self.X0.dim

    @cached_property
    def os_c(self) -> RelativeOrientation:
        return canonical_orientation(self.s)

    @cached_property
    def ot_c(self) -> RelativeOrientation:
        return canonical_orientation(self.t)

    def to_json(self) -> dict:
        return {"name": self.name, "objects": self.X0.to_json(), "arrows": self.X1.to_json()}


def _comp_and_m(X1: ChartComplex, s: ChartMap, t: ChartMap, m_from_comp) -> tuple[FiberProduct, ChartMap]:
    comp = fiber_product(s, t)
    return comp, m_from_comp(comp)


def trivial(M: ChartComplex, name: str = "trivial") -> Groupoid:
    ident = identity_map(M)
    comp = fiber_product(ident, ident)
    return Groupoid(name, M, M, ident, ident, ident, ident, comp, comp.q, origin=("trivial",))


def _find_element(elements: Sequence[AffineMap], a: AffineMap) -> int:
    for k, g in enumerate(elements):
        if g == a:
            return k
    raise EPGError("group elements are not closed under composition")


def action(M: ChartComplex, elements: Sequence[AffineMap], name: str = "action") -> Groupoid:
    """Action groupoid of a finite group of affine maps; element 0 must be the identity."""
    n = M.dim
    elements = tuple(elements)
    if not elements or elements[0] != AffineMap.identity(n):
        raise EPGError("the first group element must be the identity")
    nc = len(M.charts)
    # chart permutation induced by each element
    perm = []
    for g in elements:
        row = []
        for c in range(nc):
            img = [g(v) for v in M.polytope(c).vertices]
            hit = [d for d in range(nc) if all(M.polytope(d).contains_point(p) for p in img)]
            if not hit:
                raise EPGError(f"element maps chart {c} outside every chart")
            row.append(hit[0])
        perm.append(row)
    charts, s_assign, t_assign, index = [], [], [], {}
    for gi, g in enumerate(elements):
        for c in range(nc):
            index[(gi, c)] = len(charts)
            charts.append(M.charts[c])
            s_assign.append((c, AffineMap.identity(n)))
            t_assign.append((perm[gi][c], g))
    X1 = ChartComplex(n, tuple(charts))
    s = ChartMap.build(X1, M, s_assign)
    t = ChartMap.build(X1, M, t_assign)
    e = ChartMap.build(M, X1, [(index[(0, c)], AffineMap.identity(n)) for c in range(nc)])
    inv = []
    for gi, g in enumerate(elements):
        gin = _find_element(elements, g.inverse())
        for c in range(nc):
            inv.append((index[(gin, perm[gi][c])], g))
    i = ChartMap.build(X1, X1, inv)
    ident = AffineMap.identity(n)

    def m_from(comp: FiberProduct) -> ChartMap:
        assignment = []
        for k, (k1, k2) in enumerate(comp.pairs):
            g1, c1 = divmod(k1, nc)
            g2, c2 = divmod(k2, nc)
            prod = _find_element(elements, elements[g1].compose(elements[g2]))
            assignment.append((index[(prod, c2)], comp.p.affine(k)))
        return ChartMap.build(comp.complex, X1, assignment)

    comp, m = _comp_and_m(X1, s, t, m_from)
    return Groupoid(name, M, X1, s, t, e, i, comp, m, origin=("action", tuple(elements)))


def _derived(
    name: str,
    old: Groupoid,
    X0: ChartComplex,
    X1: ChartComplex,
    s: ChartMap,
    t: ChartMap,
    e: ChartMap,
    i: ChartMap,
    lift1: Sequence,
    origin: tuple,
) -> Groupoid:
    """Groupoid whose arrows embed into old arrows; m is inherited from old.m."""
    comp = fiber_product(s, t)
    assignment = []
    for c, (k1, k2) in enumerate(comp.pairs):
        p1, l1 = lift1[k1]
        p2, l2 = lift1[k2]
        og = l1.compose(comp.q.affine(c))
        oh = l2.compose(comp.p.affine(c))
        oc = old.comp.index(p1, p2)
        if oc is None:
            raise EPGError(f"composable pair ({k1}, {k2}) has no parent composable chart")
        km, mm = old.m.assignment[oc]
        image = mm.compose(old.comp.select[oc].compose(stack(og, oh)))
        cands = [
            n
            for n in range(len(X1.charts))
            if lift1[n][0] == km
            and s.target_index(n) == s.target_index(k2)
            and t.target_index(n) == t.target_index(k1)
        ]
        hit = _locate(X1, cands, lift1, image, comp.complex.polytope(c))
        if hit is None:
            raise EPGError(f"composite of arrow charts ({k1}, {k2}) lands in no arrow chart")
        assignment.append(hit)
    m = ChartMap.build(comp.complex, X1, assignment)
    return Groupoid(name, X0, X1, s, t, e, i, comp, m, tuple(lift1), origin)


def _genuine_set(ch: Chart) -> set:
    return {h for _, h in ch.genuine_facets()}


def restrict(G: Groupoid, pieces: Sequence[tuple[int, Polytope]], name: str = "restricted") -> tuple[Groupoid, "Functor"]:
    """Groupoid of a family of closed pieces of object charts, and its functor to G.

    Piece facets not lying on genuine boundary of the parent chart are cuts.
    """
    n = G.dim
    ident = AffineMap.identity(n)
    objs = []
    for a, (c, U) in enumerate(pieces):
        parent = G.X0.charts[c]
        gen = _genuine_set(parent)
        raw = [(h[0], h[1], h in gen) for h in parent.polytope.halfspaces]
        for h in U.halfspaces:
            nh = normalize_halfspace(*h)
            if nh is None or nh == "infeasible":
                continue
            raw.append((nh[0], nh[1], nh in gen))
        ch = chart_from_raw(n, raw)
        if ch is None:
            raise EPGError(f"piece {a} is not full-dimensional inside chart {c}")
        objs.append(ch)
    X0 = ChartComplex(n, tuple(objs))
    by_parent: dict[int, list[int]] = {}
    for a, (c, _) in enumerate(pieces):
        by_parent.setdefault(c, []).append(a)
    arrows, lift1, s_as, t_as, triple = [], [], [], [], {}
    for k, ch in enumerate(G.X1.charts):
        cs, sk = G.s.assignment[k]
        ct, tk = G.t.assignment[k]
        for a in by_parent.get(cs, []):
            for b in by_parent.get(ct, []):
                raw = [(h[0], h[1], h not in ch.cuts) for h in ch.polytope.halfspaces]
                for obj, mp in ((objs[a], sk), (objs[b], tk)):
                    for h in obj.polytope.halfspaces:
                        nn, off = _pulled_functional(mp, h)
                        raw.append((nn, off, h not in obj.cuts))
                new = chart_from_raw(n, raw)
                if new is None:
                    continue
                triple[(a, k, b)] = len(arrows)
                arrows.append(new)
                lift1.append((k, ident))
                s_as.append((a, sk))
                t_as.append((b, tk))
    X1 = ChartComplex(n, tuple(arrows))
    s = ChartMap.build(X1, X0, s_as)
    t = ChartMap.build(X1, X0, t_as)
    e_as = []
    for a, (c, _) in enumerate(pieces):
        ke, em = G.e.assignment[c]
        if (a, ke, a) not in triple:
            raise EPGError(f"piece {a} has no unit arrows")
        e_as.append((triple[(a, ke, a)], em))
    e = ChartMap.build(X0, X1, e_as)
    i_as = []
    for (a, k, b), idx in sorted(triple.items(), key=lambda kv: kv[1]):
        ki, im = G.i.assignment[k]
        if (b, ki, a) not in triple:
            raise EPGError(f"arrow chart {idx} has no inverse chart")
        i_as.append((triple[(b, ki, a)], im))
    i = ChartMap.build(X1, X1, i_as)
    H = _derived(name, G, X0, X1, s, t, e, i, lift1, ("restrict", G, tuple(pieces)))
    R0 = ChartMap.build(X0, G.X0, [(c, ident) for c, _ in pieces])
    R1 = ChartMap.build(X1, G.X1, lift1)
    return H, Functor(H, G, R0, R1)


def cover(M: ChartComplex, pieces: Sequence[tuple[int, Polytope]], name: str = "cover") -> tuple[Groupoid, "Functor"]:
    return restrict(trivial(M, name=f"{name}-base"), pieces, name=name)


def _boundary_restriction(f: ChartMap, bs: Boundary, bt: Boundary) -> ChartMap:
    """∂f: ∂M → ∂N for a local diffeomorphism f."""
    assignment = []
    for k, (c, h) in enumerate(bs.facet_index):
        j, a = f.assignment[c]
        found = None
        for kk, (cc, hh) in enumerate(bt.facet_index):
            if cc != j:
                continue
            if normalize_halfspace(*_pulled_functional(a, hh)) == h:
                found = kk
                break
        if found is None:
            raise EPGError(f"boundary chart {k} does not map onto a boundary chart")
        iota_s = bs.inclusion.affine(k)
        iota_t = bt.inclusion.affine(found)
        assignment.append((found, left_inverse_map(iota_t).compose(a.compose(iota_s))))
    return ChartMap.build(bs.complex, bt.complex, assignment)


def boundary_groupoid(G: Groupoid) -> tuple[Groupoid, "Functor"]:
    """∂G with its inclusion functor, oriented by the relative boundary orientation."""
    b0 = build_boundary(G.X0)
    b1 = build_boundary(G.X1)
    s = _boundary_restriction(G.s, b1, b0)
    t = _boundary_restriction(G.t, b1, b0)
    e = _boundary_restriction(G.e, b0, b1)
    i = _boundary_restriction(G.i, b1, b1)
    lift1 = tuple(b1.inclusion.assignment)
    H = _derived(f"boundary({G.name})", G, b0.complex, b1.complex, s, t, e, i, lift1, ("boundary", G))
    inc = Functor(H, G, b0.inclusion, b1.inclusion, boundary_relative_orientation(b0), boundary_relative_orientation(b1))
    return H, inc


def sub_groupoid(G: Groupoid, objects: Sequence[int], name: str = "sub") -> tuple[Groupoid, "Functor"]:
    """Full sub-groupoid on a set of object charts closed under arrows."""
    objects = list(objects)
    pos = {c: k for k, c in enumerate(objects)}
    arrows = [k for k in range(len(G.X1.charts)) if G.s.target_index(k) in pos]
    for k in arrows:
        if G.t.target_index(k) not in pos:
            raise EPGError(f"arrow chart {k} leaves the chosen object charts")
    apos = {k: r for r, k in enumerate(arrows)}
    X0 = G.X0.sub(objects)
    X1 = G.X1.sub(arrows)

    def re(f: ChartMap, src: list, tgt_pos: dict, tgt: ChartComplex, srcc: ChartComplex) -> ChartMap:
        return ChartMap.build(srcc, tgt, [(tgt_pos[f.target_index(k)], f.affine(k)) for k in src])

    s = re(G.s, arrows, pos, X0, X1)
    t = re(G.t, arrows, pos, X0, X1)
    e = re(G.e, objects, apos, X1, X0)
    i = re(G.i, arrows, apos, X1, X1)
    n = G.dim
    lift1 = tuple((k, AffineMap.identity(n)) for k in arrows)
    H = _derived(name, G, X0, X1, s, t, e, i, lift1, ("sub", G, tuple(objects)))
    inc = Functor(H, G, ChartMap.build(X0, G.X0, [(c, AffineMap.identity(n)) for c in objects]), ChartMap.build(X1, G.X1, lift1))
    return H, inc


def explicit(name: str, X0: ChartComplex, X1: ChartComplex, s, t, e, i, m_assignment) -> Groupoid:
    """Groupoid from raw structure maps; m is given on the charts of fiber_product(s, t)."""
    s = ChartMap.build(X1, X0, s)
    t = ChartMap.build(X1, X0, t)
    e = ChartMap.build(X0, X1, e)
    i = ChartMap.build(X1, X1, i)
    comp = fiber_product(s, t)
    if len(m_assignment) != len(comp.complex.charts):
        raise EPGError(f"m needs {len(comp.complex.charts)} chart entries, got {len(m_assignment)}")
    m = ChartMap.build(comp.complex, X1, m_assignment)
    return Groupoid(name, X0, X1, s, t, e, i, comp, m, origin=("explicit",))


# validation -------------------------------------------------------------------


def _ident(cx: ChartComplex) -> ChartMap:
    return identity_map(cx)


def validate_groupoid(G: Groupoid) -> list[str]:
    issues = []
    for label, cx in (("objects", G.X0), ("arrows", G.X1)):
        for msg in cx.validate():
            issues.append(f"{label}: {msg}")
    if issues:
        return issues
    for label, f in (("s", G.s), ("t", G.t), ("e", G.e), ("i", G.i), ("m", G.m)):
        for msg in f.validate():
            issues.append(f"{label}: {msg}")
    for label, f in (("s", G.s), ("t", G.t)):
        if not f.flags.local_diffeo:
            issues.append(f"{label} is not a local diffeomorphism")
    if issues:
        return issues

    def eq(label: str, f: ChartMap, g: ChartMap) -> None:
        bad = map_mismatch(f, g)
        if bad:
            issues.append(f"{label} fails on charts {bad}")

    idX0 = _ident(G.X0)
    idX1 = _ident(G.X1)
    eq("s∘e = id", compose_maps(G.s, G.e), idX0)
    eq("t∘e = id", compose_maps(G.t, G.e), idX0)
    eq("s∘i = t", compose_maps(G.s, G.i), G.t)
    eq("t∘i = s", compose_maps(G.t, G.i), G.s)
    eq("i∘i = id", compose_maps(G.i, G.i), idX1)
    eq("s∘m = s∘p", compose_maps(G.s, G.m), compose_maps(G.s, G.comp.p))
    eq("t∘m = t∘q", compose_maps(G.t, G.m), compose_maps(G.t, G.comp.q))
    try:
        left = pair_map(G.comp, compose_maps(G.e, G.t), idX1)
        eq("m(e∘t, id) = id", compose_maps(G.m, left), idX1)
        right = pair_map(G.comp, idX1, compose_maps(G.e, G.s))
        eq("m(id, e∘s) = id", compose_maps(G.m, right), idX1)
        inv_l = pair_map(G.comp, G.i, idX1)
        eq("m(i, id) = e∘s", compose_maps(G.m, inv_l), compose_maps(G.e, G.s))
        inv_r = pair_map(G.comp, idX1, G.i)
        eq("m(id, i) = e∘t", compose_maps(G.m, inv_r), compose_maps(G.e, G.t))
        triples = fiber_product(compose_maps(G.s, G.comp.p), G.t)
        g = compose_maps(G.comp.q, triples.q)
        h = compose_maps(G.comp.p, triples.q)
        k = triples.p
        gh = compose_maps(G.m, triples.q)
        lhs = compose_maps(G.m, pair_map(G.comp, gh, k))
        hk = compose_maps(G.m, pair_map(G.comp, h, k))
        rhs = compose_maps(G.m, pair_map(G.comp, g, hk))
        eq("associativity", lhs, rhs)
    except (EPGError, GeometryError) as exc:
        issues.append(f"structure maps are inconsistent: {exc}")
    return issues


# functors and natural transformations -----------------------------------------


@dataclass(frozen=True, eq=False)
class Functor:
    source: Groupoid
    target: Groupoid
    F0: ChartMap
    F1: ChartMap
    o0: RelativeOrientation | None = None
    o1: RelativeOrientation | None = None

    @property
    def rdim(self) -> int:
        return self.source.dim - self.target.dim

    @property
    def submersion(self) -> bool:
        return self.F0.flags.submersion and self.F1.flags.submersion

    @property
    def local_diffeo(self) -> bool:
        return self.F0.flags.local_diffeo and self.F1.flags.local_diffeo

    @property
    def strongly_smooth(self) -> bool:
        return self.F0.flags.strongly_smooth and self.F1.flags.strongly_smooth

    @property
    def oriented(self) -> bool:
        return self.o0 is not None and self.o1 is not None

    def with_orientation(self, o0, o1) -> "Functor":
        return Functor(self.source, self.target, self.F0, self.F1, tuple(o0), tuple(o1))

    def canonical(self) -> "Functor":
        return self.with_orientation(canonical_orientation(self.F0), canonical_orientation(self.F1))


def orient_functor(F: Functor, o0: Sequence[int]) -> Functor:
    """Orient F0 by ``o0`` and F1 by the unique choice compatible with s."""
    X, Y = F.source, F.target
    o1 = tuple(o0[X.s.target_index(k)] * X.os_c[k] * Y.os_c[F.F1.target_index(k)] for k in range(len(X.X1.charts)))
    return F.with_orientation(tuple(o0), o1)


def identity_functor(G: Groupoid) -> Functor:
    return Functor(G, G, _ident(G.X0), _ident(G.X1)).canonical()


def compose_functors(F: Functor, G: Functor) -> Functor:
    """F ∘ G."""
    H = Functor(G.source, F.target, compose_maps(F.F0, G.F0), compose_maps(F.F1, G.F1))
    if F.oriented and G.oriented:
        H = H.with_orientation(compose_orientation(F.o0, G.o0, G.F0), compose_orientation(F.o1, G.o1, G.F1))
    return H


def to_point_functor(G: Groupoid, o0: RelativeOrientation | None = None) -> Functor:
    pt = point_groupoid()
    F0 = ChartMap.build(G.X0, pt.X0, [(0, AffineMap((), (), G.dim)) for _ in G.X0.charts])
    F1 = ChartMap.build(G.X1, pt.X1, [(0, AffineMap((), (), G.dim)) for _ in G.X1.charts])
    F = Functor(G, pt, F0, F1)
    if o0 is not None:
        # arrows carry the orientation transported by s
        o1 = tuple(o0[G.s.target_index(k)] * G.os_c[k] for k in range(len(G.X1.charts)))
        F = F.with_orientation(o0, o1)
    return F


def map_functor(X: Groupoid, Y: Groupoid, assignment: Sequence) -> Functor:
    """Functor between trivial groupoids induced by a chart map."""
    if X.origin[:1] != ("trivial",) or Y.origin[:1] != ("trivial",):
        raise EPGError("map functors connect trivial groupoids")
    f0 = ChartMap.build(X.X0, Y.X0, assignment)
    f1 = ChartMap.build(X.X1, Y.X1, assignment)
    return Functor(X, Y, f0, f1)


def equivariant_functor(X: Groupoid, Y: Groupoid, assignment: Sequence, hom: Sequence[int]) -> Functor:
    """Functor between action groupoids from an equivariant chart map.

    ``hom[g]`` is the index of the image of element g.
    """
    if X.origin[:1] != ("action",) or Y.origin[:1] != ("action",):
        raise EPGError("equivariant functors connect action groupoids")
    f0 = ChartMap.build(X.X0, Y.X0, assignment)
    nx, ny = len(X.X0.charts), len(Y.X0.charts)
    arrows = []
    for gi in range(len(X.origin[1])):
        for c in range(nx):
            j, a = f0.assignment[c]
            arrows.append((hom[gi] * ny + j, a))
    f1 = ChartMap.build(X.X1, Y.X1, arrows)
    return Functor(X, Y, f0, f1)


_POINT: list = []


def point_groupoid() -> Groupoid:
    if not _POINT:
        _POINT.append(trivial(ChartComplex.point(), name="point"))
    return _POINT[0]


def validate_functor(F: Functor) -> list[str]:
    X, Y = F.source, F.target
    issues = []
    for label, f in (("F0", F.F0), ("F1", F.F1)):
        for msg in f.validate():
            issues.append(f"{label}: {msg}")
    if issues:
        return issues

    def eq(label, f, g):
        bad = map_mismatch(f, g)
        if bad:
            issues.append(f"{label} fails on charts {bad}")

    eq("s∘F1 = F0∘s", compose_maps(Y.s, F.F1), compose_maps(F.F0, X.s))
    eq("t∘F1 = F0∘t", compose_maps(Y.t, F.F1), compose_maps(F.F0, X.t))
    eq("F1∘e = e∘F0", compose_maps(F.F1, X.e), compose_maps(Y.e, F.F0))
    eq("F1∘i = i∘F1", compose_maps(F.F1, X.i), compose_maps(Y.i, F.F1))
    if not issues:
        try:
            lhs = compose_maps(F.F1, X.m)
            rhs = compose_maps(Y.m, pair_map(Y.comp, compose_maps(F.F1, X.comp.q), compose_maps(F.F1, X.comp.p)))
            eq("F1∘m = m∘(F1×F1)", lhs, rhs)
        except (EPGError, GeometryError) as exc:
            issues.append(f"composition is not preserved: {exc}")
    if F.oriented:
        issues.extend(orientation_compatibility(F))
    return issues


def orientation_compatibility(F: Functor) -> list[str]:
    X, Y = F.source, F.target
    issues = []
    for label, sx, sy, osx, osy in (("s", X.s, Y.s, X.os_c, Y.os_c), ("t", X.t, Y.t, X.ot_c, Y.ot_c)):
        lhs = compose_orientation(osy, F.o1, F.F1)
        rhs = compose_orientation(F.o0, osx, sx)
        bad = [k for k, (a, b) in enumerate(zip(lhs, rhs)) if a != b]
        if bad:
            issues.append(f"relative orientation incompatible with {label} on arrow charts {bad}")
    return issues


@dataclass(frozen=True, eq=False)
class NaturalTransformation:
    F: Functor
    G: Functor
    alpha: ChartMap  # X0 -> Y1
    orientation: RelativeOrientation | None = None


def validate_transformation(nt: NaturalTransformation) -> list[str]:
    F, G = nt.F, nt.G
    X, Y = F.source, F.target
    issues = []

    def eq(label, f, g):
        bad = map_mismatch(f, g)
        if bad:
            issues.append(f"{label} fails on charts {bad}")

    eq("s∘α = F0", compose_maps(Y.s, nt.alpha), F.F0)
    eq("t∘α = G0", compose_maps(Y.t, nt.alpha), G.F0)
    if not issues:
        try:
            lhs = compose_maps(Y.m, pair_map(Y.comp, G.F1, compose_maps(nt.alpha, X.s)))
            rhs = compose_maps(Y.m, pair_map(Y.comp, compose_maps(nt.alpha, X.t), F.F1))
            eq("naturality", lhs, rhs)
        except (EPGError, GeometryError) as exc:
            issues.append(f"naturality square cannot be formed: {exc}")
    if nt.orientation is not None:
        if not (F.oriented and G.oriented):
            issues.append("oriented transformation between unoriented functors")
        else:
            if compose_orientation(Y.os_c, nt.orientation, nt.alpha) != tuple(F.o0):
                issues.append("o^s_c ∘ o^α differs from o^{F0}")
            if compose_orientation(Y.ot_c, nt.orientation, nt.alpha) != tuple(G.o0):
                issues.append("o^t_c ∘ o^α differs from o^{G0}")
    return issues


# forms on groupoids -----------------------------------------------------------


def J(G: Groupoid, a: PPForm) -> PPForm:
    """t_* s^* with canonical orientations."""
    return fm.pushforward(G.t, G.ot_c, fm.pullback(G.s, a))


def J_transposed(G: Groupoid, a: PPForm) -> PPForm:
    return fm.pushforward(G.s, G.os_c, fm.pullback(G.t, a))


def coboundary(G: Groupoid, b: PPForm) -> PPForm:
    """(s_* − t_*) b for a form b on arrows."""
    return fm.pushforward(G.s, G.os_c, b) - fm.pushforward(G.t, G.ot_c, b)


def check_invariant(G: Groupoid, a: PPForm) -> bool:
    return fm.pullback(G.s, a).equals(fm.pullback(G.t, a))


def is_clean(G: Groupoid, chart_indices: Sequence[int] = ()) -> bool:
    """Every subset of a compact presentation is clean when closed."""
    return all(ch.polytope.is_bounded() for ch in G.X0.charts)


def coinvariant_equal(G: Groupoid, a: PPForm, b: PPForm) -> bool:
    return J(G, a - b).is_zero()


def K(rho: PPForm, a: PPForm) -> PPForm:
    return fm.wedge(rho, a)


def one(G: Groupoid) -> PPForm:
    return PPForm.constant(G.X0, 1)


def is_partition(G: Groupoid, rho: PPForm) -> list[str]:
    issues = []
    if rho.degree != 0:
        issues.append("partition of unity must be a function")
        return issues
    if not J(G, rho).equals(one(G)):
        issues.append("t_* s^* rho differs from 1")
    for c, cells in enumerate(rho.normalized):
        for region, coeffs in cells:
            p = coeffs.get(())
            for v in region.vertices:
                val = p(v) if p is not None else la.ZERO
                if val < 0 or val > 1:
                    issues.append(f"chart {c}: value {val} outside [0, 1]")
                    break
    issues.extend(fm.validate_smoothness(rho))
    return issues


def _ramp(cx: ChartComplex, chart: int, h: tuple, width) -> PPForm:
    """C¹ cutoff in the functional ℓ = b − a·x: 0 for ℓ ≤ 0, 1 for ℓ ≥ width."""
    n = cx.dim
    a, b = h
    ell = Poly.linear([-x for x in a], b)
    u = ell.scale(1 / la.to_rat(width))
    smooth = u * u * 3 - u * u * u * 2
    ramp_region = Polytope.make(n, [(a, b), (tuple(-x for x in a), -(b - width))])
    flat_region = Polytope.make(n, [(tuple(a), b - width)])
    per = [[] for _ in cx.charts]
    per[chart] = [(ramp_region, {(): smooth}), (flat_region, {(): Poly.const(n, 1)})]
    return PPForm.from_cells(cx, 0, per, smoothness=1)


def _indicator(cx: ChartComplex, chart: int) -> PPForm:
    per = [{} for _ in cx.charts]
    per[chart] = {(): Poly.const(cx.dim, 1)}
    return PPForm.from_polys(cx, 0, per)


def cover_weights(G: Groupoid, pieces: Sequence[tuple[int, Polytope]], cut_sets: Sequence, width) -> list[PPForm]:
    """Per piece a, w_a = φ_a ∏_{b<a} (1 − φ_b) on the parent chart (pieces on one chart)."""
    cx = G.X0
    phis = []
    for a, (c, U) in enumerate(pieces):
        phi = _indicator(cx, c)
        for h in cut_sets[a]:
            phi = fm.wedge(phi, _ramp(cx, c, h, width))
        phis.append(phi)
    weights = []
    for a, (c, _) in enumerate(pieces):
        w = phis[a]
        for b in range(a):
            if pieces[b][0] == c:
                w = fm.wedge(w, _indicator(cx, c) - phis[b])
        weights.append(w)
    return weights


def find_partition_of_unity(G: Groupoid) -> PPForm:
    """Constant candidate, then transport along the groupoid's construction, then failure.

    The result is cached on the groupoid.
    """
    cached = G.__dict__.get("_partition")
    if cached is None:
        cached = _find_partition(G)
        G.__dict__["_partition"] = cached
    return cached


def _find_partition(G: Groupoid) -> PPForm:
    if G.X0.charts:
        j1 = J(G, one(G))
        c = j1.evaluate(0, G.X0.polytope(0).centroid()).get((), la.ZERO)
        if c > 0 and j1.equals(PPForm.constant(G.X0, c)):
            return PPForm.constant(G.X0, 1 / c)
    kind = G.origin[0] if G.origin else ""
    if kind == "restrict":
        return _restricted_partition(G)
    if kind in ("boundary", "sub"):
        parent = G.origin[1]
        rho = find_partition_of_unity(parent)
        inc = _inclusion_map(G)
        out = fm.pullback(inc, rho)
        if is_partition(G, out):
            raise EPGError("restricted partition of unity failed validation")
        return out
    if kind == "fiber":
        wfp = G.origin[1]
        return wfp.partition()
    raise EPGError(f"no partition of unity construction applies to {G.name}")


def _inclusion_map(G: Groupoid) -> ChartMap:
    kind, parent = G.origin[0], G.origin[1]
    if kind == "boundary":
        return build_boundary(parent.X0).inclusion
    objs = G.origin[2]
    return ChartMap.build(G.X0, parent.X0, [(c, AffineMap.identity(G.dim)) for c in objs])


def _restricted_partition(G: Groupoid) -> PPForm:
    parent, pieces = G.origin[1], G.origin[2]
    rho_parent = find_partition_of_unity(parent)
    n = G.dim
    R0 = ChartMap.build(G.X0, parent.X0, [(c, AffineMap.identity(n)) for c, _ in pieces])
    # cuts inherited from the parent chart are already handled by the parent's ρ
    cut_sets = [sorted(G.X0.charts[a].cuts - parent.X0.charts[c].cuts) for a, (c, _) in enumerate(pieces)]
    width = la.ONE
    for _ in range(16):
        width = width / 2
        weights = cover_weights(parent, pieces, cut_sets, width)
        cells = []
        for a in range(len(pieces)):
            form = fm.pullback(R0, fm.wedge(rho_parent, weights[a]))
            cells.append([(cell.region, cell.coeffs) for cell in form.cells[a]])
        rho = PPForm.from_cells(G.X0, 0, cells, smoothness=min(1, rho_parent.smoothness))
        if J(G, rho).equals(one(G)):
            return rho
    raise EPGError(f"cover weights for {G.name} never sum to one; pieces may not cover")


def integrate_average(G: Groupoid, xi: PPForm, rho: PPForm | None = None, o0=None) -> object:
    """∫_{X0} ρ ξ."""
    if rho is None:
        rho = find_partition_of_unity(G)
    return fm.integrate(fm.wedge(rho, xi), o0)


def functor_pullback(F: Functor, a: PPForm) -> PPForm:
    return fm.pullback(F.F0, a)


def functor_pushforward(F: Functor, a: PPForm, rho: PPForm | None = None) -> PPForm:
    """J ∘ (F0)_* ∘ K."""
    if not F.oriented:
        raise EPGError("push-forward needs a relatively oriented functor")
    if not F.F0.flags.submersion:
        raise EPGError("push-forward needs a submersion")
    if rho is None:
        rho = find_partition_of_unity(F.source)
    return J(F.target, fm.pushforward(F.F0, F.o0, K(rho, a)))


def integrate(G: Groupoid, xi: PPForm, o0) -> object:
    """∫_X ξ = F_* ξ for the oriented map to the point; returns the scalar."""
    F = to_point_functor(G, o0)
    issues = orientation_compatibility(F)
    if issues:
        raise EPGError("; ".join(issues))
    out = functor_pushforward(F, xi)
    if out.degree != 0:
        return la.ZERO
    vals = out.evaluate(0, ())
    return vals.get((), la.ZERO)


# boundary pieces --------------------------------------------------------------


def vertical_boundary(F: Functor) -> tuple[Groupoid, Functor]:
    """∂ᵛX as a sub-groupoid of ∂X, with the inclusion into X."""
    X = F.source
    B, inc = boundary_groupoid(X)
    split0 = decompose_boundary(F.F0, build_boundary(X.X0))
    V, sub_inc = sub_groupoid(B, split0.vertical, name=f"vertical({X.name})")
    full = compose_functors(inc, sub_inc.canonical())
    return V, full


def restrict_functor(F: Functor, inc: Functor) -> Functor:
    """F ∘ inc with orientation o^F ∘ o^inc."""
    return compose_functors(F, inc)


# weak fiber products -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _Level:
    """X ×_{fx, s} Z1 ×_{t, fy} Y realized as A ×_{Z1} B."""

    A: FiberProduct  # X ×_{fx, s} Z1
    B: FiberProduct  # Z1 ×_{t, fy} Y
    P: FiberProduct  # A ×_{Z1} B

    @cached_property
    def pr_x(self) -> ChartMap:
        return compose_maps(self.A.q, self.P.q)

    @cached_property
    def pr_z(self) -> ChartMap:
        return compose_maps(self.A.p, self.P.q)

    @cached_property
    def pr_y(self) -> ChartMap:
        return compose_maps(self.B.p, self.P.p)

    def triple(self, a: ChartMap, b: ChartMap, c: ChartMap) -> ChartMap:
        return pair_map(self.P, pair_map(self.A, a, b), pair_map(self.B, b, c))

    def pullback_orientation(self, o_y: RelativeOrientation) -> RelativeOrientation:
        """o^{C²}_c ∘ S^* t^* o_y on the projection to X."""
        o_t = pullback_orientation(self.B, o_y)
        o_c1 = pullback_orientation(self.P, o_t)
        return compose_orientation(canonical_orientation(self.A.q), o_c1, self.P.q)

    def transpose_orientation(self, o_x: RelativeOrientation) -> RelativeOrientation:
        o_s = transpose_pullback_orientation(self.A, o_x)
        o_b1 = transpose_pullback_orientation(self.P, o_s)
        return compose_orientation(canonical_orientation(self.B.p), o_b1, self.P.p)


def _level(fx: ChartMap, Z: Groupoid, fy: ChartMap) -> _Level:
    A = fiber_product(fx, Z.s)
    B = fiber_product(Z.t, fy)
    P = fiber_product(A.p, B.q)
    return _Level(A, B, P)


@dataclass(frozen=True, eq=False)
class WeakFiberProduct:
    F: Functor  # X -> Z
    G: Functor  # Y -> Z
    P: Groupoid
    A1: Functor
    A2: Functor
    alpha: NaturalTransformation  # G∘A2 => F∘A1
    level0: _Level
    level1: _Level

    def pullback_orientation(self) -> tuple:
        """F^* o^G on A1."""
        G, Z = self.G, self.G.target
        o1 = compose_orientation(Z.os_c, G.o1, G.F1)
        return self.level0.pullback_orientation(G.o0), self.level1.pullback_orientation(o1)

    def transpose_orientation(self) -> tuple:
        """ᵗG^* o^F on A2."""
        F, Z = self.F, self.F.target
        o1 = compose_orientation(Z.os_c, F.o1, F.F1)
        return self.level0.transpose_orientation(F.o0), self.level1.transpose_orientation(o1)

    def oriented_A1(self) -> Functor:
        return self.A1.with_orientation(*self.pullback_orientation())

    def oriented_A2(self) -> Functor:
        return self.A2.with_orientation(*self.transpose_orientation())

    def partition(self, rho_x: PPForm | None = None, rho_y: PPForm | None = None) -> PPForm:
        """A10^* ρ_X · A20^* ρ_Y."""
        if rho_x is None:
            rho_x = find_partition_of_unity(self.F.source)
        if rho_y is None:
            rho_y = find_partition_of_unity(self.G.source)
        return fm.wedge(fm.pullback(self.A1.F0, rho_x), fm.pullback(self.A2.F0, rho_y))


def weak_fiber_product(F: Functor, G: Functor, name: str | None = None) -> WeakFiberProduct:
    X, Y, Z = F.source, G.source, F.target
    if G.target is not Z:
        raise EPGError("functors have different targets")
    L0 = _level(F.F0, Z, G.F0)
    L1 = _level(compose_maps(Z.s, F.F1), Z, compose_maps(Z.s, G.F1))
    P0, P1 = L0.P.complex, L1.P.complex
    x1, z1, y1 = L1.pr_x, L1.pr_z, L1.pr_y
    s = L0.triple(compose_maps(X.s, x1), z1, compose_maps(Y.s, y1))
    inner = compose_maps(Z.m, pair_map(Z.comp, z1, compose_maps(Z.i, compose_maps(F.F1, x1))))
    z2 = compose_maps(Z.m, pair_map(Z.comp, compose_maps(G.F1, y1), inner))
    t = L0.triple(compose_maps(X.t, x1), z2, compose_maps(Y.t, y1))
    e = L1.triple(compose_maps(X.e, L0.pr_x), L0.pr_z, compose_maps(Y.e, L0.pr_y))
    i = L1.triple(compose_maps(X.i, x1), z2, compose_maps(Y.i, y1))
    comp = fiber_product(s, t)
    gq, fp_ = comp.q, comp.p
    mx = compose_maps(X.m, pair_map(X.comp, compose_maps(x1, gq), compose_maps(x1, fp_)))
    my = compose_maps(Y.m, pair_map(Y.comp, compose_maps(y1, gq), compose_maps(y1, fp_)))
    m = L1.triple(mx, compose_maps(z1, fp_), my)
    label = name or f"{X.name}×{Y.name}"
    P = Groupoid(label, P0, P1, s, t, e, i, comp, m, origin=("fiber",))
    A1 = Functor(P, X, L0.pr_x, x1)
    A2 = Functor(P, Y, L0.pr_y, y1)
    alpha = NaturalTransformation(compose_functors(G, A2), compose_functors(F, A1), compose_maps(Z.i, L0.pr_z))
    w = WeakFiberProduct(F, G, P, A1, A2, alpha, L0, L1)
    object.__setattr__(P, "origin", ("fiber", w))
    return w


# refinements --------------------------------------------------------------------


def _covers(target: Polytope, pieces: Sequence[Polytope]) -> bool:
    remaining = [target]
    for p in pieces:
        remaining = [r for x in remaining for r in difference(x, p)]
        if not remaining:
            return True
    return not remaining


def validate_refinement(F: Functor) -> list[str]:
    """Local diffeomorphism, essentially surjective and fully faithful (exact)."""
    X, Y = F.source, F.target
    issues = validate_functor(F)
    if issues:
        return issues
    if not F.local_diffeo:
        issues.append("not a local diffeomorphism")
        return issues
    # essential surjectivity: t∘pr₂ on X0 ×_{F0, s} Y1 covers Y0
    ess = fiber_product(F.F0, Y.s)
    reach = compose_maps(Y.t, ess.p)
    for c in range(len(Y.X0.charts)):
        imgs = []
        for k in range(len(ess.complex.charts)):
            j, a = reach.assignment[k]
            if j == c:
                imgs.append(ess.complex.polytope(k).image(a))
        if not _covers(Y.X0.polytope(c), imgs):
            issues.append(f"object chart {c} of the target is not reached up to isomorphism")
    # full faithfulness: (s, F1, t) is a bijection onto X0 ×_{F0,s} Y1 ×_{t,F0} X0
    trip = fiber_product(compose_maps(Y.t, ess.p), F.F0)
    arrows = pair_map(trip, pair_map(ess, X.s, F.F1), X.t)
    for c in range(len(trip.complex.charts)):
        imgs = []
        for k in range(len(X.X1.charts)):
            j, a = arrows.assignment[k]
            if j == c:
                imgs.append(X.X1.polytope(k).image(a))
        target = trip.complex.polytope(c)
        vol = sum((p.volume() for p in imgs), la.ZERO)
        if vol != target.volume() or not _covers(target, imgs):
            issues.append(f"arrows over chart {c} of X0×Y1×X0 are not in bijection")
    return issues


# spanning families of invariant forms -------------------------------------------


def invariant_family(G: Groupoid, degree: int, max_deg: int) -> list[PPForm]:
    """Smooth invariant forms spanning enough of A^degree(G) for identity checks.

    Built along the groupoid's construction so that cover pieces stay smooth
    across cuts; nonzero members only.
    """
    if degree < 0 or degree > G.dim:
        return []
    kind = G.origin[0] if G.origin else ""
    if kind == "trivial":
        out = fm.monomial_forms(G.X0, degree, max_deg)
    elif kind == "restrict":
        parent, pieces = G.origin[1], G.origin[2]
        R0 = ChartMap.build(G.X0, parent.X0, [(c, AffineMap.identity(G.dim)) for c, _ in pieces])
        out = [fm.pullback(R0, a) for a in invariant_family(parent, degree, max_deg)]
    elif kind in ("boundary", "sub"):
        inc = _inclusion_map(G)
        out = [fm.pullback(inc, a) for a in invariant_family(G.origin[1], degree, max_deg)]
    elif kind == "fiber":
        w: WeakFiberProduct = G.origin[1]
        out = []
        for k in range(degree + 1):
            left = invariant_family(w.F.source, k, max_deg)
            right = invariant_family(w.G.source, degree - k, max_deg)
            for a in left:
                pa = fm.pullback(w.A1.F0, a)
                for b in right:
                    out.append(fm.wedge(pa, fm.pullback(w.A2.F0, b)))
    else:
        out = [J(G, a) for a in fm.monomial_forms(G.X0, degree, max_deg)]
    seen: list[PPForm] = []
    for a in out:
        if a.is_zero():
            continue
        seen.append(a)
    return seen
