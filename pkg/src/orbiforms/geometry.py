"""Manifolds with corners as finite unions of polytope charts.

A chart is a full-dimensional polytope. Some of its facets may be *cuts*:
places where the chart is a compact piece of a larger open set rather than
genuine boundary. Cover groupoids need this, since a closed chart [0, 6/5]
of the interval [0, 2] does not have boundary at 6/5.

Orientations and relative orientations are per-chart signs measured against
the ambient coordinates of each chart.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product as iproduct
from typing import Sequence

from gmpy2 import mpq

from .kernel import AffineMap, Polytope, hyperplane_param, linalg as la, normalize_halfspace

Orientation = tuple  # one sign per chart
RelativeOrientation = tuple  # one sign per source chart


class GeometryError(ValueError):
    pass


# charts ---------------------------------------------------------------------


@dataclass(frozen=True)
class Chart:
    polytope: Polytope
    cuts: frozenset = frozenset()

    @property
    def dim(self) -> int:
        return self.polytope.ambient_dim

    def facets(self) -> list[tuple[int, tuple, bool]]:
        """(halfspace index, halfspace, genuine) for every facet."""
        return list(self._facets)

    @cached_property
    def _facets(self) -> tuple:
        out = []
        for i in self.polytope.facet_indices():
            h = self.polytope.halfspaces[i]
            out.append((i, h, h not in self.cuts))
        return tuple(out)

    def genuine_facets(self) -> list[tuple[int, tuple]]:
        return [(i, h) for i, h, g in self._facets if g]

    def to_json(self) -> dict:
        return {
            "halfspaces": self.polytope.to_json(),
            "cuts": [[[str(x) for x in a], str(b)] for a, b in sorted(self.cuts)],
        }


def chart_from_raw(dim: int, raw: Sequence[tuple[Sequence, object, bool]]) -> Chart | None:
    """Chart from (normal, offset, genuine) rows; None unless full-dimensional.

    A surviving facet is a cut only when every row producing it is a cut.
    """
    genuine: dict = {}
    rows = []
    for a, b, g in raw:
        h = normalize_halfspace(a, b)
        if h is None:
            continue
        rows.append((a, b))
        if h == "infeasible":
            return None
        genuine[h] = genuine.get(h, False) or g
    poly = Polytope.make(dim, rows)
    if not poly.is_full_dim():
        return None
    poly = poly.canonical()
    cuts = frozenset(h for h in poly.halfspaces if not genuine.get(h, True))
    return Chart(poly, cuts)


@dataclass(frozen=True)
class ChartComplex:
    dim: int
    charts: tuple

    @classmethod
    def make(cls, dim: int, polytopes: Sequence, cuts: Sequence | None = None) -> "ChartComplex":
        charts = []
        for k, p in enumerate(polytopes):
            if isinstance(p, Chart):
                charts.append(p)
                continue
            c = frozenset()
            if cuts is not None and cuts[k]:
                c = frozenset(normalize_halfspace(a, b) for a, b in cuts[k])
            poly = p.canonical() if p.is_full_dim() else p
            charts.append(Chart(poly, c))
        return cls(dim, tuple(charts))

    @classmethod
    def point(cls) -> "ChartComplex":
        return cls(0, (Chart(Polytope.point_space()),))

    @classmethod
    def empty(cls, dim: int) -> "ChartComplex":
        return cls(dim, ())

    def __len__(self) -> int:
        return len(self.charts)

    def polytope(self, i: int) -> Polytope:
        return self.charts[i].polytope

    def validate(self) -> list[str]:
        issues = []
        for k, ch in enumerate(self.charts):
            p = ch.polytope
            if p.ambient_dim != self.dim:
                issues.append(f"chart {k}: ambient dimension {p.ambient_dim} != {self.dim}")
                continue
            if not p.is_bounded():
                issues.append(f"chart {k}: unbounded")
                continue
            if p.is_empty():
                issues.append(f"chart {k}: empty")
                continue
            if not p.is_full_dim():
                issues.append(f"chart {k}: not full-dimensional")
            for h in ch.cuts:
                if h not in p.halfspaces:
                    issues.append(f"chart {k}: cut {h} is not a facet")
        return issues

    def sub(self, indices: Sequence[int]) -> "ChartComplex":
        return ChartComplex(self.dim, tuple(self.charts[i] for i in indices))

    def standard_orientation(self) -> Orientation:
        return (1,) * len(self.charts)

    def to_json(self) -> dict:
        return {"dim": self.dim, "charts": [c.to_json() for c in self.charts]}


# chart maps -----------------------------------------------------------------


def _pulled_functional(a: AffineMap, h: tuple) -> tuple:
    """Halfspace h = (n, b) pulled back through a: (Aᵀn, b - n·c)."""
    normal, off = h
    if a.matrix:
        nn = la.matvec(la.transpose(a.matrix, a.domain_dim), normal)
    else:
        nn = (la.ZERO,) * a.domain_dim
    return nn, off - la.dot(normal, a.offset)


def _boundary_contact(src: Chart, a: AffineMap, tgt: Chart):
    """Classify how the genuine facets of tgt meet the image of src.

    Returns (strongly_smooth, horizontal facet halfspaces of src, witness).
    """
    horizontal = set()
    src_facets = {h: g for _, h, g in src.facets()}
    verts = src.polytope.vertices
    for _, g in tgt.genuine_facets():
        nn, off = _pulled_functional(a, g)
        vals = [off - la.dot(nn, v) for v in verts]
        if min(vals) > 0:
            continue
        if all(x == 0 for x in nn):
            # b∘f is constant zero on the chart
            continue
        h = normalize_halfspace(nn, off)
        if h in src_facets and src_facets[h]:
            horizontal.add(h)
            continue
        return False, horizontal, g
    return True, horizontal, None


@dataclass(frozen=True)
class MapFlags:
    strongly_smooth: bool
    submersion: bool
    local_diffeo: bool
    proper: bool = True


@dataclass(frozen=True)
class ChartMap:
    source: ChartComplex
    target: ChartComplex
    assignment: tuple  # per source chart: (target chart index, AffineMap)
    flags: MapFlags
    product_data: tuple = field(default=())  # per chart: fiber coordinate indices or None

    @classmethod
    def build(cls, source: ChartComplex, target: ChartComplex, assignment: Sequence, product_data: Sequence | None = None) -> "ChartMap":
        assignment = tuple((int(j), a) for j, a in assignment)
        if len(assignment) != len(source.charts):
            raise GeometryError("assignment length differs from the number of source charts")
        flags = detect_flags(source, target, assignment)
        pdata = tuple(product_data) if product_data is not None else ()
        if not pdata and flags.submersion:
            pdata = tuple(_fiber_coordinates(a) for _, a in assignment)
        return cls(source, target, assignment, flags, pdata)

    def target_index(self, i: int) -> int:
        return self.assignment[i][0]

    def affine(self, i: int) -> AffineMap:
        return self.assignment[i][1]

    @property
    def rdim(self) -> int:
        return self.source.dim - self.target.dim

    def validate(self, claimed: MapFlags | None = None) -> list[str]:
        issues = []
        for i, (j, a) in enumerate(self.assignment):
            if not 0 <= j < len(self.target.charts):
                issues.append(f"chart {i}: target index {j} out of range")
                continue
            if a.domain_dim != self.source.dim or a.codomain_dim != self.target.dim:
                issues.append(f"chart {i}: affine map has shape {a.codomain_dim}x{a.domain_dim}")
                continue
            tp = self.target.polytope(j)
            for v in self.source.polytope(i).vertices:
                if not tp.contains_point(a(v)):
                    issues.append(f"chart {i}: vertex {tuple(str(x) for x in v)} maps outside target chart {j}")
                    break
        if claimed is not None and not issues:
            for name in ("strongly_smooth", "submersion", "local_diffeo"):
                if getattr(claimed, name) and not getattr(self.flags, name):
                    bad = [i for i, (j, a) in enumerate(self.assignment) if not getattr(chart_flags(self.source.charts[i], a, self.target.charts[j], self.target.dim), name)]
                    issues.append(f"flag {name} claimed but fails on charts {bad}")
        if self.product_data and self.flags.submersion:
            for i, (j, a) in enumerate(self.assignment):
                fib = self.product_data[i]
                if fib is None or _completion(a, fib) is None:
                    issues.append(f"chart {i}: product data {fib} does not split the map")
        return issues

    def splitting(self, i: int) -> AffineMap:
        """Φ(x) = (f(x), x_J): an affine bijection to base-then-fiber coordinates."""
        fib = self.product_data[i] if self.product_data else _fiber_coordinates(self.affine(i))
        phi = _completion(self.affine(i), fib)
        if phi is None:
            raise GeometryError(f"chart {i}: map is not a submersion")
        return phi


def _completion(a: AffineMap, fib: Sequence[int]) -> AffineMap | None:
    n = a.domain_dim
    rows = list(a.matrix) + [tuple(la.ONE if k == j else la.ZERO for k in range(n)) for j in fib]
    offs = list(a.offset) + [la.ZERO] * len(fib)
    if len(rows) != n:
        return None
    if n and la.det(tuple(rows)) == 0:
        return None
    return AffineMap(tuple(rows), tuple(offs), n)


def _fiber_coordinates(a: AffineMap) -> tuple | None:
    """Greedy choice of source coordinates completing the linear part to a basis."""
    n = a.domain_dim
    rows = list(a.matrix)
    if rows and la.rank(tuple(rows)) < len(rows):
        return None
    chosen = []
    for j in range(n):
        cand = rows + [tuple(la.ONE if k == j else la.ZERO for k in range(n))]
        if la.rank(tuple(cand)) == len(cand):
            rows = cand
            chosen.append(j)
    if len(rows) != n:
        return None
    return tuple(chosen)


def chart_flags(src: Chart, a: AffineMap, tgt: Chart, target_dim: int) -> MapFlags:
    """Flags of one chart component."""
    ok, horizontal, _ = _boundary_contact(src, a, tgt)
    r = a.rank()
    local = ok and a.is_square() and r == target_dim
    if local:
        local = all(h in horizontal for _, h in src.genuine_facets())
    return MapFlags(ok, r == target_dim, local)


def detect_flags(source: ChartComplex, target: ChartComplex, assignment: Sequence) -> MapFlags:
    per_chart = [chart_flags(source.charts[i], a, target.charts[j], target.dim) for i, (j, a) in enumerate(assignment)]
    return MapFlags(*(all(getattr(f, name) for f in per_chart) for name in ("strongly_smooth", "submersion", "local_diffeo")))


def identity_map(m: ChartComplex) -> ChartMap:
    return ChartMap.build(m, m, [(i, AffineMap.identity(m.dim)) for i in range(len(m.charts))])


def to_point(m: ChartComplex) -> ChartMap:
    pt = ChartComplex.point()
    return ChartMap.build(m, pt, [(0, AffineMap((), (), m.dim)) for _ in m.charts])


def compose_maps(g: ChartMap, f: ChartMap) -> ChartMap:
    """g ∘ f."""
    if f.target is not g.source and f.target != g.source:
        raise GeometryError("maps are not composable")
    assignment = []
    for i in range(len(f.source.charts)):
        j, a = f.assignment[i]
        k, b = g.assignment[j]
        assignment.append((k, b.compose(a)))
    return ChartMap.build(f.source, g.target, assignment)


# boundary -------------------------------------------------------------------


@dataclass(frozen=True)
class Boundary:
    complex: ChartComplex
    inclusion: ChartMap
    facet_index: tuple  # per boundary chart: (parent chart, halfspace)


def facet_chart(parent: Chart, h: tuple) -> tuple[Chart, AffineMap]:
    iota = hyperplane_param(*h)
    raw = []
    for hh in parent.polytope.halfspaces:
        if hh == h:
            continue
        nn, off = _pulled_functional(iota, hh)
        raw.append((nn, off, hh not in parent.cuts))
    ch = chart_from_raw(parent.dim - 1, raw)
    if ch is None:
        raise GeometryError("facet is not full-dimensional")
    return ch, iota


def build_boundary(m: ChartComplex) -> Boundary:
    charts = []
    assignment = []
    index = []
    for c, ch in enumerate(m.charts):
        if m.dim == 0:
            continue
        for _, h in ch.genuine_facets():
            fc, iota = facet_chart(ch, h)
            charts.append(fc)
            assignment.append((c, iota))
            index.append((c, h))
    bd = ChartComplex(m.dim - 1 if m.dim else 0, tuple(charts))
    inc = ChartMap.build(bd, m, assignment)
    return Boundary(bd, inc, tuple(index))


def boundary_relative_orientation(b: Boundary) -> RelativeOrientation:
    """o^{i_M}: sign of det[outward normal | facet basis] per boundary chart."""
    out = []
    for k, (c, h) in enumerate(b.facet_index):
        normal = h[0]
        cols = b.inclusion.affine(k).columns()
        mat = tuple(zip(normal, *cols)) if cols else tuple((x,) for x in normal)
        out.append(la.sign(la.det(mat)))
    return tuple(out)


def boundary_orientation(b: Boundary, o: Orientation) -> Orientation:
    rel = boundary_relative_orientation(b)
    return tuple(o[c] * s for (c, _), s in zip(b.facet_index, rel))


@dataclass(frozen=True)
class BoundarySplit:
    vertical: tuple  # indices into the boundary complex
    horizontal: tuple


def decompose_boundary(f: ChartMap, b: Boundary | None = None) -> BoundarySplit:
    if not f.flags.strongly_smooth:
        raise GeometryError("decompose_boundary needs a strongly smooth map")
    if b is None:
        b = build_boundary(f.source)
    vertical, horizontal = [], []
    for k, (c, h) in enumerate(b.facet_index):
        j, a = f.assignment[c]
        _, hor, _ = _boundary_contact(f.source.charts[c], a, f.target.charts[j])
        (horizontal if h in hor else vertical).append(k)
    return BoundarySplit(tuple(vertical), tuple(horizontal))


def restrict_boundary(b: Boundary, indices: Sequence[int]) -> Boundary:
    sub = b.complex.sub(indices)
    inc = ChartMap.build(sub, b.inclusion.target, [b.inclusion.assignment[k] for k in indices])
    return Boundary(sub, inc, tuple(b.facet_index[k] for k in indices))


# orientations ---------------------------------------------------------------


def canonical_orientation(f: ChartMap) -> RelativeOrientation:
    out = []
    for i, (_, a) in enumerate(f.assignment):
        if not a.is_square():
            raise GeometryError(f"chart {i}: canonical orientation needs a local diffeomorphism")
        d = la.det(a.matrix) if a.domain_dim else la.ONE
        if d == 0:
            raise GeometryError(f"chart {i}: singular linear part")
        out.append(la.sign(d))
    return tuple(out)


def compose_orientation(og: RelativeOrientation, of: RelativeOrientation, f: ChartMap) -> RelativeOrientation:
    """o^g ∘ o^f for the composite g ∘ f."""
    return tuple(og[f.target_index(i)] * of[i] for i in range(len(f.source.charts)))


def induced_relative(f: ChartMap, o_src: Orientation, o_tgt: Orientation) -> RelativeOrientation:
    return tuple(o_src[i] * o_tgt[f.target_index(i)] for i in range(len(f.source.charts)))


# fiber products -------------------------------------------------------------


@dataclass(frozen=True)
class FiberProduct:
    complex: ChartComplex
    q: ChartMap  # to the left factor M (over f)
    p: ChartMap  # to the right factor P (over g)
    f: ChartMap
    g: ChartMap
    pairs: tuple  # per chart: (chart of M, chart of P)
    embed: tuple  # per chart: AffineMap W -> R^{nM+nP}
    select: tuple  # per chart: AffineMap R^{nM+nP} -> W

    def index(self, i: int, j: int) -> int | None:
        try:
            return self.pairs.index((i, j))
        except ValueError:
            return None


def _block_projection(n_total: int, start: int, length: int) -> tuple:
    return tuple(tuple(la.ONE if k == start + r else la.ZERO for k in range(n_total)) for r in range(length))


def fiber_product(f: ChartMap, g: ChartMap) -> FiberProduct:
    if f.target.dim != g.target.dim or len(f.target.charts) != len(g.target.charts):
        raise GeometryError("fiber product legs have different targets")
    m_cx, p_cx = f.source, g.source
    nm, np_, nn = m_cx.dim, p_cx.dim, f.target.dim
    ntot = nm + np_
    charts, pairs, embeds, selects, qs, ps = [], [], [], [], [], []
    for i, j in iproduct(range(len(m_cx.charts)), range(len(p_cx.charts))):
        if f.target_index(i) != g.target_index(j):
            continue
        a, b = f.affine(i), g.affine(j)
        rows = []
        rhs = []
        for r in range(nn):
            # column order: P variables first so pivots prefer them
            rows.append(tuple(-x for x in b.matrix[r]) + tuple(a.matrix[r]))
            rhs.append(b.offset[r] - a.offset[r])
        if nn:
            rk = la.rank(tuple(rows))
            if rk < nn:
                raise GeometryError(f"chart pair ({i}, {j}) is not transverse")
            if a.rank() < nn and b.rank() < nn:
                raise GeometryError(f"chart pair ({i}, {j}): neither leg is a submersion")
            red, piv = la.rref(tuple(r + (c,) for r, c in zip(rows, rhs)), ncols=ntot)
        else:
            red, piv = [], []
        # reordered variable index: column c < np_ is P var c, else M var c - np_
        def var_index(c: int) -> int:
            return nm + c if c < np_ else c - np_

        free_cols = [c for c in range(ntot) if c not in piv]
        free_m = [c for c in free_cols if c >= np_]
        free_p = [c for c in free_cols if c < np_]
        free = free_m + free_p
        d = len(free)
        emb_rows = [None] * ntot
        emb_off = [la.ZERO] * ntot
        for k, c in enumerate(free):
            emb_rows[var_index(c)] = tuple(la.ONE if t == k else la.ZERO for t in range(d))
        for r, c in enumerate(piv):
            emb_rows[var_index(c)] = tuple(-red[r][fc] for fc in free)
            emb_off[var_index(c)] = red[r][ntot]
        emb = AffineMap(tuple(emb_rows), tuple(emb_off), d)
        sel = AffineMap(tuple(tuple(la.ONE if t == var_index(c) else la.ZERO for t in range(ntot)) for c in free), (la.ZERO,) * d, ntot)
        raw = []
        proj_m = AffineMap(_block_projection(ntot, 0, nm), (la.ZERO,) * nm, ntot).compose(emb)
        proj_p = AffineMap(_block_projection(ntot, nm, np_), (la.ZERO,) * np_, ntot).compose(emb)
        for chart, proj in ((m_cx.charts[i], proj_m), (p_cx.charts[j], proj_p)):
            for h in chart.polytope.halfspaces:
                nn_, off = _pulled_functional(proj, h)
                raw.append((nn_, off, h not in chart.cuts))
        ch = chart_from_raw(d, raw)
        if ch is None:
            continue
        charts.append(ch)
        pairs.append((i, j))
        embeds.append(emb)
        selects.append(sel)
        qs.append((i, proj_m))
        ps.append((j, proj_p))
    w = ChartComplex(nm + np_ - nn, tuple(charts))
    q = ChartMap.build(w, m_cx, qs)
    p = ChartMap.build(w, p_cx, ps)
    return FiberProduct(w, q, p, f, g, tuple(pairs), tuple(embeds), tuple(selects))


def _square_det_sign(fp: FiberProduct, k: int) -> int:
    """sign det φ with φ = (r, df ⊕ −dg) against standard bases."""
    i, j = fp.pairs[k]
    nm, np_, nn = fp.f.source.dim, fp.g.source.dim, fp.f.target.dim
    d = fp.complex.dim
    psi = tuple(tuple(r) for r in fp.q.affine(k).matrix) + tuple(tuple(r) for r in fp.p.affine(k).matrix)
    if d:
        r = la.left_inverse(psi, d)
    else:
        r = ()
    a, b = fp.f.affine(i), fp.g.affine(j)
    fmat = tuple(tuple(a.matrix[row]) + tuple(-x for x in b.matrix[row]) for row in range(nn))
    phi = tuple(r) + fmat
    if not phi:
        return 1
    return la.sign(la.det(phi))


def fiber_product_orientation(fp: FiberProduct, o_m: Orientation, o_p: Orientation, o_n: Orientation) -> Orientation:
    """Orientation of M ×_N P with sgn(φ) = (−1)^{dim P · dim N}."""
    np_, nn = fp.g.source.dim, fp.f.target.dim
    base = (-1) ** (np_ * nn)
    out = []
    for k, (i, j) in enumerate(fp.pairs):
        n_chart = fp.f.target_index(i)
        out.append(_square_det_sign(fp, k) * o_m[i] * o_p[j] * o_n[n_chart] * base)
    return tuple(out)


def pullback_orientation(fp: FiberProduct, o_g: RelativeOrientation) -> RelativeOrientation:
    """f^*o^g on q: induced by the fiber-product orientation and that of M."""
    np_, nn = fp.g.source.dim, fp.f.target.dim
    base = (-1) ** (np_ * nn)
    return tuple(_square_det_sign(fp, k) * o_g[j] * base for k, (i, j) in enumerate(fp.pairs))


def transpose_pullback_orientation(fp: FiberProduct, o_f: RelativeOrientation) -> RelativeOrientation:
    """ᵗg^*o^f on p: induced by the fiber-product orientation and that of P."""
    np_, nn = fp.g.source.dim, fp.f.target.dim
    base = (-1) ** (np_ * nn)
    return tuple(_square_det_sign(fp, k) * o_f[i] * base for k, (i, j) in enumerate(fp.pairs))


def swap_map(fp: FiberProduct, flipped: FiberProduct) -> ChartMap:
    """θ: M ×_N P -> P ×_N M, (m, p) -> (p, m)."""
    nm, np_ = fp.f.source.dim, fp.g.source.dim
    ntot = nm + np_
    rows = []
    for r in range(np_):
        rows.append(tuple(la.ONE if c == nm + r else la.ZERO for c in range(ntot)))
    for r in range(nm):
        rows.append(tuple(la.ONE if c == r else la.ZERO for c in range(ntot)))
    sw = AffineMap(tuple(rows), (la.ZERO,) * ntot, ntot)
    assignment = []
    for k, (i, j) in enumerate(fp.pairs):
        kk = flipped.index(j, i)
        if kk is None:
            raise GeometryError(f"swapped chart ({j}, {i}) missing")
        assignment.append((kk, flipped.select[kk].compose(sw).compose(fp.embed[k])))
    return ChartMap.build(fp.complex, flipped.complex, assignment)
