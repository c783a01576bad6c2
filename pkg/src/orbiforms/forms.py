"""Piecewise-polynomial differential forms on chart complexes.

On each chart a form is a list of cells (polytopes) carrying polynomial
coefficients on strictly increasing multi-indices. Cells may overlap: the
value at a point is the sum over the cells containing it. ``normalize``
produces a disjoint decomposition, which is how equality is decided.

Fiber integration works in split coordinates z = (y, v) where y are the
target coordinates and v the fiber coordinates. A form g dy_I ∧ dv pushes
forward to (∫ g dv) dy_I, with the fiber carrying the orientation induced by
the relative orientation; the integral over v is done exactly by eliminating
one fiber variable at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
import itertools
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from gmpy2 import mpq

from .geometry import ChartComplex, ChartMap, Orientation, RelativeOrientation
from .kernel import AffineMap, Poly, Polytope, difference, hyperplane_param, linalg as la

INF = math.inf


class FormError(ValueError):
    pass


def multi_indices(n: int, k: int) -> list[tuple]:
    if k < 0 or k > n:
        return []
    return list(combinations(range(n), k))


def wedge_sign(i: tuple, j: tuple) -> int:
    """Sign of dx_I ∧ dx_J = sign · dx_{I∪J}; 0 when they overlap."""
    if set(i) & set(j):
        return 0
    inversions = sum(1 for a in i for b in j if a > b)
    return -1 if inversions % 2 else 1


def _add_coeffs(acc: dict, coeffs: Mapping, scale=1) -> None:
    for k, p in coeffs.items():
        q = p if scale == 1 else p.scale(scale)
        if k in acc:
            s = acc[k] + q
            if s.is_zero():
                del acc[k]
            else:
                acc[k] = s
        elif not q.is_zero():
            acc[k] = q


@dataclass(frozen=True, eq=False)
class Cell:
    region: Polytope
    coeffs: Mapping  # multi-index -> Poly, never mutated

    def is_zero(self) -> bool:
        return all(p.is_zero() for p in self.coeffs.values())


@dataclass(frozen=True, eq=False)
class PPForm:
    base: ChartComplex
    degree: int
    cells: tuple  # per chart: tuple of Cell
    smoothness: float = INF

    # construction -----------------------------------------------------

    @classmethod
    def zero(cls, base: ChartComplex, degree: int, smoothness: float = INF) -> "PPForm":
        return cls(base, degree, tuple(() for _ in base.charts), smoothness)

    @classmethod
    def from_cells(cls, base: ChartComplex, degree: int, per_chart: Sequence[Sequence], smoothness: float = INF) -> "PPForm":
        if len(per_chart) != len(base.charts):
            raise FormError("one cell list per chart is required")
        n = base.dim
        charts = []
        for c, cells in enumerate(per_chart):
            out = []
            for region, coeffs in cells:
                clean = {}
                for idx, p in coeffs.items():
                    idx = tuple(idx)
                    if len(idx) != degree or list(idx) != sorted(set(idx)) or (idx and (idx[0] < 0 or idx[-1] >= n)):
                        raise FormError(f"bad multi-index {idx} for degree {degree} in dimension {n}")
                    if p.nvars != n:
                        raise FormError("coefficient has the wrong number of variables")
                    if not p.is_zero():
                        clean[idx] = p
                if clean and 0 <= degree <= n:
                    reg = region.intersect(base.polytope(c))
                    if reg.is_full_dim():
                        out.append(Cell(reg.canonical(), clean))
            charts.append(tuple(out))
        return cls(base, degree, tuple(charts), smoothness)

    @classmethod
    def from_polys(cls, base: ChartComplex, degree: int, per_chart: Sequence[Mapping], smoothness: float = INF) -> "PPForm":
        return cls.from_cells(base, degree, [[(base.polytope(c), coeffs)] if coeffs else [] for c, coeffs in enumerate(per_chart)], smoothness)

    @classmethod
    def constant(cls, base: ChartComplex, value) -> "PPForm":
        n = base.dim
        return cls.from_polys(base, 0, [{(): Poly.const(n, value)} for _ in base.charts])

    @classmethod
    def function(cls, base: ChartComplex, polys: Sequence[Poly]) -> "PPForm":
        return cls.from_polys(base, 0, [{(): p} for p in polys])

    # arithmetic -------------------------------------------------------

    def _compatible(self, other: "PPForm") -> None:
        if self.base != other.base:
            raise FormError("forms live on different chart complexes")

    def __add__(self, other: "PPForm") -> "PPForm":
        self._compatible(other)
        if self.degree != other.degree:
            if self.is_structurally_zero():
                return other
            if other.is_structurally_zero():
                return self
            raise FormError(f"cannot add forms of degree {self.degree} and {other.degree}")
        cells = tuple(a + b for a, b in zip(self.cells, other.cells))
        return PPForm(self.base, self.degree, cells, min(self.smoothness, other.smoothness))

    def scale(self, c) -> "PPForm":
        c = la.to_rat(c)
        if c == 0:
            return PPForm.zero(self.base, self.degree, self.smoothness)
        cells = tuple(tuple(Cell(cell.region, {k: p.scale(c) for k, p in cell.coeffs.items()}) for cell in ch) for ch in self.cells)
        return PPForm(self.base, self.degree, cells, self.smoothness)

    def __neg__(self) -> "PPForm":
        return self.scale(-1)

    def __sub__(self, other: "PPForm") -> "PPForm":
        return self + (-other)

    def __rmul__(self, c) -> "PPForm":
        return self.scale(c)

    def with_smoothness(self, r: float) -> "PPForm":
        return PPForm(self.base, self.degree, self.cells, r)

    def is_structurally_zero(self) -> bool:
        return all(not ch for ch in self.cells)

    # normal form ------------------------------------------------------

    @cached_property
    def normalized(self) -> tuple:
        """Per chart: disjoint nonzero cells (region, coeff dict)."""
        return tuple(_normalize_chart(ch) for ch in self.cells)

    def is_zero(self) -> bool:
        if self.degree < 0 or self.degree > self.base.dim:
            return True
        return all(not ch for ch in self.normalized)

    def equals(self, other: "PPForm") -> bool:
        self._compatible(other)
        if self.degree != other.degree:
            return self.is_zero() and other.is_zero()
        return (self - other).is_zero()

    def evaluate(self, chart: int, point: Sequence) -> dict:
        """Coefficients at a point (sum over the cells containing it)."""
        acc: dict = {}
        for cell in self.cells[chart]:
            if cell.region.contains_point(la.vec(point)):
                for k, p in cell.coeffs.items():
                    acc[k] = acc.get(k, la.ZERO) + p(point)
        return {k: v for k, v in acc.items() if v != 0}

    def to_json(self) -> dict:
        charts = []
        for ch in self.normalized:
            cells = []
            for region, coeffs in ch:
                cells.append({
                    "region": region.to_json(),
                    "coeffs": {",".join(str(i) for i in k): p.to_json() for k, p in sorted(coeffs.items())},
                })
            charts.append(cells)
        return {"degree": self.degree, "smoothness": "inf" if self.smoothness == INF else int(self.smoothness), "charts": charts}


def _normalize_chart(cells: Sequence[Cell]) -> tuple:
    disjoint: list[tuple[Polytope, dict]] = []
    for cell in cells:
        if cell.is_zero():
            continue
        remaining = [cell.region]
        nxt: list[tuple[Polytope, dict]] = []
        for region, coeffs in disjoint:
            if region == cell.region:
                inter = region
            else:
                inter = region.intersect(cell.region)
            if inter.is_full_dim():
                merged = dict(coeffs)
                _add_coeffs(merged, cell.coeffs)
                nxt.append((inter.canonical(), merged))
                for piece in difference(region, cell.region):
                    nxt.append((piece, coeffs))
                remaining = [r2 for r in remaining for r2 in difference(r, region)]
            else:
                nxt.append((region, coeffs))
        for r in remaining:
            nxt.append((r.canonical(), dict(cell.coeffs)))
        disjoint = nxt
    return tuple((r, c) for r, c in disjoint if c)


# exterior algebra -------------------------------------------------------------


def wedge(a: PPForm, b: PPForm) -> PPForm:
    a._compatible(b)
    n = a.base.dim
    k = a.degree + b.degree
    r = min(a.smoothness, b.smoothness)
    if k > n or a.degree < 0 or b.degree < 0:
        return PPForm.zero(a.base, k, r)
    charts = []
    for ca, cb in zip(a.cells, b.cells):
        out = []
        for x in ca:
            for y in cb:
                region = x.region if x.region == y.region else x.region.intersect(y.region)
                if region is not x.region and not region.is_full_dim():
                    continue
                acc: dict = {}
                for i, p in x.coeffs.items():
                    for j, q in y.coeffs.items():
                        s = wedge_sign(i, j)
                        if s:
                            _add_coeffs(acc, {tuple(sorted(i + j)): p * q}, s)
                if acc:
                    out.append(Cell(region.canonical() if region is not x.region else region, acc))
        charts.append(tuple(out))
    return PPForm(a.base, k, tuple(charts), r)


def d(a: PPForm) -> PPForm:
    if a.smoothness < 1:
        raise FormError("exterior derivative needs smoothness class at least C^1")
    n = a.base.dim
    r = a.smoothness - 1
    if a.degree + 1 > n or a.degree + 1 < 0:
        return PPForm.zero(a.base, a.degree + 1, r)
    charts = []
    for ch in a.cells:
        out = []
        for cell in ch:
            acc: dict = {}
            for idx, p in cell.coeffs.items():
                for j in range(n):
                    if j in idx:
                        continue
                    dp = p.deriv(j)
                    if dp.is_zero():
                        continue
                    s = wedge_sign((j,), idx)
                    _add_coeffs(acc, {tuple(sorted(idx + (j,))): dp}, s)
            if acc:
                out.append(Cell(cell.region, acc))
        charts.append(tuple(out))
    return PPForm(a.base, a.degree + 1, tuple(charts), r)


# pull-back --------------------------------------------------------------------


def pull_coeffs(coeffs: Mapping, aff: AffineMap, degree: int) -> dict:
    """Coefficients of aff^*(Σ p_J dy_J) in source coordinates."""
    n = aff.domain_dim
    out: dict = {}
    cols = aff.columns()
    for jdx, p in coeffs.items():
        q = p.compose_affine(aff)
        if q.is_zero():
            continue
        for idx in multi_indices(n, degree):
            if degree == 0:
                minor = la.ONE
            else:
                minor = la.det(tuple(tuple(cols[c][r] for c in idx) for r in jdx))
            if minor != 0:
                _add_coeffs(out, {idx: q}, minor)
    return out


def pullback(f: ChartMap, a: PPForm) -> PPForm:
    if f.target != a.base:
        raise FormError("form does not live on the map's target")
    src = f.source
    k = a.degree
    if k > src.dim or k < 0:
        return PPForm.zero(src, k, a.smoothness)
    charts = []
    for i, (j, aff) in enumerate(f.assignment):
        dom = src.polytope(i)
        out = []
        if aff.rank() == f.target.dim:
            for cell in a.cells[j]:
                reg = cell.region.preimage(aff, domain=dom)
                if reg.is_full_dim():
                    coeffs = pull_coeffs(cell.coeffs, aff, k)
                    if coeffs:
                        out.append(Cell(reg.canonical(), coeffs))
        else:
            # lower-rank map: use disjoint cells and give each point to the
            # first cell whose closure contains its image
            taken: list[Polytope] = []
            for region, coeffs in a.normalized[j]:
                reg = region.preimage(aff, domain=dom)
                if not reg.is_full_dim():
                    continue
                reg = reg.canonical()
                pieces = [reg]
                for t in taken:
                    pieces = [x for p in pieces for x in difference(p, t)]
                taken.append(reg)
                pc = pull_coeffs(coeffs, aff, k)
                if pc:
                    for piece in pieces:
                        out.append(Cell(piece, pc))
        charts.append(tuple(out))
    return PPForm(src, k, tuple(charts), a.smoothness)


# integration ------------------------------------------------------------------


def integrate(a: PPForm, o: Orientation | None = None) -> mpq:
    n = a.base.dim
    if a.degree != n:
        return la.ZERO
    if o is None:
        o = a.base.standard_orientation()
    top = tuple(range(n))
    total = la.ZERO
    for c, ch in enumerate(a.cells):
        sub = la.ZERO
        for cell in ch:
            p = cell.coeffs.get(top)
            if p is not None:
                sub += cell.region.integrate(p)
        total += o[c] * sub
    return total


def eliminate_last(region: Polytope, p: Poly) -> list[tuple[Polytope, Poly]]:
    """Integrate p over the last coordinate of a full-dimensional region.

    Returns cells in the remaining coordinates with polynomial integrands;
    cells overlap only on lower-dimensional sets.
    """
    m = region.ambient_dim
    region = region.canonical()
    lowers, uppers, rest = [], [], []
    for a, b in region.halfspaces:
        c = a[-1]
        a_rest = a[:-1]
        if c == 0:
            rest.append((a_rest, b))
        else:
            bound = (tuple(-x / c for x in a_rest), b / c)
            (uppers if c > 0 else lowers).append(bound)
    anti = p.antideriv(m - 1)

    def lift(bound) -> AffineMap:
        coef, const = bound
        rows = [tuple(la.ONE if k == i else la.ZERO for k in range(m - 1)) for i in range(m - 1)]
        rows.append(tuple(coef))
        return AffineMap(tuple(rows), (la.ZERO,) * (m - 1) + (const,), m - 1)

    out = []
    for li, lo in enumerate(lowers):
        for ui, up in enumerate(uppers):
            hs = list(rest)
            for lj, l2 in enumerate(lowers):
                if lj != li:
                    hs.append((tuple(x - y for x, y in zip(l2[0], lo[0])), lo[1] - l2[1]))
            for uj, u2 in enumerate(uppers):
                if uj != ui:
                    hs.append((tuple(x - y for x, y in zip(up[0], u2[0])), u2[1] - up[1]))
            hs.append((tuple(x - y for x, y in zip(lo[0], up[0])), up[1] - lo[1]))
            cell = Polytope.make(m - 1, hs)
            if not cell.is_full_dim():
                continue
            integrand = anti.compose_affine(lift(up)) - anti.compose_affine(lift(lo))
            if not integrand.is_zero():
                out.append((cell.canonical(), integrand))
    return out


def integrate_by_elimination(region: Polytope, p: Poly) -> mpq:
    """∫_region p by successive one-variable integration (independent of triangulation)."""
    pieces = [(region, p)]
    for _ in range(region.ambient_dim):
        pieces = [x for r, q in pieces for x in eliminate_last(r, q)]
    return sum((q(()) for _, q in pieces), la.ZERO)


def pushforward(f: ChartMap, o: RelativeOrientation, a: PPForm) -> PPForm:
    """Fiber integration along a submersion (local diffeomorphisms included)."""
    if not f.flags.submersion:
        raise FormError("push-forward needs a submersion")
    if f.source != a.base:
        raise FormError("form does not live on the map's source")
    n = f.source.dim
    kdim = f.target.dim
    r = n - kdim
    deg = a.degree - r
    tgt = f.target
    if deg < 0 or a.degree > n:
        return PPForm.zero(tgt, deg, a.smoothness)
    fiber = tuple(range(kdim, n))
    per_target: list[dict] = [dict() for _ in tgt.charts]
    for i, ch in enumerate(a.cells):
        if not ch:
            continue
        j = f.target_index(i)
        phi = f.splitting(i)
        phi_inv = phi.inverse()
        sgn = o[i] * (la.sign(phi.det()) if n else 1)
        for cell in ch:
            region_z = cell.region.preimage(phi_inv)
            coeffs_z = pull_coeffs(cell.coeffs, phi_inv, a.degree)
            for idx, p in coeffs_z.items():
                if idx[len(idx) - r:] != fiber:
                    continue
                base_idx = idx[: len(idx) - r]
                pieces = [(region_z, p)]
                for _ in range(r):
                    pieces = [x for reg, q in pieces for x in eliminate_last(reg, q)]
                for reg, q in pieces:
                    acc = per_target[j].setdefault(reg, {})
                    _add_coeffs(acc, {base_idx: q}, sgn)
    charts = []
    for j, acc in enumerate(per_target):
        out = []
        for reg, coeffs in acc.items():
            if coeffs:
                reg2 = reg.intersect(tgt.polytope(j))
                if reg2.is_full_dim():
                    out.append(Cell(reg2.canonical(), coeffs))
        charts.append(tuple(out))
    return PPForm(tgt, deg, tuple(charts), a.smoothness)


def pushforward_submersion(f: ChartMap, o: RelativeOrientation, a: PPForm) -> PPForm:
    return pushforward(f, o, a)


def pushforward_localdiffeo(f: ChartMap, o: RelativeOrientation, a: PPForm) -> PPForm:
    if not f.flags.local_diffeo and f.source.dim != f.target.dim:
        raise FormError("map is not a local diffeomorphism")
    return pushforward(f, o, a)


# smoothness -------------------------------------------------------------------


def _derivatives(p: Poly, order: int) -> list[Poly]:
    out = [p]
    frontier = [p]
    for _ in range(order):
        nxt = []
        for q in frontier:
            for i in range(q.nvars):
                dq = q.deriv(i)
                if not dq.is_zero():
                    nxt.append(dq)
        out.extend(nxt)
        frontier = nxt
        if not frontier:
            break
    return out


def validate_smoothness(a: PPForm) -> list[str]:
    """Exact C^r check across cell interfaces (the zero form counts as a neighbour)."""
    issues = []
    n = a.base.dim
    if n == 0:
        return issues
    for c, cells in enumerate(a.normalized):
        chart = a.base.polytope(c)
        chart_planes = set(chart.halfspaces) | {(tuple(-x for x in h[0]), -h[1]) for h in chart.halfspaces}
        for idx, (region, coeffs) in enumerate(cells):
            for fi in region.facet_indices():
                h = region.halfspaces[fi]
                if h in chart_planes:
                    continue
                iota = hyperplane_param(*h)
                facet = region.preimage(iota).canonical()
                if not facet.is_full_dim():
                    continue
                covered = la.ZERO
                for jdx, (other, ocoeffs) in enumerate(cells):
                    if jdx == idx:
                        continue
                    patch = other.preimage(iota, domain=facet)
                    if not patch.is_full_dim():
                        continue
                    covered += patch.volume()
                    diff: dict = dict(coeffs)
                    _add_coeffs(diff, ocoeffs, -1)
                    if not _vanish_on(diff, iota, a.smoothness):
                        issues.append(f"chart {c}: cells {idx} and {jdx} disagree across {h}")
                if covered < facet.volume() and not _vanish_on(coeffs, iota, a.smoothness):
                    issues.append(f"chart {c}: cell {idx} does not vanish to order {a.smoothness} where it meets empty space across {h}")
    return issues


def _vanish_on(coeffs: Mapping, iota: AffineMap, r: float) -> bool:
    for p in coeffs.values():
        order = p.degree() if r == INF else min(int(r), p.degree())
        for q in _derivatives(p, max(order, 0)):
            if not q.compose_affine(iota).is_zero():
                return False
    return True


# test families ----------------------------------------------------------------


def exponents(n: int, max_deg: int) -> list[tuple]:
    """Exponent vectors of total degree at most max_deg, graded then lexicographic."""
    out = []
    for total in range(max_deg + 1):
        for e in itertools.product(range(total + 1), repeat=n):
            if sum(e) == total:
                out.append(e)
    return out


def monomial_forms(base: ChartComplex, degree: int, max_deg: int) -> list[PPForm]:
    """x^e dx_I on one chart and zero elsewhere, for every chart, e and I."""
    n = base.dim
    out = []
    for c in range(len(base.charts)):
        for e in exponents(n, max_deg):
            for idx in multi_indices(n, degree):
                per = [{} for _ in base.charts]
                per[c] = {idx: Poly.monomial(e) if n else Poly.const(0, 1)}
                out.append(PPForm.from_polys(base, degree, per))
    return out


def global_monomial_forms(base: ChartComplex, degree: int, max_deg: int) -> list[PPForm]:
    """x^e dx_I on every chart at once."""
    n = base.dim
    out = []
    for e in exponents(n, max_deg):
        for idx in multi_indices(n, degree):
            p = Poly.monomial(e) if n else Poly.const(0, 1)
            out.append(PPForm.from_polys(base, degree, [{idx: p} for _ in base.charts]))
    return out
