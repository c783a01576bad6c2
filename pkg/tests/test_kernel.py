from fractions import Fraction
from math import factorial

import pytest
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from orbiforms.kernel import AffineMap, Poly, Polytope, difference, hyperplane_param, integrate_poly_simplex, linalg as la, simplex_volume

small = st.fractions(min_value=-5, max_value=5, max_denominator=7)


def polys(nvars: int, max_terms: int = 4, max_exp: int = 3):
    exps = st.tuples(*[st.integers(0, max_exp)] * nvars)
    return st.dictionaries(exps, small, max_size=max_terms).map(lambda t: Poly(nvars, {e: mpq(c) for e, c in t.items()}))


def box_integral(terms: dict, lo, hi) -> Fraction:
    """Oracle: ∫ over a box of Σ c x^a, as a product of one-variable antiderivatives."""
    total = Fraction(0)
    for exps, c in terms.items():
        v = Fraction(c)
        for a, l, h in zip(exps, lo, hi):
            v *= (Fraction(h) ** (a + 1) - Fraction(l) ** (a + 1)) / (a + 1)
        total += v
    return total


def simplex_monomial(exps) -> Fraction:
    """Oracle: ∫ over the standard simplex of x^a is a! / (n + |a|)!."""
    num = 1
    for a in exps:
        num *= factorial(a)
    return Fraction(num, factorial(len(exps) + sum(exps)))


# linear algebra


def test_det_and_inverse():
    a = la.mat([[2, 1, 0], [1, 3, 1], [0, 1, 4]])
    assert la.det(a) == 18
    inv = la.inverse(a)
    assert la.matmul(a, inv) == la.identity(3)
    assert la.inverse(la.mat([[1, 2], [2, 4]])) is None


def test_rank_and_nullspace():
    a = la.mat([[1, 2, 3], [2, 4, 6]])
    assert la.rank(a) == 1
    ns = la.nullspace(a, 3)
    assert len(ns) == 2
    for v in ns:
        assert all(x == 0 for x in la.matvec(a, v))


def test_solve():
    a = la.mat([[1, 1], [1, -1]])
    assert list(la.solve(a, la.vec([3, 1]))) == [2, 1]
    assert la.solve(la.mat([[1, 1], [1, 1]]), la.vec([1, 2])) is None


def test_affine_rank():
    pts = [la.vec(p) for p in ([0, 0], [1, 1], [2, 2])]
    assert la.affine_rank(pts) == 1


@given(st.lists(st.lists(small, min_size=3, max_size=3), min_size=3, max_size=3))
def test_det_multiplicative(rows):
    a = la.mat(rows)
    b = la.mat([[1, 2, 0], [0, 1, 3], [1, 0, 1]])
    assert la.det(la.matmul(a, b)) == la.det(a) * la.det(b)


# affine maps


def test_affine_compose_and_inverse():
    a = AffineMap.make([[1, 2], [0, 1]], [1, -1])
    b = AffineMap.make([[0, 1], [1, 0]], [0, 3])
    x = (mpq(1, 3), mpq(-2))
    assert a.compose(b)(x) == a(b(x))
    assert a.inverse().compose(a)(x) == x
    assert a.det() == 1 and a.rank() == 2


def test_affine_constant_and_identity():
    c = AffineMap.constant([1, 2], 3)
    assert c((5, 6, 7)) == (1, 2)
    assert AffineMap.identity(2)((mpq(1, 2), 3)) == (mpq(1, 2), 3)


# polynomials


def test_poly_arithmetic():
    x, y = Poly.var(2, 0), Poly.var(2, 1)
    p = (x + y) ** 2
    assert p == x * x + 2 * x * y + y * y
    assert p((mpq(1, 2), mpq(1, 3))) == mpq(25, 36)
    assert p.degree() == 2
    assert (p - p).is_zero()


def test_poly_calculus():
    x, y = Poly.var(2, 0), Poly.var(2, 1)
    p = x ** 3 * y + 5 * y
    assert p.deriv(0) == 3 * x ** 2 * y
    assert p.antideriv(0).deriv(0) == p


def test_poly_compose_affine():
    p = Poly.monomial((2, 1), 3)
    a = AffineMap.make([[1, 1], [0, 2]], [1, 0])
    q = p.compose_affine(a)
    pt = (mpq(2, 5), mpq(-1, 3))
    assert q(pt) == p(a(pt))


def test_poly_json_round_trip():
    p = Poly(2, {(1, 0): mpq(1, 2), (0, 3): mpq(-4)})
    assert Poly.from_json(2, p.to_json()) == p


@given(polys(2), polys(2), polys(2))
def test_poly_ring_laws(p, q, r):
    assert p * (q + r) == p * q + p * r
    assert (p * q) * r == p * (q * r)
    assert p * q == q * p


@given(polys(2), polys(2))
def test_leibniz_rule(p, q):
    for i in range(2):
        assert (p * q).deriv(i) == p.deriv(i) * q + p * q.deriv(i)


# polytopes


def test_box_vertices_and_volume():
    b = Polytope.box([0, 0, 0], [1, 2, 3])
    assert len(b.vertices) == 8
    assert b.volume() == 6
    assert b.contains_point((mpq(1, 2), 1, 3))
    assert not b.contains_point((mpq(3, 2), 1, 1))


def test_hull_drops_interior_points():
    h = Polytope.hull([[0, 0], [2, 0], [0, 2], [mpq(1, 2), mpq(1, 2)]])
    assert len(h.vertices) == 3
    assert h.volume() == 2


def test_hexagon_area_matches_shoelace():
    pts = [(2, 0), (1, 2), (-1, 2), (-2, 0), (-1, -2), (1, -2)]
    shoelace = Fraction(sum(x0 * y1 - x1 * y0 for (x0, y0), (x1, y1) in zip(pts, pts[1:] + pts[:1])), 2)
    assert Polytope.hull([list(p) for p in pts]).volume() == shoelace == 12


def test_empty_and_bounded():
    e = Polytope.make(1, [((1,), 0), ((-1,), -1)])
    assert e.is_empty()
    assert Polytope.box([0], [1]).is_bounded()


def test_intersection_and_containment():
    a = Polytope.box([0, 0], [2, 2])
    b = Polytope.box([1, 1], [3, 3])
    c = a.intersect(b)
    assert c.volume() == 1
    assert a.contains(c) and not c.contains(a)


def test_difference_covers_exactly():
    e = Polytope.box([0, 0], [3, 3])
    c = Polytope.box([1, 1], [2, 2])
    pieces = difference(e, c)
    assert sum(p.volume() for p in pieces) == 8


def test_facet_parametrization():
    b = Polytope.box([0, 0], [1, 1])
    for k in b.facet_indices():
        param = b.facet_param(k)
        face = b.facet_polytope(k)
        for v in face.vertices:
            assert b.contains_point(param(v))


def test_hyperplane_param_lands_on_plane():
    normal, offset = (1, 2, -1), 3
    param = hyperplane_param(normal, offset)
    for u in [(0, 0), (1, 0), (mpq(1, 3), -2)]:
        x = param(u)
        assert sum(n * xi for n, xi in zip(normal, x)) == offset


@pytest.mark.parametrize("exps", [(0,), (3,), (1, 1), (2, 0), (1, 2, 1), (0, 0, 4)])
def test_simplex_monomial_integral(exps):
    n = len(exps)
    verts = [[0] * n] + [[int(i == j) for i in range(n)] for j in range(n)]
    p = Poly.monomial(exps)
    assert integrate_poly_simplex(p, [la.vec(v) for v in verts]) == simplex_monomial(exps)
    assert Polytope.simplex(verts).integrate(p) == simplex_monomial(exps)


def test_simplex_volume():
    assert simplex_volume([la.vec(v) for v in ([0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1])]) == Fraction(1, 6)


@settings(max_examples=40, deadline=None)
@given(polys(2, max_exp=3), st.tuples(small, small), st.tuples(st.integers(1, 3), st.integers(1, 3)))
def test_box_integral_matches_oracle(p, lo, size):
    hi = tuple(l + s for l, s in zip(lo, size))
    b = Polytope.box(list(lo), list(hi))
    terms = {e: Fraction(int(c.numerator), int(c.denominator)) for e, c in p.sorted_terms()}
    assert b.integrate(p) == box_integral(terms, lo, hi)


@settings(max_examples=25, deadline=None)
@given(polys(2, max_exp=2))
def test_triangulation_is_additive(p):
    whole = Polytope.box([0, 0], [2, 1])
    left, right = Polytope.box([0, 0], [1, 1]), Polytope.box([1, 0], [2, 1])
    assert whole.integrate(p) == left.integrate(p) + right.integrate(p)
