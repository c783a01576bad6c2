import random

import pytest
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from orbiforms import chart_suites as cs
from orbiforms import forms as fm
from orbiforms import geometry as ge
from orbiforms.forms import PPForm
from orbiforms.kernel import AffineMap, Poly, Polytope

x, y = Poly.var(2, 0), Poly.var(2, 1)
SQUARE = ge.ChartComplex.make(2, [Polytope.box([0, 0], [1, 1])])


def test_multi_indices_and_wedge_sign():
    assert fm.multi_indices(3, 2) == [(0, 1), (0, 2), (1, 2)]
    assert fm.wedge_sign((0,), (1,)) == 1
    assert fm.wedge_sign((1,), (0,)) == -1
    assert fm.wedge_sign((0,), (0,)) == 0


def test_exterior_derivative_frozen(square):
    a = PPForm.from_polys(square, 1, [{(0,): x * x, (1,): x * y}])
    expected = PPForm.from_polys(square, 2, [{(0, 1): y}])
    assert fm.d(a).equals(expected)


def test_wedge_anticommutes_on_one_forms(square):
    a = PPForm.from_polys(square, 1, [{(0,): x}])
    b = PPForm.from_polys(square, 1, [{(1,): y}])
    assert fm.wedge(a, b).equals(-fm.wedge(b, a))
    assert fm.wedge(a, b).equals(PPForm.from_polys(square, 2, [{(0, 1): x * y}]))


def test_integral_over_square(square):
    w = PPForm.from_polys(square, 2, [{(0, 1): x * y}])
    assert fm.integrate(w, (1,)) == mpq(1, 4)
    assert fm.integrate(w, (-1,)) == mpq(-1, 4)


def test_fiber_integration_frozen(square, interval, projection):
    w = PPForm.from_polys(square, 2, [{(0, 1): x * y}])
    t = Poly.var(1, 0)
    expected = PPForm.from_polys(interval, 1, [{(0,): t.scale(mpq(1, 2))}])
    assert fm.pushforward(projection, (1,), w).equals(expected)


def test_fiber_integration_by_elimination_agrees_with_triangulation():
    tri = Polytope.hull([[0, 0], [2, 0], [0, 1]])
    p = x * x * y + 3 * y
    assert fm.integrate_by_elimination(tri, p) == tri.integrate(p)


def test_pullback_by_reflection(interval):
    rev = ge.ChartMap.build(interval, interval, [(0, AffineMap.make([[-1]], [1]))])
    t = Poly.var(1, 0)
    a = PPForm.from_polys(interval, 1, [{(0,): t}])
    pulled = fm.pullback(rev, a)
    # (1 - t) d(1 - t) = (t - 1) dt
    assert pulled.equals(PPForm.from_polys(interval, 1, [{(0,): t - Poly.const(1, 1)}]))


def test_stokes_on_square(square):
    b = ge.build_boundary(square)
    o_b = ge.boundary_orientation(b, (1,))
    a = PPForm.from_polys(square, 1, [{(0,): x * y * y, (1,): x ** 3}])
    inner = fm.integrate(fm.d(a), (1,))
    assert inner == fm.integrate(fm.pullback(b.inclusion, a), o_b)
    # d(xy² dx + x³ dy) = (3x² - 2xy) dx∧dy
    assert inner == mpq(1, 2)


def test_piecewise_cells_sum(interval):
    t = Poly.var(1, 0)
    cells = [[(Polytope.box([0], [mpq(1, 2)]), {(): t}), (Polytope.box([mpq(1, 2)], [1]), {(): t})]]
    split = PPForm.from_cells(interval, 0, cells)
    assert split.equals(PPForm.function(interval, [t]))


def test_smoothness_violation_is_reported(interval):
    t = Poly.var(1, 0)
    one = Poly.const(1, 1)
    cells = [[(Polytope.box([0], [mpq(1, 2)]), {(): t}), (Polytope.box([mpq(1, 2)], [1]), {(): one - t})]]
    kink = PPForm.from_cells(interval, 0, cells, smoothness=1)
    assert fm.validate_smoothness(kink)
    assert not fm.validate_smoothness(kink.with_smoothness(0))


def test_incompatible_degrees_raise(square):
    a = PPForm.from_polys(square, 1, [{(0,): x}])
    b = PPForm.from_polys(square, 2, [{(0, 1): y}])
    with pytest.raises(fm.FormError):
        a + b
    assert (PPForm.zero(square, 1) + b).equals(b)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 1))
def test_d_squared_vanishes(seed, degree):
    a = cs.random_form(random.Random(seed), SQUARE, degree)
    assert fm.d(fm.d(a)).is_zero()


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_leibniz(seed):
    rng = random.Random(seed)
    a, b = cs.random_form(rng, SQUARE, 1), cs.random_form(rng, SQUARE, 0)
    assert fm.d(fm.wedge(a, b)).equals(fm.wedge(fm.d(a), b) - fm.wedge(a, fm.d(b)))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_pullback_commutes_with_d_and_composition(seed):
    rng = random.Random(seed)
    f, g = cs.random_self_map(rng, SQUARE), cs.random_self_map(rng, SQUARE)
    a = cs.random_form(rng, SQUARE, 1)
    assert fm.pullback(f, fm.d(a)).equals(fm.d(fm.pullback(f, a)))
    assert fm.pullback(ge.compose_maps(g, f), a).equals(fm.pullback(f, fm.pullback(g, a)))


def test_calculus_suite_on_square(square):
    checks = cs.check_calculus(square, seed=3, count=20)
    assert checks and all(c.holds for c in checks)
