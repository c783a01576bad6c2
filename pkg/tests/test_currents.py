import pytest
from gmpy2 import mpq

from orbiforms import currents as cu
from orbiforms import epg, orb
from orbiforms import geometry as ge
from orbiforms.forms import PPForm
from orbiforms.kernel import AffineMap, Poly, Polytope

t = Poly.var(1, 0)
x, y = Poly.var(2, 0), Poly.var(2, 1)


@pytest.fixture
def tI(interval):
    return epg.trivial(interval, name="interval")


@pytest.fixture
def tS(square):
    return epg.trivial(square, name="square")


@pytest.fixture
def fS(tS, tI):
    F = epg.map_functor(tS, tI, [(0, AffineMap.make([[1, 0]]))])
    return orb.from_functor(epg.orient_functor(F, (1,)), "p")


@pytest.fixture
def half_turn():
    Q = ge.ChartComplex.make(2, [Polytope.box([-1, -1], [1, 1])])
    return epg.action(Q, [AffineMap.identity(2), AffineMap.make([[-1, 0], [0, -1]])], name="half_turn")


def all_hold(checks) -> bool:
    return bool(checks) and all(c.holds for c in checks)


def test_integration_current(tI):
    one = cu.phi(tI, PPForm.constant(tI.X0, 1), (1,))
    assert one.degree == 0 and one.test_degree == 1
    assert cu.evaluate(one, PPForm.from_polys(tI.X0, 1, [{(0,): t}])) == mpq(1, 2)


def test_dirac_and_degree_mismatch(tI):
    delta = cu.dirac(tI, 0, [mpq(1, 3)])
    assert cu.evaluate(delta, PPForm.function(tI.X0, [t * t])) == mpq(1, 9)
    assert cu.evaluate(delta, PPForm.from_polys(tI.X0, 1, [{(0,): t}])) == 0


def test_derivative_of_integration_current(tI):
    # (dφ(1))(f) = -∫ f' = f(0) - f(1)
    dphi = cu.d(cu.phi(tI, PPForm.constant(tI.X0, 1), (1,)))
    assert cu.evaluate(dphi, PPForm.function(tI.X0, [t * t + 3 * t])) == -4


def test_push_forward_of_point_mass(tS, fS):
    delta = cu.dirac(tS, 0, [mpq(1, 3), mpq(1, 2)])
    pushed = cu.pushforward(fS, delta)
    assert pushed.base is fS.target
    assert cu.evaluate(pushed, PPForm.function(fS.target.X0, [t * t])) == mpq(1, 9)


def test_pull_back_needs_oriented_submersion(tS, tI):
    F = epg.map_functor(tS, tI, [(0, AffineMap.make([[1, 0]]))])
    with pytest.raises(cu.CurrentError):
        cu.pullback(orb.from_functor(F), cu.dirac(tI, 0, [mpq(1, 2)]))


def test_combination_and_wedges(tI):
    delta = cu.dirac(tI, 0, [mpq(1, 2)])
    twice = delta + delta
    f = PPForm.function(tI.X0, [t])
    assert cu.evaluate(twice - delta.scale(3), f) == mpq(-1, 2)
    assert cu.evaluate(cu.left_wedge(f, delta), f) == mpq(1, 4)
    assert cu.evaluate(cu.right_wedge(delta, f), f) == mpq(1, 4)


def test_mismatched_combination_raises(tI, tS):
    with pytest.raises(cu.CurrentError):
        cu.combination([(1, cu.dirac(tI, 0, [0])), (1, cu.dirac(tS, 0, [0, 0]))])


def test_relative_family_vanishes_on_boundary(tS):
    family = cu.test_family(tS, 1, 2, relative=True)
    assert family and all(cu.is_relative(tS, eta) for eta in family)


def test_non_invariant_orientation_rejected():
    M = ge.ChartComplex.make(1, [Polytope.box([-1], [1])])
    Y = epg.action(M, [AffineMap.identity(1), AffineMap.make([[-1]])])
    with pytest.raises(cu.CurrentError):
        cu.phi(Y, PPForm.constant(M, 1), (1,))


def test_bimodule_and_chain_lemma(half_turn):
    assert all_hold(cu.check_bimodule(half_turn, (1,), max_deg=2))
    assert not all_hold(cu.check_bimodule(half_turn, (1,), max_deg=2, swap=True))
    assert all_hold(cu.check_chain_lemma(half_turn, (1,), max_deg=2))
    assert not all_hold(cu.check_chain_lemma(half_turn, (1,), max_deg=2, relative=False))


def test_d_squared(tS):
    assert all_hold(cu.check_d_squared(cu.current_family(tS, (1,)), 2))


def test_push_forward_identities(fS):
    src = cu.current_family(fS.source, (1,))
    tgt = cu.current_family(fS.target, (1,))
    assert all_hold(cu.check_projection(fS, src, tgt, max_deg=2))
    assert all_hold(cu.check_base_change(fS, fS, src, max_deg=2))
    assert not all_hold(cu.check_base_change(fS, fS, src, max_deg=2, flip=True))


def test_relative_stokes(fS):
    assert all_hold(cu.check_relative_stokes(fS, (1,), 2, require_nonzero=True))
    assert not all_hold(cu.check_relative_stokes(fS, (1,), 2, boundary_sign=1))
