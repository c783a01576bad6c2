import pytest
from gmpy2 import mpq

from orbiforms import epg, orb
from orbiforms import geometry as ge
from orbiforms.forms import PPForm
from orbiforms.kernel import AffineMap, Poly, Polytope

x, y = Poly.var(2, 0), Poly.var(2, 1)


@pytest.fixture
def strip_projection() -> orb.OrbMorphism:
    """[0,1]x[-1,1] with (x, y) ~ (x, -y), projected onto the mirror [-1,1]."""
    Sq = ge.ChartComplex.make(2, [Polytope.box([0, -1], [1, 1])])
    M = ge.ChartComplex.make(1, [Polytope.box([-1], [1])])
    X = epg.action(Sq, [AffineMap.identity(2), AffineMap.make([[1, 0], [0, -1]])], name="strip")
    Y = epg.action(M, [AffineMap.identity(1), AffineMap.make([[-1]])], name="mirror")
    F = epg.equivariant_functor(X, Y, [(0, AffineMap.make([[0, 1]]))], [0, 1])
    return orb.from_functor(F.with_orientation((1,), (1, 1)), "f")


@pytest.fixture
def square_projection(square, interval) -> orb.OrbMorphism:
    F = epg.map_functor(epg.trivial(square), epg.trivial(interval), [(0, AffineMap.make([[1, 0]]))])
    return orb.from_functor(epg.orient_functor(F, (1,)), "p")


def all_hold(checks) -> bool:
    return bool(checks) and all(c.holds for c in checks)


def test_push_forward_along_projection(square, interval, square_projection):
    w = PPForm.from_polys(square, 2, [{(0, 1): x * y}])
    t = Poly.var(1, 0)
    assert orb.pushforward(square_projection, w).equals(PPForm.from_polys(interval, 1, [{(0,): t.scale(mpq(1, 2))}]))


def test_unoriented_push_forward_raises(square, interval):
    F = epg.map_functor(epg.trivial(square), epg.trivial(interval), [(0, AffineMap.make([[1, 0]]))])
    with pytest.raises(epg.EPGError):
        orb.pushforward(orb.from_functor(F), PPForm.zero(square, 2))


def test_identity_morphism_acts_trivially(strip_projection):
    idX = orb.identity(strip_projection.source)
    a = PPForm.from_polys(strip_projection.source.X0, 1, [{(0,): x * y * y}])
    assert orb.pullback(idX, a).equals(a)


def test_projection_formula(strip_projection):
    assert all_hold(orb.check_projection(strip_projection))
    assert not all_hold(orb.check_projection(strip_projection, swap=True))


def test_base_change(strip_projection):
    assert all_hold(orb.check_base_change(strip_projection, strip_projection))
    assert not all_hold(orb.check_base_change(strip_projection, strip_projection, flip=True))


def test_stokes(strip_projection):
    assert all_hold(orb.check_stokes(strip_projection, require_boundary=True))
    assert not all_hold(orb.check_stokes(strip_projection, flip=True))


def test_stokes_sign():
    assert [orb.stokes_sign(s, t) for s, t in [(2, 0), (2, 1), (1, 1), (3, 2)]] == [1, -1, 1, -1]


def test_composition(square_projection):
    to_pt = orb.from_functor(epg.to_point_functor(square_projection.target, (1,)), "pt")
    composite = orb.compose(to_pt, square_projection)
    w = PPForm.from_polys(square_projection.source.X0, 2, [{(0, 1): x * y}])
    value = orb.pushforward(composite, w)
    assert value.evaluate(0, ())[()] == mpq(1, 4)
    assert all_hold(orb.check_composition(to_pt, square_projection))
    assert not all_hold(orb.check_composition(to_pt, square_projection, flip=True))


def test_refinement_inverse(interval):
    _, R = epg.cover(interval, [(0, Polytope.box([0], [mpq(3, 5)])), (0, Polytope.box([mpq(2, 5)], [1]))])
    assert all_hold(orb.check_refinement_inverse(R))
    up = orb.inverse_of_refinement(R)
    assert orb.validate_morphism(up) == []


def test_compose_rejects_mismatched_morphisms(square_projection):
    with pytest.raises(epg.EPGError):
        orb.compose(square_projection, square_projection)
