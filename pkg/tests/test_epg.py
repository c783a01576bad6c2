import pytest
from gmpy2 import mpq

from orbiforms import epg
from orbiforms import epg_suites as es
from orbiforms import geometry as ge
from orbiforms.forms import PPForm
from orbiforms.kernel import AffineMap, Poly, Polytope

t = Poly.var(1, 0)
x, y = Poly.var(2, 0), Poly.var(2, 1)


def reflection(n: int = 1, axes=(0,)) -> AffineMap:
    return AffineMap.make([[(-1 if i == j and i in axes else int(i == j)) for j in range(n)] for i in range(n)])


@pytest.fixture
def mirror():
    M = ge.ChartComplex.make(1, [Polytope.box([-1], [1])])
    return epg.action(M, [AffineMap.identity(1), reflection()], name="mirror")


@pytest.fixture
def half_turn():
    Q = ge.ChartComplex.make(2, [Polytope.box([-1, -1], [1, 1])])
    return epg.action(Q, [AffineMap.identity(2), reflection(2, (0, 1))], name="half_turn")


def test_action_groupoid_is_valid(mirror):
    assert epg.validate_groupoid(mirror) == []
    assert len(mirror.X1.charts) == 2


def test_trivial_groupoid_is_valid(square):
    G = epg.trivial(square)
    assert epg.validate_groupoid(G) == []
    assert epg.find_partition_of_unity(G).equals(epg.one(G))


def test_partition_of_unity_on_mirror(mirror):
    rho = epg.find_partition_of_unity(mirror)
    assert epg.is_partition(mirror, rho) == []
    assert rho.equals(PPForm.constant(mirror.X0, mpq(1, 2)))
    assert epg.is_partition(mirror, epg.one(mirror)) == ["t_* s^* rho differs from 1"]


def test_invariance(mirror):
    assert epg.check_invariant(mirror, PPForm.function(mirror.X0, [t * t]))
    assert not epg.check_invariant(mirror, PPForm.function(mirror.X0, [t]))


def test_J_sums_over_arrows(mirror):
    f = PPForm.function(mirror.X0, [t * t])
    assert epg.J(mirror, f).equals(PPForm.function(mirror.X0, [t * t * 2]))
    rho = epg.find_partition_of_unity(mirror)
    assert epg.J(mirror, epg.K(rho, f)).equals(f)


def test_mirror_density_integral(mirror):
    # half of ∫_{-1}^{1} x² dx
    assert es.average_density(mirror, PPForm.function(mirror.X0, [t * t])) == mpq(1, 3)


def test_reflection_is_not_orientable(mirror):
    F = epg.orient_functor(epg.to_point_functor(mirror), (1,))
    assert epg.orientation_compatibility(F) == ["relative orientation incompatible with t on arrow charts [1]"]
    with pytest.raises(epg.EPGError):
        epg.integrate(mirror, PPForm.from_polys(mirror.X0, 1, [{(0,): t * t}]), (1,))


def test_half_turn_integral(half_turn):
    assert epg.validate_groupoid(half_turn) == []
    w = PPForm.from_polys(half_turn.X0, 2, [{(0, 1): x * x}])
    # half of ∫ x² over [-1,1]², which is 4/3
    assert epg.integrate(half_turn, w, (1,)) == mpq(2, 3)


def test_restriction_is_refinement(mirror):
    pieces = [(0, Polytope.box([-1], [mpq(1, 5)])), (0, Polytope.box([mpq(-1, 5)], [1]))]
    G, R = epg.restrict(mirror, pieces, name="pieces")
    assert epg.validate_groupoid(G) == []
    assert epg.validate_refinement(R) == []
    checks = es.check_refinement(R)
    assert all(c.holds for c in checks), [c for c in checks if not c.holds]


def test_missing_piece_is_not_refinement(mirror):
    _, R = epg.restrict(mirror, [(0, Polytope.box([-1], [mpq(-1, 2)]))])
    assert epg.validate_refinement(R) == ["object chart 0 of the target is not reached up to isomorphism"]


def test_cover_groupoid_partition(interval):
    G, R = epg.cover(interval, [(0, Polytope.box([0], [mpq(3, 5)])), (0, Polytope.box([mpq(2, 5)], [1]))])
    assert epg.validate_groupoid(G) == []
    rho = epg.find_partition_of_unity(G)
    assert epg.is_partition(G, rho) == []
    # the cover still integrates x to 1/2
    assert es.average_density(G, epg.functor_pullback(R, PPForm.function(interval, [t]))) == mpq(1, 2)


def test_restriction_of_restriction_has_partition():
    T = ge.ChartComplex.make(1, [Polytope.box([0], [2])])
    U1, _ = epg.cover(T, [(0, Polytope.box([0], [mpq(6, 5)])), (0, Polytope.box([mpq(4, 5)], [2]))])
    pieces = [(0, Polytope.box([0], [mpq(3, 5)])), (0, Polytope.box([mpq(2, 5)], [mpq(6, 5)])), (1, Polytope.box([mpq(4, 5)], [mpq(8, 5)])), (1, Polytope.box([mpq(7, 5)], [2]))]
    U2, _ = epg.restrict(U1, pieces)
    assert epg.is_partition(U2, epg.find_partition_of_unity(U2)) == []


def test_broken_inverse_is_caught():
    M = ge.ChartComplex.make(1, [Polytope.box([-1], [1])])
    A = ge.ChartComplex.make(1, [Polytope.box([-1], [1]), Polytope.box([-1], [1])])
    ident, neg = AffineMap.identity(1), reflection()
    G = epg.explicit("bad", M, A, [(0, ident), (0, ident)], [(0, ident), (0, neg)], [(0, ident)], [(0, ident), (1, ident)], [(0, ident), (1, neg), (1, ident), (0, neg)])
    issues = epg.validate_groupoid(G)
    assert "s∘i = t fails on charts [1]" in issues


def test_equivariant_functor_with_wrong_homomorphism(mirror):
    F = epg.equivariant_functor(mirror, mirror, [(0, AffineMap.identity(1))], [1, 0])
    assert epg.validate_functor(F)


def test_JK_suite_on_half_turn(half_turn):
    for check in es.check_J_lemma(half_turn) + es.check_JK_inverse(half_turn):
        assert check.holds, check
