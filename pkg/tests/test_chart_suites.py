from gmpy2 import mpq

from orbiforms import chart_suites as cs
from orbiforms import forms as fm
from orbiforms import geometry as ge
from orbiforms.forms import PPForm
from orbiforms.kernel import AffineMap, Poly


def second_projection(square, interval) -> ge.ChartMap:
    return ge.ChartMap.build(square, interval, [(0, AffineMap.make([[0, 1]]))])


def test_normalization(square):
    assert cs.check_normalization(square, (1,)).holds


def test_push_forward_composes(square, interval, projection):
    to_pt = ge.to_point(interval)
    assert cs.check_push_composition(to_pt, (1,), projection, (1,)).holds


def test_projection_formula(projection):
    assert cs.check_projection_formula(projection, (1,)).holds


def test_base_change_and_its_fixture(projection):
    assert cs.check_base_change(projection, projection, (1,)).holds
    assert not cs.check_base_change(projection, projection, (1,), flip=True).holds


def test_flip_sign_is_minus_one_for_two_fibered_intervals(square, interval, projection):
    q = second_projection(square, interval)
    check = cs.check_flip(projection, (1,), q)
    assert check.holds and check.name == "flip formula (sign -1)"
    assert not cs.check_flip(projection, (1,), q, sign_override=1).holds


def test_swap_orientation(square, interval, projection):
    check = cs.check_swap_orientation(projection, (1,), second_projection(square, interval))
    assert check.holds and "sign -1" in check.name


def test_canonical_orientations(interval):
    rev = ge.ChartMap.build(interval, interval, [(0, AffineMap.make([[-1]], [1]))])
    assert cs.check_composed_canonical(rev, rev).holds
    assert cs.check_inverse_push(rev, rev).holds


def test_stokes_sign_and_sensitivity(projection):
    checks = cs.check_stokes(projection, (1,), require_nonzero=True)
    assert all(c.holds for c in checks)
    assert not cs.check_stokes(projection, (1,), flip=True)[0].holds


def test_vertical_boundary_term_frozen(square, interval, projection):
    y = Poly.var(2, 1)
    xi = PPForm.function(square, [y])
    # f_*ξ vanishes for degree reasons and f_*dξ = ∫ dy = 1, so the boundary term is -1
    bd = cs.vertical_boundary_term(projection, (1,), xi)
    assert bd.equals(PPForm.constant(interval, -1))
    assert fm.pushforward(projection, (1,), fm.d(xi)).equals(PPForm.constant(interval, 1))


def test_boundary_partition(projection):
    assert cs.check_boundary_partition(projection).holds


def test_degree_sums():
    cx = ge.ChartComplex.point()
    a = PPForm.constant(cx, 1)
    b = PPForm.constant(cx, mpq(1, 2))
    out = cs.with_degree_sums([a, b], [0])
    assert len(out) == 3 and out[2].equals(PPForm.constant(cx, mpq(3, 2)))
