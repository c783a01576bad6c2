from gmpy2 import mpq

from orbiforms import geometry as ge
from orbiforms.kernel import AffineMap, Polytope


def test_complex_validates(square):
    assert square.validate() == []
    assert square.standard_orientation() == (1,)


def test_degenerate_chart_is_reported():
    flat = Polytope.make(2, [((1, 0), 1), ((-1, 0), 0), ((0, 1), 0), ((0, -1), 0)])
    half_plane = Polytope.make(2, [((0, 1), 0)])
    cx = ge.ChartComplex.make(2, [Polytope.box([0, 0], [1, 1]), flat, half_plane])
    assert cx.validate() == ["chart 1: not full-dimensional", "chart 2: unbounded"]


def test_projection_flags(projection):
    assert projection.flags.submersion
    assert projection.flags.strongly_smooth
    assert not projection.flags.local_diffeo
    assert projection.rdim == 1
    assert projection.validate() == []


def test_reflection_is_local_diffeo(interval):
    rev = ge.ChartMap.build(interval, interval, [(0, AffineMap.make([[-1]], [1]))])
    assert rev.flags.local_diffeo
    assert ge.canonical_orientation(rev) == (-1,)


def test_map_leaving_target_is_reported(interval):
    shift = ge.ChartMap.build(interval, interval, [(0, AffineMap.make([[1]], [mpq(1, 2)]))])
    assert any("maps outside" in msg for msg in shift.validate())


def test_false_flag_claim_names_chart(projection):
    claim = ge.MapFlags(True, True, True)
    assert projection.validate(claim) == ["flag local_diffeo claimed but fails on charts [0]"]


def test_compose_maps(square, interval, projection):
    rev = ge.ChartMap.build(interval, interval, [(0, AffineMap.make([[-1]], [1]))])
    g = ge.compose_maps(rev, projection)
    assert g.affine(0)((mpq(1, 4), mpq(3, 4))) == (mpq(3, 4),)


def test_square_boundary_orientation(square):
    b = ge.build_boundary(square)
    assert len(b.complex.charts) == 4
    # outward normal first: the left and bottom edges run against their parametrization
    assert ge.boundary_orientation(b, square.standard_orientation()) == (-1, 1, -1, 1)


def test_vertical_and_horizontal_boundary(projection):
    split = ge.decompose_boundary(projection)
    # the edges y = 0 and y = 1 are vertical for (x, y) -> x
    assert split.vertical == (1, 2)
    assert split.horizontal == (0, 3)


def test_fiber_product_of_projection_with_itself(projection):
    fp = ge.fiber_product(projection, projection)
    assert fp.complex.dim == 3
    assert fp.q.flags.submersion and fp.p.flags.submersion
    for k in range(len(fp.complex.charts)):
        v = fp.complex.polytope(k).centroid()
        assert projection.affine(0)(fp.q.affine(k)(v)) == projection.affine(0)(fp.p.affine(k)(v))


def test_induced_relative_orientation(projection):
    assert ge.induced_relative(projection, (1,), (1,)) == (1,)
    assert ge.induced_relative(projection, (-1,), (1,)) == (-1,)
