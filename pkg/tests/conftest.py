from pathlib import Path

import pytest

from orbiforms import geometry as ge
from orbiforms.kernel import AffineMap, Polytope

ZOO = Path(__file__).resolve().parents[1] / "src" / "orbiforms" / "zoo"


@pytest.fixture
def interval() -> ge.ChartComplex:
    return ge.ChartComplex.make(1, [Polytope.box([0], [1])])


@pytest.fixture
def square() -> ge.ChartComplex:
    return ge.ChartComplex.make(2, [Polytope.box([0, 0], [1, 1])])


@pytest.fixture
def projection(square, interval) -> ge.ChartMap:
    """(x, y) -> x from the unit square onto the unit interval."""
    return ge.ChartMap.build(square, interval, [(0, AffineMap.make([[1, 0]]))])
