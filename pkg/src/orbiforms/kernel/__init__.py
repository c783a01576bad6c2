"""Exact rational kernel: scalars, polynomials, affine maps, polytopes."""

from gmpy2 import mpq

from . import linalg
from .affine import AffineMap
from .linalg import to_rat
from .poly import Poly
from .polytope import (
    Polytope,
    difference,
    hyperplane_param,
    hyperplane_unparam,
    integrate_poly_simplex,
    normalize_halfspace,
    simplex_volume,
)

Rat = mpq

__all__ = [
    "AffineMap",
    "Poly",
    "Polytope",
    "Rat",
    "difference",
    "hyperplane_param",
    "hyperplane_unparam",
    "integrate_poly_simplex",
    "linalg",
    "normalize_halfspace",
    "simplex_volume",
    "to_rat",
]
