"""Exact dense linear algebra over the rationals.

Matrices are tuples of row tuples of ``mpq``. Everything here is small
(dimension rarely above six), so plain Gaussian elimination is fine.
"""

from __future__ import annotations

from typing import Sequence

from gmpy2 import mpq

Vector = tuple
Matrix = tuple

ZERO = mpq(0)
ONE = mpq(1)


def to_rat(x) -> mpq:
    if isinstance(x, str):
        return mpq(x.strip())
    return mpq(x)


def vec(xs: Sequence) -> Vector:
    return tuple(to_rat(x) for x in xs)


def mat(rows: Sequence[Sequence]) -> Matrix:
    return tuple(vec(r) for r in rows)


def zeros(r: int, c: int) -> Matrix:
    return tuple((ZERO,) * c for _ in range(r))


def identity(n: int) -> Matrix:
    return tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n))


def shape(a: Matrix, ncols: int | None = None) -> tuple[int, int]:
    if len(a) == 0:
        return 0, (ncols or 0)
    return len(a), len(a[0])


def transpose(a: Matrix, ncols: int = 0) -> Matrix:
    if not a:
        return tuple(() for _ in range(ncols))
    return tuple(zip(*a))


def matmul(a: Matrix, b: Matrix, inner: int | None = None, bcols: int | None = None) -> Matrix:
    """Product a @ b. ``bcols`` is needed when b has no rows."""
    if not b:
        n = bcols if bcols is not None else 0
        return tuple((ZERO,) * n for _ in a)
    bt = tuple(zip(*b))
    return tuple(tuple(sum((x * y for x, y in zip(row, col)), ZERO) for col in bt) for row in a)


def matvec(a: Matrix, v: Vector) -> Vector:
    return tuple(sum((x * y for x, y in zip(row, v)), ZERO) for row in a)


def dot(u: Vector, v: Vector) -> mpq:
    return sum((x * y for x, y in zip(u, v)), ZERO)


def rref(a: Matrix, ncols: int | None = None) -> tuple[list[list[mpq]], list[int]]:
    """Reduced row echelon form and pivot columns."""
    rows = [list(r) for r in a]
    if not rows:
        return [], []
    n = len(rows[0]) if ncols is None else ncols
    pivots: list[int] = []
    r = 0
    for c in range(n):
        piv = None
        for i in range(r, len(rows)):
            if rows[i][c] != 0:
                piv = i
                break
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        p = rows[r][c]
        rows[r] = [x / p for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                fac = rows[i][c]
                rows[i] = [x - fac * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows, pivots


def rank(a: Matrix) -> int:
    return len(rref(a)[1])


def det(a: Matrix) -> mpq:
    n = len(a)
    if n == 0:
        return ONE
    rows = [list(r) for r in a]
    result = ONE
    for c in range(n):
        piv = None
        for i in range(c, n):
            if rows[i][c] != 0:
                piv = i
                break
        if piv is None:
            return ZERO
        if piv != c:
            rows[c], rows[piv] = rows[piv], rows[c]
            result = -result
        p = rows[c][c]
        result *= p
        for i in range(c + 1, n):
            if rows[i][c] != 0:
                fac = rows[i][c] / p
                rows[i] = [x - fac * y for x, y in zip(rows[i], rows[c])]
    return result


def sign(x) -> int:
    return (x > 0) - (x < 0)


def solve(a: Matrix, b: Vector) -> Vector | None:
    """Unique solution of a x = b for square a, or None if singular."""
    n = len(a)
    aug = tuple(tuple(row) + (bi,) for row, bi in zip(a, b))
    rows, piv = rref(aug, ncols=n)
    if len(piv) < n:
        return None
    return tuple(rows[i][n] for i in range(n))


def inverse(a: Matrix) -> Matrix | None:
    n = len(a)
    if n == 0:
        return ()
    aug = tuple(tuple(row) + ident for row, ident in zip(a, identity(n)))
    rows, piv = rref(aug, ncols=n)
    if len(piv) < n:
        return None
    return tuple(tuple(rows[i][n:]) for i in range(n))


def left_inverse(a: Matrix, ncols: int) -> Matrix:
    """(aᵀa)⁻¹aᵀ for a matrix of full column rank ``ncols``."""
    at = transpose(a, ncols)
    g = matmul(at, a)
    gi = inverse(g)
    if gi is None:
        raise ValueError("matrix does not have full column rank")
    return matmul(gi, at, bcols=len(a))


def nullspace(a: Matrix, ncols: int) -> list[Vector]:
    if not a:
        return [tuple(ONE if i == j else ZERO for i in range(ncols)) for j in range(ncols)]
    rows, piv = rref(a, ncols)
    free = [c for c in range(ncols) if c not in piv]
    basis = []
    for f in free:
        v = [ZERO] * ncols
        v[f] = ONE
        for r, p in enumerate(piv):
            v[p] = -rows[r][f]
        basis.append(tuple(v))
    return basis


def affine_rank(points: Sequence[Vector]) -> int:
    """Dimension of the affine hull; -1 for an empty set."""
    if not points:
        return -1
    p0 = points[0]
    diffs = tuple(tuple(x - y for x, y in zip(p, p0)) for p in points[1:])
    if not diffs or not diffs[0]:
        return 0
    return rank(diffs)
