"""Affine maps x -> A x + b with rational entries."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from gmpy2 import mpq

from . import linalg as la


@dataclass(frozen=True)
class AffineMap:
    matrix: tuple  # codomain_dim rows, each of length domain_dim
    offset: tuple
    domain_dim: int

    def __post_init__(self):
        if len(self.matrix) != len(self.offset):
            raise ValueError("matrix rows and offset length differ")
        for row in self.matrix:
            if len(row) != self.domain_dim:
                raise ValueError("matrix row length differs from domain_dim")

    @classmethod
    def make(cls, matrix: Sequence[Sequence], offset: Sequence | None = None, domain_dim: int | None = None) -> "AffineMap":
        m = la.mat(matrix)
        if domain_dim is None:
            if not m:
                raise ValueError("domain_dim required for a map into R^0")
            domain_dim = len(m[0])
        off = la.vec(offset) if offset is not None else (la.ZERO,) * len(m)
        return cls(m, off, domain_dim)

    @classmethod
    def identity(cls, n: int) -> "AffineMap":
        return cls(la.identity(n), (la.ZERO,) * n, n)

    @classmethod
    def constant(cls, point: Sequence, domain_dim: int) -> "AffineMap":
        p = la.vec(point)
        return cls(tuple((la.ZERO,) * domain_dim for _ in p), p, domain_dim)

    @property
    def codomain_dim(self) -> int:
        return len(self.offset)

    def __call__(self, x: Sequence) -> tuple:
        return tuple(v + o for v, o in zip(la.matvec(self.matrix, x), self.offset))

    def compose(self, inner: "AffineMap") -> "AffineMap":
        """self ∘ inner."""
        if inner.codomain_dim != self.domain_dim:
            raise ValueError("dimension mismatch in composition")
        m = la.matmul(self.matrix, inner.matrix, bcols=inner.domain_dim) if self.matrix else ()
        if not m:
            m = ()
        off = self(inner.offset)
        return AffineMap(m, off, inner.domain_dim)

    def is_square(self) -> bool:
        return self.domain_dim == self.codomain_dim

    def det(self) -> mpq:
        if not self.is_square():
            raise ValueError("determinant of a non-square map")
        return la.det(self.matrix)

    def rank(self) -> int:
        if not self.matrix or self.domain_dim == 0:
            return 0
        return la.rank(self.matrix)

    def inverse(self) -> "AffineMap":
        if not self.is_square():
            raise ValueError("inverse of a non-square map")
        inv = la.inverse(self.matrix)
        if inv is None:
            raise ValueError("singular affine map")
        off = tuple(-v for v in la.matvec(inv, self.offset))
        return AffineMap(inv, off, self.domain_dim)

    def columns(self) -> tuple:
        return la.transpose(self.matrix, self.domain_dim)

    def to_json(self) -> dict:
        return {
            "matrix": [[str(x) for x in row] for row in self.matrix],
            "offset": [str(x) for x in self.offset],
            "domain_dim": self.domain_dim,
        }
