"""Sparse multivariate polynomials with rational coefficients."""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

from gmpy2 import mpq

from .affine import AffineMap
from .linalg import ZERO, to_rat


class Poly:
    """Immutable polynomial in ``nvars`` variables.

    ``terms`` maps exponent tuples to nonzero ``mpq`` coefficients.
    """

    __slots__ = ("nvars", "terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[tuple, object] | None = None):
        self.nvars = nvars
        clean: dict[tuple, mpq] = {}
        if terms:
            for e, c in terms.items():
                if len(e) != nvars:
                    raise ValueError(f"exponent {e} has wrong length for {nvars} variables")
                c = to_rat(c)
                if c != 0:
                    clean[tuple(e)] = c
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, nvars: int, terms: dict) -> "Poly":
        p = cls.__new__(cls)
        p.nvars = nvars
        p.terms = terms
        p._hash = None
        return p

    @classmethod
    def const(cls, nvars: int, c) -> "Poly":
        c = to_rat(c)
        return cls._raw(nvars, {(0,) * nvars: c} if c != 0 else {})

    @classmethod
    def zero(cls, nvars: int) -> "Poly":
        return cls._raw(nvars, {})

    @classmethod
    def var(cls, nvars: int, i: int) -> "Poly":
        e = [0] * nvars
        e[i] = 1
        return cls._raw(nvars, {tuple(e): mpq(1)})

    @classmethod
    def linear(cls, coeffs: Sequence, const=0) -> "Poly":
        n = len(coeffs)
        terms = {}
        c0 = to_rat(const)
        if c0 != 0:
            terms[(0,) * n] = c0
        for i, a in enumerate(coeffs):
            a = to_rat(a)
            if a != 0:
                e = [0] * n
                e[i] = 1
                terms[tuple(e)] = a
        return cls._raw(n, terms)

    @classmethod
    def monomial(cls, exps: Sequence[int], c=1) -> "Poly":
        return cls(len(exps), {tuple(exps): c})

    # arithmetic -------------------------------------------------------

    def _check(self, other: "Poly"):
        if other.nvars != self.nvars:
            raise ValueError(f"variable count mismatch: {self.nvars} vs {other.nvars}")

    def __add__(self, other):
        if not isinstance(other, Poly):
            other = Poly.const(self.nvars, other)
        self._check(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = out.get(e, ZERO) + c
            if v == 0:
                out.pop(e, None)
            else:
                out[e] = v
        return Poly._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly._raw(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, Poly):
            other = Poly.const(self.nvars, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "Poly":
        c = to_rat(c)
        if c == 0:
            return Poly.zero(self.nvars)
        return Poly._raw(self.nvars, {e: v * c for e, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return self.scale(other)
        self._check(other)
        out: dict[tuple, mpq] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, ZERO) + c1 * c2
        return Poly._raw(self.nvars, {e: c for e, c in out.items() if c != 0})

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Poly":
        result = Poly.const(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, Poly):
            if self.nvars is not None:
                other = Poly.const(self.nvars, other)
            else:
                return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self.terms.items())))
        return self._hash

    # queries ----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def constant_term(self) -> mpq:
        return self.terms.get((0,) * self.nvars, ZERO)

    def __call__(self, point: Sequence) -> mpq:
        pt = [to_rat(x) for x in point]
        total = ZERO
        for e, c in self.terms.items():
            v = c
            for x, k in zip(pt, e):
                if k:
                    v *= x ** k
            total += v
        return total

    def deriv(self, i: int) -> "Poly":
        out = {}
        for e, c in self.terms.items():
            k = e[i]
            if k:
                ne = list(e)
                ne[i] = k - 1
                out[tuple(ne)] = c * k
        return Poly._raw(self.nvars, out)

    def antideriv(self, i: int) -> "Poly":
        out = {}
        for e, c in self.terms.items():
            ne = list(e)
            ne[i] += 1
            out[tuple(ne)] = c / ne[i]
        return Poly._raw(self.nvars, out)

    def compose_affine(self, a: AffineMap) -> "Poly":
        """q(x) = p(a(x)); a maps R^m into R^nvars."""
        if a.codomain_dim != self.nvars:
            raise ValueError(f"affine map lands in R^{a.codomain_dim}, polynomial has {self.nvars} variables")
        m = a.domain_dim
        if not self.terms:
            return Poly.zero(m)
        lins = [Poly.linear(row, off) if m else Poly.const(0, off) for row, off in zip(a.matrix, a.offset)]
        cache: dict[tuple[int, int], Poly] = {}

        def power(i: int, k: int) -> Poly:
            key = (i, k)
            if key not in cache:
                if k == 0:
                    cache[key] = Poly.const(m, 1)
                elif k == 1:
                    cache[key] = lins[i]
                else:
                    cache[key] = power(i, k - 1) * lins[i]
            return cache[key]

        out: dict[tuple, mpq] = {}
        for e, c in self.terms.items():
            term = Poly.const(m, c)
            for i, k in enumerate(e):
                if k:
                    term = term * power(i, k)
            for te, tc in term.terms.items():
                out[te] = out.get(te, ZERO) + tc
        return Poly._raw(m, {e: c for e, c in out.items() if c != 0})

    def sorted_terms(self) -> list[tuple[tuple, mpq]]:
        return sorted(self.terms.items())

    def to_json(self) -> list:
        return [[list(e), str(c)] for e, c in self.sorted_terms()]

    @classmethod
    def from_json(cls, nvars: int, data: Iterable) -> "Poly":
        terms: dict[tuple, mpq] = {}
        for e, c in data:
            e = tuple(int(k) for k in e)
            terms[e] = terms.get(e, ZERO) + to_rat(c)
        return cls(nvars, terms)

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            mono = "*".join(f"x{i}^{k}" if k > 1 else f"x{i}" for i, k in enumerate(e) if k)
            parts.append(f"{c}" if not mono else f"{c}*{mono}")
        return " + ".join(parts)
