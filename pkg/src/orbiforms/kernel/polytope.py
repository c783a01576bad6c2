"""Compact convex rational polytopes in halfspace form.

A halfspace is a pair ``(normal, offset)`` meaning ``normal · x <= offset``.
Normals are scaled to primitive integer vectors so equal halfspaces compare
equal. Vertex enumeration is brute force over subsets of active constraints;
the polytopes here live in dimension at most four with a handful of facets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

from gmpy2 import mpq

from . import linalg as la
from .affine import AffineMap
from .poly import Poly

Halfspace = tuple  # (normal: tuple[mpq, ...], offset: mpq)

_INFEASIBLE = "infeasible"


def normalize_halfspace(normal: Sequence, offset) -> Halfspace | str | None:
    """Scale to a primitive integer normal. None for trivially true rows."""
    a = tuple(la.to_rat(x) for x in normal)
    b = la.to_rat(offset)
    if all(x == 0 for x in a):
        return None if b >= 0 else _INFEASIBLE
    lcm = 1
    for x in a:
        lcm = lcm * x.denominator // math.gcd(lcm, int(x.denominator))
    ints = [int(x * lcm) for x in a]
    g = 0
    for v in ints:
        g = math.gcd(g, abs(v))
    scale = mpq(lcm, g)
    return tuple(mpq(v // g) for v in ints), b * scale


@dataclass(frozen=True)
class Polytope:
    ambient_dim: int
    halfspaces: tuple  # tuple of Halfspace

    @classmethod
    def make(cls, dim: int, halfspaces: Iterable) -> "Polytope":
        hs = set()
        infeasible = False
        for a, b in halfspaces:
            if len(a) != dim:
                raise ValueError(f"halfspace normal {a} not in R^{dim}")
            h = normalize_halfspace(a, b)
            if h is None:
                continue
            if h == _INFEASIBLE:
                infeasible = True
                continue
            hs.add(h)
        if infeasible:
            return cls.empty(dim)
        return cls(dim, tuple(sorted(hs)))

    @classmethod
    def empty(cls, dim: int) -> "Polytope":
        return cls(dim, (((la.ZERO,) * dim, mpq(-1)),))

    @classmethod
    def point_space(cls) -> "Polytope":
        return cls(0, ())

    @classmethod
    def box(cls, lo: Sequence, hi: Sequence) -> "Polytope":
        n = len(lo)
        hs = []
        for i in range(n):
            e = [0] * n
            e[i] = 1
            hs.append((e, hi[i]))
            e = [0] * n
            e[i] = -1
            hs.append((e, -la.to_rat(lo[i])))
        return cls.make(n, hs).canonical()

    @classmethod
    def hull(cls, points: Sequence[Sequence]) -> "Polytope":
        """Halfspace form of the convex hull of a full-dimensional point set."""
        pts = sorted(set(la.vec(p) for p in points))
        n = len(pts[0])
        if n == 0:
            return cls.point_space()
        if la.affine_rank(pts) < n:
            raise ValueError("hull() needs a full-dimensional point set")
        hs = set()
        for sub in combinations(pts, n):
            p0 = sub[0]
            diffs = tuple(tuple(x - y for x, y in zip(p, p0)) for p in sub[1:])
            if diffs:
                ns = la.nullspace(diffs, n)
            else:
                ns = [tuple(la.ONE if i == j else la.ZERO for i in range(n)) for j in range(n)]
            if len(ns) != 1:
                continue
            normal = ns[0]
            vals = [la.dot(normal, p) for p in pts]
            c = la.dot(normal, p0)
            if all(v <= c for v in vals):
                hs.add(normalize_halfspace(normal, c))
            elif all(v >= c for v in vals):
                hs.add(normalize_halfspace(tuple(-x for x in normal), -c))
        return cls(n, tuple(sorted(hs)))

    @classmethod
    def simplex(cls, points: Sequence[Sequence]) -> "Polytope":
        return cls.hull(points)

    # basic geometry ---------------------------------------------------

    @cached_property
    def vertices(self) -> tuple:
        n = self.ambient_dim
        hs = self.halfspaces
        if n == 0:
            return ((),) if all(b >= 0 for _, b in hs) else ()
        found = set()
        for sub in combinations(range(len(hs)), n):
            a = tuple(hs[i][0] for i in sub)
            b = tuple(hs[i][1] for i in sub)
            x = la.solve(a, b)
            if x is None or x in found:
                continue
            if all(la.dot(nm, x) <= off for nm, off in hs):
                found.add(x)
        return tuple(sorted(found))

    def is_empty(self) -> bool:
        return not self.vertices

    @cached_property
    def dim(self) -> int:
        return la.affine_rank(list(self.vertices))

    def is_full_dim(self) -> bool:
        return self.dim == self.ambient_dim

    def is_bounded(self) -> bool:
        """A nonempty H-polytope is bounded iff the recession cone {a·d <= 0} is {0}."""
        n = self.ambient_dim
        if n == 0:
            return True
        normals = [a for a, _ in self.halfspaces]
        if not normals or la.rank(tuple(normals)) < n:
            return False
        # a pointed recession cone is {0} iff it has no extreme ray; every
        # extreme ray is cut out by n-1 independent tight rows
        for sub in combinations(normals, n - 1):
            ns = la.nullspace(tuple(sub), n) if sub else [tuple(la.ONE if i == j else la.ZERO for i in range(n)) for j in range(n)]
            for d in ns:
                for cand in (d, tuple(-x for x in d)):
                    if all(la.dot(a, cand) <= 0 for a in normals):
                        return False
        return True

    @cached_property
    def tight_sets(self) -> tuple:
        """For each halfspace, the indices of vertices lying on its hyperplane."""
        out = []
        for a, b in self.halfspaces:
            out.append(frozenset(i for i, v in enumerate(self.vertices) if la.dot(a, v) == b))
        return tuple(out)

    def canonical(self) -> "Polytope":
        """Drop redundant halfspaces (full-dimensional case) and sort."""
        if self.is_empty():
            return Polytope.empty(self.ambient_dim)
        if not self.is_full_dim():
            return self
        keep = []
        verts = self.vertices
        for h, tight in zip(self.halfspaces, self.tight_sets):
            if la.affine_rank([verts[i] for i in tight]) == self.ambient_dim - 1:
                keep.append(h)
        out = Polytope(self.ambient_dim, tuple(sorted(set(keep))))
        out.__dict__["vertices"] = verts
        return out

    def intersect(self, other: "Polytope") -> "Polytope":
        if other.ambient_dim != self.ambient_dim:
            raise ValueError("ambient dimension mismatch")
        return Polytope.make(self.ambient_dim, self.halfspaces + other.halfspaces)

    def with_halfspaces(self, extra: Iterable) -> "Polytope":
        return Polytope.make(self.ambient_dim, tuple(self.halfspaces) + tuple(extra))

    def preimage(self, a: AffineMap, domain: "Polytope | None" = None) -> "Polytope":
        """domain ∩ a⁻¹(self); a maps the domain space into self's space."""
        if a.codomain_dim != self.ambient_dim:
            raise ValueError("affine map does not land in the polytope's space")
        hs = []
        for normal, off in self.halfspaces:
            new_normal = la.matvec(la.transpose(a.matrix, a.domain_dim), normal) if a.matrix else (la.ZERO,) * a.domain_dim
            hs.append((new_normal, off - la.dot(normal, a.offset)))
        if domain is not None:
            if domain.ambient_dim != a.domain_dim:
                raise ValueError("domain polytope not in the map's domain space")
            hs.extend(domain.halfspaces)
        return Polytope.make(a.domain_dim, hs)

    def image(self, a: AffineMap) -> "Polytope":
        """Image under an invertible affine map."""
        return self.preimage(a.inverse())

    def contains_point(self, x: Sequence) -> bool:
        return all(la.dot(a, x) <= b for a, b in self.halfspaces)

    def contains(self, other: "Polytope") -> bool:
        return all(self.contains_point(v) for v in other.vertices)

    def centroid(self) -> tuple:
        vs = self.vertices
        k = len(vs)
        return tuple(sum((v[i] for v in vs), la.ZERO) / k for i in range(self.ambient_dim))

    # facets -----------------------------------------------------------

    def facet_indices(self) -> list[int]:
        """Indices of halfspaces that support facets."""
        return list(self._facet_indices)

    @cached_property
    def _facet_indices(self) -> tuple:
        verts = self.vertices
        n = self.ambient_dim
        return tuple(
            i
            for i, tight in enumerate(self.tight_sets)
            if la.affine_rank([verts[j] for j in tight]) == n - 1
        )

    def facet_param(self, index: int) -> AffineMap:
        return hyperplane_param(*self.halfspaces[index])

    def facet_polytope(self, index: int) -> "Polytope":
        return self.preimage(self.facet_param(index)).canonical()

    # triangulation and integration ------------------------------------

    @cached_property
    def simplices(self) -> tuple:
        """Pulling triangulation on the lexicographically sorted vertices."""
        if not self.is_full_dim():
            raise ValueError("triangulation needs a full-dimensional polytope")
        verts = self.vertices
        n = self.ambient_dim
        if n == 0:
            return ((verts[0],),)
        tights = [t for t in self.tight_sets if t]
        cache: dict = {}

        def face_dim(s: frozenset) -> int:
            return la.affine_rank([verts[i] for i in sorted(s)])

        def tri(face: frozenset, k: int) -> list:
            if face in cache:
                return cache[face]
            if k == 0:
                res = [(min(face),)]
            else:
                v0 = min(face)
                subfaces = set()
                for t in tights:
                    g = face & t
                    if g != face and v0 not in g and len(g) >= k and face_dim(g) == k - 1:
                        subfaces.add(g)
                res = []
                for g in sorted(subfaces, key=sorted):
                    for s in tri(g, k - 1):
                        res.append((v0,) + s)
            cache[face] = res
            return res

        result = tri(frozenset(range(len(verts))), n)
        return tuple(tuple(verts[i] for i in s) for s in result)

    def triangulate(self) -> tuple:
        return self.simplices

    def volume(self) -> mpq:
        return sum((simplex_volume(s) for s in self.simplices), la.ZERO)

    def integrate(self, p: Poly) -> mpq:
        if p.nvars != self.ambient_dim:
            raise ValueError("polynomial and polytope dimensions differ")
        if p.is_zero():
            return la.ZERO
        return sum((integrate_poly_simplex(p, s) for s in self.simplices), la.ZERO)

    def to_json(self) -> list:
        return [[[str(x) for x in a], str(b)] for a, b in self.halfspaces]


def hyperplane_param(normal: Sequence, offset) -> AffineMap:
    """Affine injection R^{n-1} -> {x : normal·x = offset}.

    The pivot is the first nonzero normal entry; the remaining coordinates
    are kept in order as facet coordinates.
    """
    n = len(normal)
    j = next(i for i, x in enumerate(normal) if x != 0)
    aj = normal[j]
    rows = []
    offs = []
    others = [i for i in range(n) if i != j]
    for i in range(n):
        if i == j:
            rows.append(tuple(-normal[k] / aj for k in others))
            offs.append(la.to_rat(offset) / aj)
        else:
            rows.append(tuple(la.ONE if k == i else la.ZERO for k in others))
            offs.append(la.ZERO)
    return AffineMap(tuple(rows), tuple(offs), n - 1)


def hyperplane_unparam(normal: Sequence) -> AffineMap:
    """Left inverse of hyperplane_param: drop the pivot coordinate."""
    n = len(normal)
    j = next(i for i, x in enumerate(normal) if x != 0)
    rows = [tuple(la.ONE if k == i else la.ZERO for k in range(n)) for i in range(n) if i != j]
    return AffineMap(tuple(rows), (la.ZERO,) * (n - 1), n)


def simplex_affine(s: Sequence) -> AffineMap:
    """Map from the standard simplex onto the simplex with vertices s."""
    v0 = s[0]
    n = len(v0)
    cols = [tuple(x - y for x, y in zip(v, v0)) for v in s[1:]]
    rows = tuple(tuple(c[i] for c in cols) for i in range(n))
    return AffineMap(rows, tuple(v0), len(cols))


def simplex_volume(s: Sequence) -> mpq:
    n = len(s[0])
    if n == 0:
        return la.ONE
    return abs(la.det(simplex_affine(s).matrix)) / math.factorial(n)


def integrate_poly_simplex(p: Poly, s: Sequence) -> mpq:
    """∫_S p via barycentric substitution and the Dirichlet monomial formula."""
    n = len(s[0])
    if p.nvars != n:
        raise ValueError("polynomial and simplex dimensions differ")
    if len(s) != n + 1:
        raise ValueError("simplex must have dim+1 vertices")
    if n == 0:
        return p(())
    a = simplex_affine(s)
    jac = abs(la.det(a.matrix))
    if jac == 0:
        return la.ZERO
    q = p.compose_affine(a)
    total = la.ZERO
    for e, c in q.terms.items():
        num = 1
        for k in e:
            num *= math.factorial(k)
        total += c * mpq(num, math.factorial(sum(e) + n))
    return total * jac


def difference(e: Polytope, c: Polytope) -> list[Polytope]:
    """Full-dimensional pieces of closure(e minus c), with disjoint interiors."""
    inter = e.intersect(c)
    if not inter.is_full_dim():
        return [e]
    pieces = []
    acc = []
    for a, b in c.canonical().halfspaces:
        flipped = (tuple(-x for x in a), -b)
        piece = Polytope.make(e.ambient_dim, e.halfspaces + tuple(acc) + (flipped,))
        if piece.is_full_dim():
            pieces.append(piece.canonical())
        acc.append((a, b))
    return pieces
