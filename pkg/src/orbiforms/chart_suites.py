"""Identity suites for forms on chart complexes and maps between them."""

from __future__ import annotations

import random
from typing import Sequence

from gmpy2 import mpq

from . import forms as fm
from .checks import Check, compare, flag
from .forms import PPForm
from .geometry import (
    ChartComplex,
    ChartMap,
    RelativeOrientation,
    boundary_relative_orientation,
    build_boundary,
    canonical_orientation,
    compose_maps,
    compose_orientation,
    decompose_boundary,
    fiber_product,
    pullback_orientation,
    restrict_boundary,
    swap_map,
    to_point,
    transpose_pullback_orientation,
)
from .kernel import AffineMap, Poly, linalg as la


# random instances -------------------------------------------------------------


def random_poly(rng: random.Random, n: int, max_deg: int, terms: int = 3) -> Poly:
    out = {}
    for _ in range(terms):
        e = [0] * n
        for _ in range(rng.randint(0, max_deg)):
            if n:
                e[rng.randrange(n)] += 1
        out[tuple(e)] = out.get(tuple(e), 0) + mpq(rng.randint(-5, 5), rng.randint(1, 4))
    return Poly(n, out)


def random_form(rng: random.Random, cx: ChartComplex, degree: int, max_deg: int = 3) -> PPForm:
    per = []
    for _ in cx.charts:
        per.append({idx: random_poly(rng, cx.dim, max_deg) for idx in fm.multi_indices(cx.dim, degree)})
    return PPForm.from_polys(cx, degree, per)


def random_self_map(rng: random.Random, cx: ChartComplex) -> ChartMap:
    """A chart-preserving affine map into the complex, shrunk until it fits."""
    n = cx.dim
    assignment = []
    for c in range(len(cx.charts)):
        P = cx.polytope(c)
        centre = P.centroid()
        while True:
            m = tuple(tuple(mpq(rng.randint(-3, 3), rng.randint(1, 3)) for _ in range(n)) for _ in range(n))
            if n == 0 or la.det(m) != 0:
                break
        scale = la.ONE
        while True:
            lin = tuple(tuple(x * scale for x in row) for row in m)
            off = tuple(centre[i] - sum((lin[i][j] * centre[j] for j in range(n)), la.ZERO) for i in range(n))
            a = AffineMap(lin, off, n)
            if all(P.contains_point(a(v)) for v in P.vertices):
                break
            scale /= 2
        assignment.append((c, a))
    return ChartMap.build(cx, cx, assignment)


def check_calculus(cx: ChartComplex, seed: int = 0, count: int = 20, max_deg: int = 3) -> list[Check]:
    """d∘d = 0, Leibniz, graded commutativity and pull-back functoriality on random forms."""
    rng = random.Random(seed)
    n = cx.dim
    cases = []
    for _ in range(count):
        k = rng.randint(0, n)
        l = rng.randint(0, n - k)
        cases.append((random_form(rng, cx, k, max_deg), random_form(rng, cx, l, max_deg), random_self_map(rng, cx), random_self_map(rng, cx)))

    def leibniz_rhs(c):
        a, b = c[0], c[1]
        sign = -1 if a.degree % 2 else 1
        return fm.wedge(fm.d(a), b) + fm.wedge(a, fm.d(b)).scale(sign)

    def commuted(c):
        a, b = c[0], c[1]
        sign = -1 if (a.degree * b.degree) % 2 else 1
        return fm.wedge(b, a).scale(sign)

    return [
        compare("d∘d = 0", cases, lambda c: fm.d(fm.d(c[0])), lambda c: PPForm.zero(cx, c[0].degree + 2)),
        compare("Leibniz rule", cases, lambda c: fm.d(fm.wedge(c[0], c[1])), leibniz_rhs),
        compare("graded commutativity", cases, lambda c: fm.wedge(c[0], c[1]), commuted),
        compare("(g∘f)^* = f^* g^*", cases, lambda c: fm.pullback(compose_maps(c[3], c[2]), c[0]), lambda c: fm.pullback(c[2], fm.pullback(c[3], c[0]))),
        compare("pull-back commutes with d", cases, lambda c: fm.pullback(c[2], fm.d(c[0])), lambda c: fm.d(fm.pullback(c[2], c[0]))),
        compare("pull-back respects wedge", cases, lambda c: fm.pullback(c[2], fm.wedge(c[0], c[1])), lambda c: fm.wedge(fm.pullback(c[2], c[0]), fm.pullback(c[2], c[1]))),
    ]


# integration properties ---------------------------------------------------------


def all_forms(cx: ChartComplex, max_deg: int, degrees: Sequence[int] | None = None) -> list[PPForm]:
    out = []
    for k in degrees if degrees is not None else range(cx.dim + 1):
        out.extend(fm.monomial_forms(cx, k, max_deg))
    return out


def check_normalization(cx: ChartComplex, o: Sequence[int], max_deg: int = 2) -> Check:
    """Push-forward to a point is the integral in top degree and zero otherwise."""
    pt = to_point(cx)

    def pushed(a):
        out = fm.pushforward(pt, tuple(o), a)
        return out.evaluate(0, ()).get((), la.ZERO) if out.degree == 0 else la.ZERO

    def expected(a):
        return fm.integrate(a, tuple(o)) if a.degree == cx.dim else la.ZERO

    return compare("push-forward to a point integrates", all_forms(cx, max_deg), pushed, expected)


def check_push_composition(f: ChartMap, o_f: RelativeOrientation, g: ChartMap, o_g: RelativeOrientation, max_deg: int = 2) -> Check:
    """f_* ∘ g_* = (f∘g)_* with o^f ∘ o^g."""
    fg = compose_maps(f, g)
    o_fg = compose_orientation(o_f, o_g, g)
    return compare(
        "push-forward composes",
        all_forms(g.source, max_deg),
        lambda a: fm.pushforward(f, o_f, fm.pushforward(g, o_g, a)),
        lambda a: fm.pushforward(fg, o_fg, a),
    )


def check_projection_formula(f: ChartMap, o_f: RelativeOrientation, max_deg: int = 1) -> Check:
    """f_*(f^*α ∧ β) = α ∧ f_*β."""
    M, N = f.source, f.target
    pairs = [(a, b) for a in all_forms(N, max_deg) for b in all_forms(M, max_deg) if a.degree + b.degree <= M.dim]
    return compare(
        "projection formula",
        pairs,
        lambda c: fm.pushforward(f, o_f, fm.wedge(fm.pullback(f, c[0]), c[1])),
        lambda c: fm.wedge(c[0], fm.pushforward(f, o_f, c[1])),
    )


def check_base_change(h: ChartMap, g: ChartMap, o_g: RelativeOrientation, max_deg: int = 2, flip: bool = False) -> Check:
    """q_* p^* α = h^* g_* α on M ×_N P with q carrying h^* o^g."""
    fp = fiber_product(h, g)
    o_q = pullback_orientation(fp, o_g)
    if flip:
        o_q = tuple(-x for x in o_q)
    return compare(
        "base change",
        all_forms(g.source, max_deg),
        lambda a: fm.pushforward(fp.q, o_q, fm.pullback(fp.p, a)),
        lambda a: fm.pullback(h, fm.pushforward(g, o_g, a)),
    )


def check_flip(f: ChartMap, o_f: RelativeOrientation, g: ChartMap, max_deg: int = 2, sign_override: int | None = None) -> Check:
    """p_* q^* α = (−1)^{rdim f·rdim g} g^* f_* α with p transpose-oriented."""
    fp = fiber_product(f, g)
    o_p = transpose_pullback_orientation(fp, o_f)
    sign = -1 if (f.rdim * g.rdim) % 2 else 1
    if sign_override is not None:
        sign = sign_override
    return compare(
        f"flip formula (sign {sign:+d})",
        all_forms(f.source, max_deg),
        lambda a: fm.pushforward(fp.p, o_p, fm.pullback(fp.q, a)),
        lambda a: fm.pullback(g, fm.pushforward(f, o_f, a)).scale(sign),
    )


def check_inverse_push(f: ChartMap, f_inv: ChartMap, max_deg: int = 2) -> Check:
    """f^* α = (f⁻¹)_* α for a diffeomorphism, canonically oriented."""
    o = canonical_orientation(f_inv)
    return compare("pull-back is push-forward along the inverse", all_forms(f.target, max_deg), lambda a: fm.pullback(f, a), lambda a: fm.pushforward(f_inv, o, a))


def vertical_boundary_term(f: ChartMap, o_f: RelativeOrientation, xi: PPForm) -> PPForm:
    """(f ∘ iᵛ)_* ξ with the induced relative orientation o^f ∘ o^{i}."""
    b = build_boundary(f.source)
    split = decompose_boundary(f, b)
    vb = restrict_boundary(b, split.vertical)
    if not vb.complex.charts:
        return PPForm.zero(f.target, xi.degree - f.rdim)
    o = compose_orientation(o_f, boundary_relative_orientation(vb), vb.inclusion)
    return fm.pushforward(compose_maps(f, vb.inclusion), o, fm.pullback(vb.inclusion, xi))


def with_degree_sums(members: list[PPForm], degrees: Sequence[int]) -> list[PPForm]:
    """Append the sum of the members of each degree."""
    out = list(members)
    for k in degrees:
        same = [xi for xi in members if xi.degree == k]
        if len(same) > 1:
            total = same[0]
            for xi in same[1:]:
                total = total + xi
            out.append(total)
    return out


def check_stokes(f: ChartMap, o_f: RelativeOrientation, max_deg: int = 2, flip: bool = False, require_nonzero: bool = False) -> list[Check]:
    """d(f_*ξ) = f_*(dξ) + (−1)^{s+t} (f∘iᵛ)_* ξ with s = dim M, t = deg ξ."""
    s = f.source.dim
    # per-degree sums mix coefficient directions, so both sides can be nonzero at once
    members = with_degree_sums([xi for xi in all_forms(f.source, max_deg) if xi.degree >= f.rdim - 1], range(max(f.rdim - 1, 0), s + 1))
    nonzero = 0
    for k, xi in enumerate(members):
        sign = -1 if (s + xi.degree) % 2 else 1
        if flip:
            sign = -sign
        bd = vertical_boundary_term(f, o_f, xi)
        lhs = fm.d(fm.pushforward(f, o_f, xi))
        rhs = fm.pushforward(f, o_f, fm.d(xi)) + bd.scale(sign)
        if not lhs.equals(rhs):
            return [Check("Stokes formula", False, f"differs on form {k}", {"xi": xi.to_json(), "lhs": lhs.to_json(), "rhs": rhs.to_json()})]
        if not bd.is_zero() and not lhs.is_zero():
            nonzero += 1
    checks = [Check("Stokes formula", True, f"{len(members)} forms, {nonzero} with both sides nonzero")]
    if require_nonzero:
        checks.append(Check("both sides nonzero somewhere", nonzero > 0, f"{nonzero} forms"))
    return checks


# orientation lemmas ---------------------------------------------------------------


def check_canonical_pullback(f: ChartMap, g: ChartMap) -> Check:
    """With g a local diffeomorphism, f^* o^g_c equals the canonical orientation of q."""
    fp = fiber_product(f, g)
    lhs = pullback_orientation(fp, canonical_orientation(g))
    rhs = canonical_orientation(fp.q)
    return Check("pull-back of canonical is canonical", tuple(lhs) == tuple(rhs), f"{lhs} vs {rhs}")


def check_swap_orientation(f: ChartMap, o_f: RelativeOrientation, g: ChartMap) -> Check:
    """g^* o^f ∘ o^θ_c = (−1)^{rdim f·rdim g} · ᵗg^* o^f."""
    fp = fiber_product(f, g)
    flipped = fiber_product(g, f)
    theta = swap_map(fp, flipped)
    lhs = compose_orientation(pullback_orientation(flipped, o_f), canonical_orientation(theta), theta)
    sign = -1 if (f.rdim * g.rdim) % 2 else 1
    rhs = tuple(sign * x for x in transpose_pullback_orientation(fp, o_f))
    return Check(f"swap orientation (sign {sign:+d})", tuple(lhs) == rhs, f"{lhs} vs {rhs}")


def check_composed_canonical(f: ChartMap, g: ChartMap) -> Check:
    """o^g_c ∘ o^f_c = o^{g∘f}_c for local diffeomorphisms."""
    lhs = compose_orientation(canonical_orientation(g), canonical_orientation(f), f)
    rhs = canonical_orientation(compose_maps(g, f))
    return Check("canonical orientations compose", tuple(lhs) == tuple(rhs))


def check_boundary_partition(f: ChartMap) -> Check:
    b = build_boundary(f.source)
    split = decompose_boundary(f, b)
    both = sorted(split.vertical + split.horizontal)
    ok = both == list(range(len(b.complex.charts))) and not set(split.vertical) & set(split.horizontal)
    return Check("vertical and horizontal boundary partition the boundary", ok, f"vertical {list(split.vertical)}, horizontal {list(split.horizontal)}")


def check_map(f: ChartMap) -> Check:
    return flag("chart map is valid", f.validate())
