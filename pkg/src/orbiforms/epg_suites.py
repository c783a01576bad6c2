"""Identity suites for J, K, partitions of unity and refinements on étale groupoids."""

from __future__ import annotations

from typing import Sequence

from gmpy2 import mpq

from . import epg
from . import forms as fm
from .checks import Check, compare, flag
from .epg import Functor, Groupoid
from .forms import PPForm
from .kernel import Poly, linalg as la


def chart_forms(cx, max_deg: int, degrees: Sequence[int] | None = None) -> list[PPForm]:
    """Chart-local monomial forms of every degree; not invariant in general."""
    out = []
    for k in degrees if degrees is not None else range(cx.dim + 1):
        out.extend(fm.monomial_forms(cx, k, max_deg))
    return out


def _push_s(G: Groupoid, b: PPForm) -> PPForm:
    return fm.pushforward(G.s, G.os_c, b)


def _push_t(G: Groupoid, b: PPForm) -> PPForm:
    return fm.pushforward(G.t, G.ot_c, b)


def check_J_lemma(G: Groupoid, max_deg: int = 2) -> list[Check]:
    """t_*s^* = s_*t^*; s_*t^* kills (s_* − t_*)-images; s_*t^* lands in invariant forms."""
    alphas = chart_forms(G.X0, max_deg)
    betas = chart_forms(G.X1, max_deg)
    checks = [compare("t_* s^* = s_* t^*", alphas, lambda a: epg.J(G, a), lambda a: epg.J_transposed(G, a))]
    checks.append(compare("s_* t^* vanishes on coboundaries", betas, lambda b: epg.J_transposed(G, epg.coboundary(G, b)), lambda b: PPForm.zero(G.X0, b.degree)))
    bad = [k for k, a in enumerate(alphas) if not epg.check_invariant(G, epg.J_transposed(G, a))]
    checks.append(Check("s_* t^* is invariant", not bad, f"{len(alphas)} forms" if not bad else f"fails on form {bad[0]}"))
    return checks


def kj_witness(G: Groupoid, alpha: PPForm, rho: PPForm) -> PPForm:
    """(t_* − s_*)(s^*ρ ∧ t^*β) for β = α − ρ J(α); equals β when ρ is a partition."""
    beta = alpha - epg.K(rho, epg.J(G, alpha))
    b = fm.wedge(fm.pullback(G.s, rho), fm.pullback(G.t, beta))
    return _push_t(G, b) - _push_s(G, b)


def check_JK_inverse(G: Groupoid, max_deg: int = 2, rho: PPForm | None = None) -> list[Check]:
    """J∘K = id on invariant forms, and K∘J = id on coinvariants with an explicit primitive."""
    if rho is None:
        rho = epg.find_partition_of_unity(G)
    checks = [flag("ρ is a partition of unity", epg.is_partition(G, rho))]
    inv = [a for k in range(G.dim + 1) for a in epg.invariant_family(G, k, max_deg)]
    checks.append(compare("J∘K = id", inv, lambda a: epg.J(G, epg.K(rho, a)), lambda a: a))
    alphas = chart_forms(G.X0, max_deg)
    checks.append(compare("K∘J = id modulo coboundaries", alphas, lambda a: a - epg.K(rho, epg.J(G, a)), lambda a: kj_witness(G, a, rho)))
    return checks


def _abs_bound(p: Poly, radius) -> mpq:
    return sum((abs(c) * radius ** sum(e) for e, c in p.terms.items()), la.ZERO)


def perturbed_partition(G: Groupoid, rho: PPForm | None = None, eps=None) -> PPForm:
    """ρ' = ρ(1 + ε(v − J(ρv))) with v = 1 + (c+1)·x_0 on chart c; still sums to one along arrows."""
    if rho is None:
        rho = epg.find_partition_of_unity(G)
    n = G.dim
    v = PPForm.function(G.X0, [Poly.linear([c + 1] + [0] * (n - 1), 1) if n else Poly.const(0, 1) for c in range(len(G.X0.charts))])
    w = v - epg.J(G, fm.wedge(rho, v))
    if eps is None:
        radius = max((abs(x) for ch in G.X0.charts for vert in ch.polytope.vertices for x in vert), default=la.ONE)
        bound = max((_abs_bound(p, max(radius, la.ONE)) for cells in w.normalized for _, coeffs in cells for p in coeffs.values()), default=la.ZERO)
        eps = mpq(1, 2) / bound if bound > 0 else la.ONE
    return fm.wedge(rho, PPForm.constant(G.X0, 1) + w.scale(eps))


def check_partition_independence(G: Groupoid, max_deg: int = 2) -> list[Check]:
    """Two partitions of unity give the same K up to coboundaries and the same averaged integrals."""
    rho1 = epg.find_partition_of_unity(G)
    rho2 = perturbed_partition(G, rho1)
    checks = [flag("second ρ is a partition of unity", epg.is_partition(G, rho2))]
    if rho1.equals(rho2):
        # t_*s^*ρ = ρ on a trivial groupoid, so ρ = 1 is the only choice
        checks.append(Check("partition of unity is unique", G.origin[:1] == ("trivial",), "only arrows are identities"))
    else:
        checks.append(Check("partitions differ", True))
    inv = [a for k in range(G.dim + 1) for a in epg.invariant_family(G, k, max_deg)]

    def primitive(a: PPForm) -> PPForm:
        diff = epg.K(rho1, a) - epg.K(rho2, a)
        b = fm.wedge(fm.pullback(G.s, rho1), fm.pullback(G.t, diff))
        return _push_t(G, b) - _push_s(G, b)

    checks.append(compare("K_ρ − K_ρ' is a coboundary", inv, lambda a: epg.K(rho1, a) - epg.K(rho2, a), primitive))
    if measure_preserving(G):
        vol = volume_form(G.X0)
        dens = [fm.wedge(f, vol) for f in epg.invariant_family(G, 0, max_deg)]
        checks.append(compare("averaged integral is independent of ρ", dens, lambda a: epg.integrate_average(G, a, rho1), lambda a: epg.integrate_average(G, a, rho2)))
    return checks


def volume_form(cx) -> PPForm:
    """dx_0 ∧ … ∧ dx_{n−1} on every chart."""
    top = tuple(range(cx.dim))
    return PPForm.from_polys(cx, cx.dim, [{top: Poly.const(cx.dim, 1)} for _ in cx.charts])


def measure_preserving(G: Groupoid) -> bool:
    """Every arrow acts with |det| = 1, so invariant functions times dx are invariant densities."""
    for f in (G.s, G.t):
        for _, a in f.assignment:
            if a.domain_dim and abs(a.det()) != 1:
                return False
    return True


def average_density(G: Groupoid, f: PPForm, rho: PPForm | None = None) -> mpq:
    """∫_{X0} ρ f dx, the orbifold integral of an invariant function against Lebesgue density."""
    return epg.integrate_average(G, fm.wedge(f, volume_form(G.X0)), rho)


def check_refinement(R: Functor, max_deg: int = 2) -> list[Check]:
    """For a refinement R: X' → X with its canonical orientation.

    F^*∘J∘F_* = J on chart forms; F_*ρ' is a partition of unity; F_*(ρ'F^*α) = (F_*ρ')α;
    R^* is invertible with inverse R_* = J∘(R0)_*∘K.
    """
    Rc = R.canonical()
    Xp, X = R.source, R.target
    R0, o0 = Rc.F0, Rc.o0
    checks = [flag("R is a refinement", epg.validate_refinement(R))]
    alphas = chart_forms(Xp.X0, max_deg)
    checks.append(compare("F^* J F_* = J", alphas, lambda a: fm.pullback(R0, epg.J(X, fm.pushforward(R0, o0, a))), lambda a: epg.J(Xp, a)))
    rho = epg.find_partition_of_unity(Xp)
    pushed = fm.pushforward(R0, o0, rho)
    checks.append(flag("F_*ρ is a partition of unity", epg.is_partition(X, pushed)))
    inv = [a for k in range(X.dim + 1) for a in epg.invariant_family(X, k, max_deg)]
    checks.append(compare("F_* K F^* = K", inv, lambda a: fm.pushforward(R0, o0, epg.K(rho, fm.pullback(R0, a))), lambda a: epg.K(pushed, a)))
    checks.append(compare("R_* R^* = id", inv, lambda a: epg.functor_pushforward(Rc, epg.functor_pullback(Rc, a)), lambda a: a))
    inv_p = [a for k in range(Xp.dim + 1) for a in epg.invariant_family(Xp, k, max_deg)]
    checks.append(compare("R^* R_* = id", inv_p, lambda a: epg.functor_pullback(Rc, epg.functor_pushforward(Rc, a)), lambda a: a))
    return checks


def check_J_module(G: Groupoid, max_deg: int = 1) -> list[Check]:
    """J(ζ∧η) = ζ∧J(η) for invariant ζ, and d commutes with J and with K up to coboundaries."""
    rho = epg.find_partition_of_unity(G)
    inv = [a for k in range(G.dim + 1) for a in epg.invariant_family(G, k, max_deg)]
    alphas = chart_forms(G.X0, max_deg)
    pairs = [(z, a) for z in inv for a in alphas if z.degree + a.degree <= G.dim]
    return [
        compare("J is a module map", pairs, lambda c: epg.J(G, fm.wedge(c[0], c[1])), lambda c: fm.wedge(c[0], epg.J(G, c[1]))),
        compare("d∘J = J∘d", alphas, lambda a: fm.d(epg.J(G, a)), lambda a: epg.J(G, fm.d(a))),
        compare("J∘d∘K = d", inv, lambda a: epg.J(G, fm.d(epg.K(rho, a))), lambda a: fm.d(a)),
    ]


def check_boundary_partition(G: Groupoid, F: Functor | None = None) -> list[Check]:
    """i^*ρ is a partition of unity on ∂X, and on ∂ᵛX for a strongly smooth F."""
    rho = epg.find_partition_of_unity(G)
    B, inc = epg.boundary_groupoid(G)
    checks = [flag("i^*ρ is a partition of unity on the boundary", epg.is_partition(B, fm.pullback(inc.F0, rho)))]
    if F is not None:
        V, vinc = epg.vertical_boundary(F)
        if V.X0.charts:
            checks.append(flag("(iᵛ)^*ρ is a partition of unity on the vertical boundary", epg.is_partition(V, fm.pullback(vinc.F0, rho))))
    return checks


def check_fiber_product(w: epg.WeakFiberProduct, max_deg: int = 1, flip: bool = False) -> list[Check]:
    """Structure of X ×_Z Y and the identities it satisfies.

    The groupoid, A1, A2 and α validate; A10^*ρ_X · A20^*ρ_Y is a partition of
    unity; A1 is a refinement when G is; and when G is an oriented submersion,
    (A1)_*(A2)^*ξ = F^*G_*ξ with A1 oriented by F^*o^G (``flip`` negates it).
    """
    checks = [
        flag("fiber product groupoid is valid", epg.validate_groupoid(w.P)),
        flag("A1 is a functor", epg.validate_functor(w.A1)),
        flag("A2 is a functor", epg.validate_functor(w.A2)),
        flag("α: G∘A2 ⇒ F∘A1 is natural", epg.validate_transformation(w.alpha)),
        flag("partition product is a partition of unity", epg.is_partition(w.P, w.partition())),
    ]
    if w.G.local_diffeo and not epg.validate_refinement(w.G):
        checks.append(flag("A1 inherits the refinement property", epg.validate_refinement(w.A1)))
    if w.G.oriented and w.G.submersion:
        A1 = w.oriented_A1()
        if flip:
            A1 = A1.with_orientation(tuple(-x for x in A1.o0), tuple(-x for x in A1.o1))
        fam = [a for k in range(w.G.source.dim + 1) for a in epg.invariant_family(w.G.source, k, max_deg)]
        checks.append(compare("groupoid base change", fam, lambda a: epg.functor_pushforward(A1, epg.functor_pullback(w.A2, a)), lambda a: epg.functor_pullback(w.F, epg.functor_pushforward(w.G, a))))
    return checks


__all__ = [
    "average_density",
    "chart_forms",
    "check_JK_inverse",
    "check_J_module",
    "check_boundary_partition",
    "check_fiber_product",
    "check_J_lemma",
    "check_partition_independence",
    "check_refinement",
    "kj_witness",
    "measure_preserving",
    "perturbed_partition",
    "volume_form",
]
