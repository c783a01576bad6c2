"""Orbifold morphisms as fractions F|R and the identities they satisfy on forms.

A morphism X → Y is a refinement R: X' → X together with a functor F: X' → Y.
Pull-back is R_* ∘ F^* and push-forward is F_* ∘ R^*, with R canonically
oriented. Composition goes through the weak fiber product of the inner
functor with the outer refinement.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from . import epg
from . import forms as fm
from .chart_suites import with_degree_sums
from .checks import Check, compare, flag
from .epg import EPGError, Functor, Groupoid, NaturalTransformation, WeakFiberProduct
from .forms import PPForm
from .geometry import canonical_orientation


@dataclass(frozen=True, eq=False)
class OrbMorphism:
    R: Functor  # refinement X' -> X
    F: Functor  # X' -> Y
    name: str = ""

    def __post_init__(self):
        if self.R.source is not self.F.source:
            raise EPGError("refinement and functor must share their source")

    @property
    def source(self) -> Groupoid:
        return self.R.target

    @property
    def target(self) -> Groupoid:
        return self.F.target

    @property
    def apex(self) -> Groupoid:
        return self.R.source

    @property
    def rdim(self) -> int:
        return self.F.rdim

    @property
    def oriented(self) -> bool:
        return self.F.oriented

    @property
    def submersion(self) -> bool:
        return self.F.submersion

    def with_orientation(self, o0, o1) -> "OrbMorphism":
        return OrbMorphism(self.R, self.F.with_orientation(o0, o1), self.name)

    def negated(self) -> "OrbMorphism":
        """Same morphism with the opposite relative orientation."""
        return self.with_orientation(tuple(-x for x in self.F.o0), tuple(-x for x in self.F.o1))


def from_functor(F: Functor, name: str = "") -> OrbMorphism:
    return OrbMorphism(epg.identity_functor(F.source), F, name)


def identity(G: Groupoid) -> OrbMorphism:
    idf = epg.identity_functor(G)
    return OrbMorphism(idf, idf, f"id({G.name})")


def inverse_of_refinement(R: Functor) -> OrbMorphism:
    """Id|R, the inverse in Orb of the refinement R."""
    return OrbMorphism(R.canonical(), epg.identity_functor(R.source), "inverse")


def validate_morphism(f: OrbMorphism) -> list[str]:
    issues = [f"R: {m}" for m in epg.validate_refinement(f.R)]
    issues += [f"F: {m}" for m in epg.validate_functor(f.F)]
    return issues


# operations on forms ----------------------------------------------------------


def pullback(f: OrbMorphism, a: PPForm) -> PPForm:
    """f^* = R_* ∘ F^*."""
    return epg.functor_pushforward(f.R.canonical(), epg.functor_pullback(f.F, a))


def pushforward(f: OrbMorphism, a: PPForm) -> PPForm:
    """f_* = F_* ∘ R^*."""
    if not f.oriented:
        raise EPGError("push-forward needs a relatively oriented morphism")
    return epg.functor_pushforward(f.F, epg.functor_pullback(f.R, a))


def integrate(G: Groupoid, xi: PPForm, o0) -> object:
    return epg.integrate(G, xi, o0)


# composition and fiber products -----------------------------------------------


def compose(f: OrbMorphism, g: OrbMorphism) -> OrbMorphism:
    """f ∘ g for g: X → Y and f: Y → Z, as (F∘A2)|(Q∘A1) over G ×_Y R."""
    if g.target is not f.source:
        raise EPGError("morphisms are not composable")
    w = epg.weak_fiber_product(g.F, f.R.canonical())
    refinement = epg.compose_functors(g.R.canonical(), w.A1.canonical())
    if f.oriented and g.oriented:
        functor = epg.compose_functors(f.F, w.oriented_A2())
    else:
        functor = epg.compose_functors(f.F, w.A2)
    return OrbMorphism(refinement, functor, f"{f.name}∘{g.name}")


@dataclass(frozen=True, eq=False)
class OrbFiberProduct:
    f: OrbMorphism
    g: OrbMorphism
    hat: WeakFiberProduct
    a1: OrbMorphism  # to the source of f
    a2: OrbMorphism  # to the source of g

    @property
    def P(self) -> Groupoid:
        return self.hat.P


def fiber_product(f: OrbMorphism, g: OrbMorphism) -> OrbFiberProduct:
    """X ×_Z Y with a1 = (R∘Â1)|Id and a2 = (Q∘Â2)|Id.

    When g is oriented, a1 carries f^*o^g = o^R_c ∘ F^*o^G; when f is
    oriented, a2 carries the transpose pull-back of o^f.
    """
    hat = epg.weak_fiber_product(f.F, g.F)
    P = hat.P
    idP = epg.identity_functor(P)
    a1 = epg.compose_functors(f.R.canonical(), hat.oriented_A1() if g.oriented else hat.A1)
    a2 = epg.compose_functors(g.R.canonical(), hat.oriented_A2() if f.oriented else hat.A2)
    return OrbFiberProduct(f, g, hat, OrbMorphism(idP, a1, "a1"), OrbMorphism(idP, a2, "a2"))


@dataclass(frozen=True, eq=False)
class Orb2Morphism:
    """α: f ⇒ g presented by refinements T1, T2 from a common apex and two transformations."""

    f: OrbMorphism
    g: OrbMorphism
    T1: Functor  # apex -> f.apex
    T2: Functor  # apex -> g.apex
    alpha1: NaturalTransformation  # R∘T1 ⇒ Q∘T2
    alpha2: NaturalTransformation  # F∘T1 ⇒ G∘T2


def simple_2morphism(f: OrbMorphism, g: OrbMorphism, alpha: epg.ChartMap, orientation=None) -> Orb2Morphism:
    """A 2-morphism between fractions sharing R, with T1 = T2 = Id and α2 = α."""
    if f.R is not g.R and not epg.same_map(f.R.F0, g.R.F0):
        raise EPGError("simple 2-morphisms need a shared refinement")
    idA = epg.identity_functor(f.apex)
    unit = epg.compose_maps(f.source.e, f.R.F0)
    a1 = NaturalTransformation(f.R, g.R, unit, canonical_orientation(unit) if orientation is not None else None)
    a2 = NaturalTransformation(f.F, g.F, alpha, orientation)
    return Orb2Morphism(f, g, idA, idA, a1, a2)


def validate_2morphism(a: Orb2Morphism) -> list[str]:
    issues = []
    f, g = a.f, a.g
    RT1 = epg.compose_functors(f.R, a.T1)
    QT2 = epg.compose_functors(g.R, a.T2)
    FT1 = epg.compose_functors(f.F, a.T1)
    GT2 = epg.compose_functors(g.F, a.T2)
    for label, nt, lhs, rhs in (("α1", a.alpha1, RT1, QT2), ("α2", a.alpha2, FT1, GT2)):
        if not (epg.same_map(nt.F.F0, lhs.F0) and epg.same_map(nt.G.F0, rhs.F0)):
            issues.append(f"{label} does not connect the expected functors")
            continue
        oriented = NaturalTransformation(lhs, rhs, nt.alpha, nt.orientation)
        issues += [f"{label}: {m}" for m in epg.validate_transformation(oriented)]
    for label, T in (("T1", a.T1), ("T2", a.T2)):
        issues += [f"{label}: {m}" for m in epg.validate_refinement(T)]
    return issues


# identity suites ----------------------------------------------------------------


def _degrees(G: Groupoid) -> range:
    return range(G.dim + 1)


def family(G: Groupoid, max_deg: int, degrees: Sequence[int] | None = None) -> list[PPForm]:
    out = []
    for k in degrees if degrees is not None else _degrees(G):
        out.extend(epg.invariant_family(G, k, max_deg))
    return out


def check_2morphism(a: Orb2Morphism, max_deg: int = 2) -> list[Check]:
    """f^* = g^*, and f_* = g_* when both are oriented and α is oriented."""
    issues = validate_2morphism(a)
    checks = [flag("2-morphism is valid", issues)]
    f, g = a.f, a.g
    checks.append(compare("pull-backs agree", family(f.target, max_deg), lambda x: pullback(f, x), lambda x: pullback(g, x)))
    if f.oriented and g.oriented and a.alpha2.orientation is not None and f.submersion:
        checks.append(compare("push-forwards agree", family(f.source, max_deg), lambda x: pushforward(f, x), lambda x: pushforward(g, x)))
    return checks


def check_composition(f: OrbMorphism, g: OrbMorphism, max_deg: int = 2, flip: bool = False) -> list[Check]:
    """(f∘g)^* = g^* f^*, and (f∘g)_* = f_* g_* for oriented submersions.

    ``flip`` composes with g carrying the opposite orientation on the right side.
    """
    fg = compose(f, g)
    if flip:
        g = g.negated()
    issues = epg.validate_refinement(fg.R)
    checks = [flag("composite refinement is a refinement", issues)]
    checks.append(compare("pull-back of composite", family(f.target, max_deg), lambda x: pullback(fg, x), lambda x: pullback(g, pullback(f, x))))
    if f.oriented and g.oriented and f.submersion and g.submersion:
        checks.append(compare("push-forward of composite", family(g.source, max_deg), lambda x: pushforward(fg, x), lambda x: pushforward(f, pushforward(g, x))))
    return checks


def check_projection(f: OrbMorphism, max_deg: int = 1, swap: bool = False) -> list[Check]:
    """f_*(f^*α ∧ β) = α ∧ f_*β over pairs from the two families.

    ``swap`` wedges in the wrong order on the left, a sensitivity fixture.
    """
    X, Y = f.source, f.target
    alphas = family(Y, max_deg)
    betas = family(X, max_deg)
    pairs = [(a, b) for a in alphas for b in betas if a.degree + b.degree <= X.dim]
    if not pairs:
        return [Check("projection formula", False, "no test pairs")]

    def lhs(k):
        a, b = pairs[k]
        pa = pullback(f, a)
        return pushforward(f, fm.wedge(b, pa) if swap else fm.wedge(pa, b))

    def rhs(k):
        a, b = pairs[k]
        return fm.wedge(a, pushforward(f, b))

    return [compare("projection formula", range(len(pairs)), lhs, rhs)]


def check_base_change(f: OrbMorphism, g: OrbMorphism, max_deg: int = 1, flip: bool = False) -> list[Check]:
    """q_* p^* α = f^* g_* α with q = a1 carrying the pull-back orientation of o^g."""
    fp = fiber_product(f, g)
    issues = epg.validate_groupoid(fp.P)
    checks = [flag("fiber product groupoid is valid", issues)]
    q, p = fp.a1, fp.a2
    if flip:
        q = q.negated()
    checks.append(compare("base change", family(g.source, max_deg), lambda x: pushforward(q, pullback(p, x)), lambda x: pullback(f, pushforward(g, x))))
    return checks


def stokes_sign(s: int, t: int) -> int:
    return -1 if (s + t) % 2 else 1


def boundary_term(f: OrbMorphism, xi: PPForm) -> PPForm:
    """(f|∂ᵛX)_* ξ presented on the apex as (F∘iᵛ)_* (iᵛ)^* R^* ξ."""
    V, inc = epg.vertical_boundary(f.F)
    restricted = epg.compose_functors(f.F, inc)
    if not V.X0.charts:
        return PPForm.zero(f.target.X0, xi.degree - f.rdim, xi.smoothness)
    pulled = fm.pullback(inc.F0, epg.functor_pullback(f.R, xi))
    return epg.functor_pushforward(restricted, pulled)


def check_stokes(f: OrbMorphism, max_deg: int = 2, flip: bool = False, require_boundary: bool = False) -> list[Check]:
    """d(f_*ξ) = f_*(dξ) + (−1)^{s+t} (f|∂ᵛX)_* ξ with s = dim X, t = deg ξ."""
    X = f.source
    s = X.dim
    members = with_degree_sums([a for a in family(X, max_deg) if a.degree >= f.rdim - 1], range(max(f.rdim - 1, 0), s + 1))
    nonzero_bd = 0
    checks = []
    for k, xi in enumerate(members):
        sign = stokes_sign(s, xi.degree) * (-1 if flip else 1)
        bd = boundary_term(f, xi)
        if not bd.is_zero():
            nonzero_bd += 1
        pf = pushforward(f, xi)
        lhs = fm.d(pf)
        rhs = pushforward(f, fm.d(xi)) + bd.scale(sign)
        if not lhs.equals(rhs):
            return [Check("Stokes formula", False, f"differs on family member {k}", {"xi": xi.to_json(), "lhs": lhs.to_json(), "rhs": rhs.to_json()})]
    checks.append(Check("Stokes formula", True, f"{len(members)} forms, {nonzero_bd} with nonzero boundary term"))
    if require_boundary:
        checks.append(Check("boundary term is exercised", nonzero_bd > 0, f"{nonzero_bd} nonzero boundary terms"))
    return checks


def check_presentation_independence(R: Functor, xi: PPForm, o0) -> list[Check]:
    """∫_X ξ = ∫_{X'} R^*ξ for a refinement R: X' → X."""
    a = epg.integrate_average(R.target, xi)
    b = epg.integrate_average(R.source, epg.functor_pullback(R, xi))
    checks = [Check("averaged integrals agree", a == b, f"{a} vs {b}")]
    if o0 is not None:
        o_src = tuple(o0[R.F0.target_index(c)] * canonical_orientation(R.F0)[c] for c in range(len(R.source.X0.charts)))
        x = epg.integrate(R.target, xi, o0)
        y = epg.integrate(R.source, epg.functor_pullback(R, xi), o_src)
        checks.append(Check("oriented integrals agree", x == y, f"{x} vs {y}"))
    return checks


def check_refinement_inverse(R: Functor, max_deg: int = 2) -> list[Check]:
    """R_* R^* = id on X and R^* R_* = id on X'."""
    Rc = R.canonical()
    X, Xp = R.target, R.source
    return [
        compare("R_* R^* = id", family(X, max_deg), lambda a: epg.functor_pushforward(Rc, epg.functor_pullback(Rc, a)), lambda a: a),
        compare("R^* R_* = id", family(Xp, max_deg), lambda a: epg.functor_pullback(Rc, epg.functor_pushforward(Rc, a)), lambda a: a),
    ]


__all__ = [
    "Check",
    "OrbFiberProduct",
    "Orb2Morphism",
    "OrbMorphism",
    "check_2morphism",
    "check_base_change",
    "check_composition",
    "check_presentation_independence",
    "check_projection",
    "check_refinement_inverse",
    "check_stokes",
    "compose",
    "fiber_product",
    "from_functor",
    "identity",
    "integrate",
    "inverse_of_refinement",
    "pullback",
    "pushforward",
    "simple_2morphism",
    "validate_2morphism",
    "validate_morphism",
]
