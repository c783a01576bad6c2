"""Catalogue of named suites a scenario can invoke.

Each suite resolves its arguments against the scenario namespace and returns
a list of checks. A suite's verdict is "holds" when every check holds and
"violated" otherwise; its status is pass when the verdict matches the
expectation written in the scenario.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

from . import chart_suites as cs
from . import currents as cu
from . import epg, orb
from . import epg_suites as es
from .checks import Check, flag
from .forms import PPForm
from .geometry import to_point
from .scenario import OrientedMap, Scenario, ScenarioError, orientation_list, rat

REF_KINDS = {"complex", "chartmap", "groupoid", "functor", "morphism", "twomorphism", "fiber_product", "form", "current"}


@dataclass(frozen=True)
class Param:
    name: str
    kind: str  # an object kind, or bool / int / rational / orientation / chartmaps / chartmap_pairs
    help: str
    required: bool = True
    default: Any = None


@dataclass
class Context:
    scenario: Scenario
    args: dict
    test_degree: int = 3

    def ref(self, name: str, kind: str):
        return self.scenario.get(self.args[name], kind)

    def opt(self, name: str, default=None):
        return self.args.get(name, default)


@dataclass(frozen=True)
class Suite:
    name: str
    description: str
    params: tuple
    run: Callable[[Context], list[Check]]

    def check_args(self, inv: dict, sc: Scenario) -> None:
        known = {p.name for p in self.params} | {"suite", "expect", "label"}
        extra = sorted(set(inv) - known)
        if extra:
            raise ScenarioError(f"suite {self.name} does not take {extra}")
        for p in self.params:
            if p.name not in inv:
                if p.required:
                    raise ScenarioError(f"suite {self.name} needs argument {p.name!r}")
                continue
            v = inv[p.name]
            if p.kind in REF_KINDS:
                sc.get(v, p.kind)
            elif p.kind == "chartmaps":
                for r in v:
                    sc.get(r, "chartmap")
            elif p.kind == "chartmap_pairs":
                for a, b in v:
                    sc.get(a, "chartmap")
                    sc.get(b, "chartmap")
            elif p.kind == "bool" and not isinstance(v, bool):
                raise ScenarioError(f"suite {self.name}: {p.name} must be true or false")
            elif p.kind == "int" and (isinstance(v, bool) or not isinstance(v, int)):
                raise ScenarioError(f"suite {self.name}: {p.name} must be an integer")
            elif p.kind == "rational":
                rat(v)
            elif p.kind == "orientation" and (not isinstance(v, list) or any(x not in (1, -1) for x in v)):
                raise ScenarioError(f"suite {self.name}: {p.name} must be a list of signs ±1")

    def catalogue(self) -> str:
        lines = [f"{self.name}: {self.description}"]
        for p in self.params:
            opt = "" if p.required else f" (optional, default {p.default!r})"
            lines.append(f"    {p.name} <{p.kind}>{opt}: {p.help}")
        return "\n".join(lines)


SUITES: dict[str, Suite] = {}


def suite(name: str, description: str, *params: Param):
    def deco(fn):
        SUITES[name] = Suite(name, description, params, fn)
        return fn

    return deco


def _orientation(ctx: Context, name: str, n: int, default_standard: bool = False):
    v = ctx.opt(name)
    if v is None:
        return (1,) * n if default_standard else None
    return orientation_list(v, n)


def _oriented(ctx: Context, name: str) -> OrientedMap:
    om = ctx.ref(name, "chartmap")
    if om.orientation is None:
        raise ScenarioError(f"chart map {ctx.args[name]!r} needs an orientation for this suite")
    return om


# chart complexes and chart maps -----------------------------------------------------


@suite(
    "calculus",
    "d∘d = 0, Leibniz rule and functorial pull-back on random polynomial forms",
    Param("complex", "complex", "chart complex"),
    Param("seed", "int", "random seed", False, 0),
    Param("count", "int", "number of random instances", False, 20),
)
def _calculus(ctx: Context) -> list[Check]:
    return cs.check_calculus(ctx.ref("complex", "complex"), seed=ctx.opt("seed", 0), count=ctx.opt("count", 20))


@suite(
    "integration_properties",
    "integration to a point, composition of push-forwards, projection formula and base change for a chart submersion",
    Param("map", "chartmap", "oriented submersion f: M → N"),
    Param("outer", "chartmap", "oriented submersion g: N → P composed after f (default: N → point, standard orientation)", False),
    Param("base", "chartmap", "map h: P' → N for base change (default: f itself)", False),
    Param("flip", "bool", "negate the base-change orientation (sensitivity fixture)", False, False),
)
def _integration_properties(ctx: Context) -> list[Check]:
    f = _oriented(ctx, "map")
    M, N = f.map.source, f.map.target
    if ctx.opt("outer") is not None:
        g = _oriented(ctx, "outer")
    else:
        g = OrientedMap(to_point(N), (1,) * len(N.charts))
    h = ctx.ref("base", "chartmap").map if ctx.opt("base") is not None else f.map
    return [
        cs.check_normalization(M, (1,) * len(M.charts)),
        cs.check_push_composition(g.map, g.orientation, f.map, f.orientation),
        cs.check_projection_formula(f.map, f.orientation),
        cs.check_base_change(h, f.map, f.orientation, flip=ctx.opt("flip", False)),
    ]


@suite(
    "chart_stokes",
    "Stokes formula with the vertical boundary term for a chart submersion",
    Param("map", "chartmap", "oriented submersion"),
    Param("flip", "bool", "negate the boundary sign (sensitivity fixture)", False, False),
    Param("require_nonzero", "bool", "also require an instance with both sides nonzero", False, False),
)
def _chart_stokes(ctx: Context) -> list[Check]:
    f = _oriented(ctx, "map")
    return cs.check_stokes(f.map, f.orientation, flip=ctx.opt("flip", False), require_nonzero=ctx.opt("require_nonzero", False))


@suite(
    "orientation",
    "canonical pull-back, composed canonical, swap and flip sign identities over all applicable pairs of the given maps",
    Param("maps", "chartmaps", "chart maps; oriented submersions enter the swap and flip identities"),
    Param("inverse_pairs", "chartmap_pairs", "pairs [f, f⁻¹] of mutually inverse diffeomorphisms", False, []),
    Param("perturb_sign", "bool", "use the opposite sign in the flip identity (sensitivity fixture)", False, False),
)
def _orientation_suite(ctx: Context) -> list[Check]:
    maps = [(r, ctx.scenario.get(r, "chartmap")) for r in ctx.args["maps"]]
    checks = []
    for rf, f in maps:
        checks.append(flag(f"{rf} is a valid chart map", f.map.validate()))
    for rf, f in maps:
        for rg, g in maps:
            fm_, gm = f.map, g.map
            if fm_.target == gm.target:
                if gm.flags.local_diffeo:
                    c = cs.check_canonical_pullback(fm_, gm)
                    checks.append(Check(f"{c.name} [{rf}, {rg}]", c.holds, c.detail))
                if f.orientation is not None and fm_.flags.submersion:
                    c = cs.check_swap_orientation(fm_, f.orientation, gm)
                    checks.append(Check(f"{c.name} [{rf}, {rg}]", c.holds, c.detail))
                    sign = -1 if (fm_.rdim * gm.rdim) % 2 else 1
                    override = -sign if ctx.opt("perturb_sign", False) else None
                    c = cs.check_flip(fm_, f.orientation, gm, sign_override=override)
                    checks.append(Check(f"{c.name} [{rf}, {rg}]", c.holds, c.detail, c.witness))
            if fm_.target == gm.source and fm_.flags.local_diffeo and gm.flags.local_diffeo:
                c = cs.check_composed_canonical(fm_, gm)
                checks.append(Check(f"{c.name} [{rg}∘{rf}]", c.holds, c.detail))
    for a, b in ctx.opt("inverse_pairs", []):
        c = cs.check_inverse_push(ctx.scenario.get(a, "chartmap").map, ctx.scenario.get(b, "chartmap").map)
        checks.append(Check(f"{c.name} [{a}, {b}]", c.holds, c.detail, c.witness))
    return checks


# groupoids ---------------------------------------------------------------------------


@suite(
    "jk",
    "J and K: the three J identities, J∘K = id, K∘J = id modulo coboundaries, module and d compatibility, independence of the partition of unity, boundary partitions",
    Param("groupoid", "groupoid", "étale groupoid"),
    Param("constant_partition", "bool", "use ρ = 1 instead of a partition of unity (sensitivity fixture)", False, False),
)
def _jk(ctx: Context) -> list[Check]:
    G = ctx.ref("groupoid", "groupoid")
    if ctx.opt("constant_partition", False):
        return es.check_JK_inverse(G, rho=PPForm.constant(G.X0, 1))
    return (
        es.check_J_lemma(G)
        + es.check_JK_inverse(G)
        + es.check_J_module(G)
        + es.check_partition_independence(G)
        + es.check_boundary_partition(G)
    )


@suite(
    "refinement",
    "a refinement functor: equivalence and local diffeomorphism, J and K transported, R^* and R_* mutually inverse",
    Param("functor", "functor", "candidate refinement X' → X"),
)
def _refinement(ctx: Context) -> list[Check]:
    R = ctx.ref("functor", "functor")
    issues = epg.validate_refinement(R)
    if issues:
        return [flag("R is a refinement", issues)]
    return es.check_refinement(R)


@suite(
    "integral",
    "exact orbifold integral against an expected value, optionally recomputed through a refinement",
    Param("groupoid", "groupoid", "groupoid presenting the orbifold"),
    Param("form", "form", "integrand: a function (density mode) or a top-degree form"),
    Param("expected", "rational", "expected exact value"),
    Param("mode", "str", "density: ∫ρ f dx; average: ∫ρ ξ; oriented: integral with an orientation", False, "density"),
    Param("orientation", "orientation", "object-chart orientation for oriented mode", False),
    Param("refinement", "functor", "refinement X' → X to recompute the value on X'", False),
)
def _integral(ctx: Context) -> list[Check]:
    G = ctx.ref("groupoid", "groupoid")
    xi = ctx.ref("form", "form")
    expected = rat(ctx.args["expected"])
    mode = ctx.opt("mode", "density")
    o = _orientation(ctx, "orientation", len(G.X0.charts))

    def value(H, form, orient):
        if mode == "density":
            return es.average_density(H, form)
        if mode == "average":
            return epg.integrate_average(H, form)
        if mode == "oriented":
            return epg.integrate(H, form, orient)
        raise ScenarioError(f"unknown integral mode {mode!r}")

    v = value(G, xi, o)
    checks = [Check(f"{mode} integral equals {expected}", v == expected, f"got {v}")]
    if mode == "density":
        checks.append(Check("arrows preserve Lebesgue measure", es.measure_preserving(G)))
    if ctx.opt("refinement") is not None:
        R = ctx.ref("refinement", "functor")
        checks.append(flag("R is a refinement", epg.validate_refinement(R)))
        o2 = cu.pulled_orientation(R, o) if o is not None else None
        w = value(R.source, epg.functor_pullback(R, xi), o2)
        checks.append(Check(f"{mode} integral through the refinement equals {expected}", w == expected, f"got {w}"))
    return checks


@suite(
    "presentation",
    "averaged and oriented integrals agree on a groupoid and on a refinement of it",
    Param("refinement", "functor", "refinement X' → X"),
    Param("form", "form", "form on X"),
    Param("orientation", "orientation", "object-chart orientation of X", False),
)
def _presentation(ctx: Context) -> list[Check]:
    R = ctx.ref("refinement", "functor")
    return orb.check_presentation_independence(R, ctx.ref("form", "form"), _orientation(ctx, "orientation", len(R.target.X0.charts)))


@suite(
    "fiber_product",
    "weak fiber product: groupoid axioms, projections, the natural transformation, partition product, refinement inheritance, groupoid base change",
    Param("fiber_product", "fiber_product", "weak fiber product of two functors"),
    Param("flip", "bool", "negate the orientation of the first projection (sensitivity fixture)", False, False),
)
def _fiber_product(ctx: Context) -> list[Check]:
    return es.check_fiber_product(ctx.ref("fiber_product", "fiber_product"), flip=ctx.opt("flip", False))


# orbifold morphisms -------------------------------------------------------------------


@suite(
    "twomorphism",
    "a 2-morphism f ⇒ g gives f^* = g^*, and f_* = g_* when oriented",
    Param("twomorphism", "twomorphism", "2-morphism between two morphisms"),
)
def _twomorphism(ctx: Context) -> list[Check]:
    return orb.check_2morphism(ctx.ref("twomorphism", "twomorphism"))


@suite(
    "composition",
    "(f∘g)^* = g^*f^* and (f∘g)_* = f_*g_*",
    Param("f", "morphism", "outer morphism"),
    Param("g", "morphism", "inner morphism"),
    Param("flip", "bool", "use the opposite orientation of g on the right side (sensitivity fixture)", False, False),
)
def _composition(ctx: Context) -> list[Check]:
    return orb.check_composition(ctx.ref("f", "morphism"), ctx.ref("g", "morphism"), flip=ctx.opt("flip", False))


@suite(
    "projection_formula",
    "f_*(f^*α ∧ β) = α ∧ f_*β for an oriented submersion",
    Param("f", "morphism", "oriented submersion"),
    Param("swap", "bool", "wedge in the opposite order on the left (sensitivity fixture)", False, False),
)
def _projection_formula(ctx: Context) -> list[Check]:
    return orb.check_projection(ctx.ref("f", "morphism"), swap=ctx.opt("swap", False))


@suite(
    "base_change",
    "q_*p^*α = f^*g_*α over the fiber product, q carrying the pull-back orientation",
    Param("f", "morphism", "morphism into the common target"),
    Param("g", "morphism", "oriented submersion into the common target"),
    Param("flip", "bool", "negate the orientation of q (sensitivity fixture)", False, False),
)
def _base_change(ctx: Context) -> list[Check]:
    return orb.check_base_change(ctx.ref("f", "morphism"), ctx.ref("g", "morphism"), flip=ctx.opt("flip", False))


@suite(
    "stokes",
    "d(f_*ξ) = f_*(dξ) + (−1)^{s+t}(f|∂ᵛX)_*ξ for an oriented submersion of orbifolds",
    Param("f", "morphism", "oriented submersion"),
    Param("flip", "bool", "negate the boundary sign (sensitivity fixture)", False, False),
    Param("require_boundary", "bool", "also require a nonzero boundary term", False, False),
)
def _stokes(ctx: Context) -> list[Check]:
    return orb.check_stokes(ctx.ref("f", "morphism"), flip=ctx.opt("flip", False), require_boundary=ctx.opt("require_boundary", False))


@suite(
    "refinement_inverse",
    "Id|R is inverse to R on forms: R_*R^* = id and R^*R_* = id",
    Param("refinement", "functor", "refinement functor"),
)
def _refinement_inverse(ctx: Context) -> list[Check]:
    return orb.check_refinement_inverse(ctx.ref("refinement", "functor"))


# currents -----------------------------------------------------------------------------


def _family(ctx: Context, G, name: str) -> list[cu.Current]:
    return cu.current_family(G, _orientation(ctx, name, len(G.X0.charts)))


@suite(
    "current_value",
    "a declared current evaluated on a declared form equals an expected value",
    Param("current", "current", "current"),
    Param("form", "form", "test form"),
    Param("expected", "rational", "expected exact value"),
)
def _current_value(ctx: Context) -> list[Check]:
    v = cu.evaluate(ctx.ref("current", "current"), ctx.ref("form", "form"))
    expected = rat(ctx.args["expected"])
    return [Check(f"current value equals {expected}", v == expected, f"got {v}")]


@suite(
    "bimodule",
    "φ(η∧γ) = η∧φ(γ) and φ(γ∧η) = φ(γ)∧η on the test family",
    Param("groupoid", "groupoid", "oriented groupoid"),
    Param("orientation", "orientation", "object-chart orientation"),
    Param("swap", "bool", "compare against the wrong side (sensitivity fixture)", False, False),
)
def _bimodule(ctx: Context) -> list[Check]:
    G = ctx.ref("groupoid", "groupoid")
    return cu.check_bimodule(G, _orientation(ctx, "orientation", len(G.X0.charts)), ctx.test_degree, swap=ctx.opt("swap", False))


@suite(
    "chain_lemma",
    "d∘(ψ∘φ) = (ψ∘φ)∘d on forms vanishing on the boundary",
    Param("groupoid", "groupoid", "oriented groupoid"),
    Param("orientation", "orientation", "object-chart orientation"),
    Param("relative", "bool", "restrict to relative tests; false tests all forms (sensitivity fixture)", False, True),
)
def _chain_lemma(ctx: Context) -> list[Check]:
    G = ctx.ref("groupoid", "groupoid")
    return cu.check_chain_lemma(G, _orientation(ctx, "orientation", len(G.X0.charts)), ctx.test_degree, relative=ctx.opt("relative", True))


@suite(
    "current_d_squared",
    "d∘d = 0 on the current family",
    Param("groupoid", "groupoid", "groupoid"),
    Param("orientation", "orientation", "object-chart orientation for form-induced currents", False),
)
def _current_d_squared(ctx: Context) -> list[Check]:
    G = ctx.ref("groupoid", "groupoid")
    return cu.check_d_squared(_family(ctx, G, "orientation"), ctx.test_degree)


@suite(
    "current_twomorphism",
    "a 2-morphism f ⇒ g gives f_* = g_* on currents, and f^* = g^* when oriented",
    Param("twomorphism", "twomorphism", "2-morphism"),
    Param("source_orientation", "orientation", "orientation of the source for form currents", False),
    Param("target_orientation", "orientation", "orientation of the target for form currents", False),
)
def _current_twomorphism(ctx: Context) -> list[Check]:
    a = ctx.ref("twomorphism", "twomorphism")
    return cu.check_2morphism(a, _family(ctx, a.f.source, "source_orientation"), _family(ctx, a.f.target, "target_orientation"), ctx.test_degree)


@suite(
    "current_composition",
    "(f∘g)_* = f_*g_* on currents, and (f∘g)^* = g^*f^* for oriented submersions",
    Param("f", "morphism", "outer morphism"),
    Param("g", "morphism", "inner morphism"),
    Param("source_orientation", "orientation", "orientation of the source of g", False),
    Param("target_orientation", "orientation", "orientation of the target of f", False),
)
def _current_composition(ctx: Context) -> list[Check]:
    f, g = ctx.ref("f", "morphism"), ctx.ref("g", "morphism")
    return cu.check_composition(f, g, _family(ctx, g.source, "source_orientation"), _family(ctx, f.target, "target_orientation"), ctx.test_degree)


@suite(
    "current_projection",
    "f_*(f^*η∧ζ) = η∧f_*ζ on currents, and f_*(f^*ζ∧η) = ζ∧f_*η for oriented submersions",
    Param("f", "morphism", "morphism"),
    Param("source_orientation", "orientation", "orientation of the source", False),
    Param("target_orientation", "orientation", "orientation of the target", False),
)
def _current_projection(ctx: Context) -> list[Check]:
    f = ctx.ref("f", "morphism")
    return cu.check_projection(f, _family(ctx, f.source, "source_orientation"), _family(ctx, f.target, "target_orientation"), ctx.test_degree)


@suite(
    "current_base_change",
    "q_*p^*ζ = f^*g_*ζ on currents over the fiber product",
    Param("f", "morphism", "oriented submersion into the common target"),
    Param("g", "morphism", "morphism into the common target"),
    Param("source_orientation", "orientation", "orientation of the source of g", False),
    Param("flip", "bool", "negate the orientation of p (sensitivity fixture)", False, False),
)
def _current_base_change(ctx: Context) -> list[Check]:
    f, g = ctx.ref("f", "morphism"), ctx.ref("g", "morphism")
    return cu.check_base_change(f, g, _family(ctx, g.source, "source_orientation"), ctx.test_degree, flip=ctx.opt("flip", False))


@suite(
    "relative_stokes",
    "ψf_*φ(dη) = dψf_*φ(η) − (−1)^{s+t}ψ(f∘iᵛ)_*φ((iᵛ)^*η), with the chain lemma and horizontal vanishing",
    Param("f", "morphism", "oriented submersion"),
    Param("orientation", "orientation", "orientation of the source"),
    Param("boundary_sign", "int", "coefficient of the boundary term; +1 is a sensitivity fixture", False, -1),
    Param("require_nonzero", "bool", "also require the boundary term and the left side to be nonzero together", False, False),
)
def _relative_stokes(ctx: Context) -> list[Check]:
    f = ctx.ref("f", "morphism")
    return cu.check_relative_stokes(
        f,
        _orientation(ctx, "orientation", len(f.source.X0.charts)),
        ctx.test_degree,
        boundary_sign=ctx.opt("boundary_sign", -1),
        require_nonzero=ctx.opt("require_nonzero", False),
    )


def catalogue() -> str:
    return "\n".join(SUITES[name].catalogue() for name in sorted(SUITES))


__all__ = ["Context", "Param", "SUITES", "Suite", "catalogue"]
