"""Lie 2-algebras of Hamiltonian 1-forms on a 2-plectic chart.

The underlying 2-term complex is ``Ham <-d- C^inf``: 0-chains are
:class:`~twoplectic.plectic.HamiltonianForm` instances, 1-chains are
0-forms.  A morphism ``T: x -> y`` is a 1-chain with ``y = x + dT``, so every
coherence diagram becomes an identity between sums of functions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .expr import NonzeroWitness, ProvedZero, SampleConfig, SampledZero, Verdict, worst
from .forms import (
    DifferentialForm,
    exterior_derivative,
    interior_product,
    is_zero_field,
    is_zero_form,
    lie_bracket,
    lie_derivative,
    parse_form,
)
from .plectic import (
    CertificationError,
    HamiltonianForm,
    NotHamiltonianError,
    PlecticStructure,
    alternator,
    exact,
    hamiltonian_field_residual,
    hamiltonian_vector_field,
    bracket_relation_residual,
    hemi_antisymmetry_defect,
    hemi_bracket,
    jacobi_hemi_residual,
    jacobi_semi_defect,
    jacobiator,
    liouville_residual,
    semi_antisymmetry_defect,
    semi_bracket,
)

__all__ = [
    "TwoTermComplex",
    "Lie2Algebra",
    "Morphism1Chain",
    "Lie2Homomorphism",
    "Battery",
    "CheckResult",
    "Report",
    "build_hemistrict",
    "build_semistrict",
    "build_isomorphism",
    "compose_homomorphisms",
    "verify_coherence",
    "verify_homomorphism",
    "volume_battery",
    "string_battery",
    "format_point",
    "composite_homotopy_check",
    "default_battery",
    "verify_bracket_laws",
]

HEMISTRICT = "hemistrict"
SEMISTRICT = "semistrict"


@dataclass(frozen=True)
class TwoTermComplex:
    plectic: PlecticStructure

    def d(self, f: DifferentialForm) -> HamiltonianForm:
        return exact(self.plectic, f)

    def function(self, value) -> DifferentialForm:
        return DifferentialForm.function(self.plectic.chart, value)

    def zero_chain(self) -> DifferentialForm:
        return DifferentialForm.zero(self.plectic.chart, 0)


@dataclass(frozen=True)
class Lie2Algebra:
    """Graded bracket as four maps plus alternator and Jacobiator.

    ``bracket`` acts on two 0-chains; ``bracket_01(F, f)`` and
    ``bracket_10(f, F)`` pair a 0-chain with a 1-chain; the bracket of two
    1-chains lands in degree 2 and is identically zero here.
    """

    complex: TwoTermComplex
    flavor: str
    bracket: Callable[[HamiltonianForm, HamiltonianForm], HamiltonianForm]
    bracket_01: Callable[[HamiltonianForm, DifferentialForm], DifferentialForm]
    bracket_10: Callable[[DifferentialForm, HamiltonianForm], DifferentialForm]
    alternator: Callable[[HamiltonianForm, HamiltonianForm], DifferentialForm]
    jacobiator: Callable[[HamiltonianForm, HamiltonianForm, HamiltonianForm], DifferentialForm]

    @property
    def plectic(self) -> PlecticStructure:
        return self.complex.plectic

    def d(self, f: DifferentialForm) -> HamiltonianForm:
        return self.complex.d(f)


def _memo2(fn):
    cache: dict = {}

    def wrapped(a, b):
        key = (a.form, a.v, b.form, b.v)
        if key not in cache:
            cache[key] = fn(a, b)
        return cache[key]

    return wrapped


def _require_2plectic(P: PlecticStructure) -> None:
    if P.n != 2:
        raise ValueError(f"Lie 2-algebras of observables need a 2-plectic structure, got n = {P.n}")


def build_hemistrict(P: PlecticStructure, sampler: SampleConfig | None = None) -> Lie2Algebra:
    """Bracket ``L_{v_F} G``; ``[F, f] = L_{v_F} f``, ``[f, F] = 0``;
    alternator ``-(i_{v_F} G + i_{v_G} F)``; Jacobiator zero."""
    _require_2plectic(P)
    complex_ = TwoTermComplex(P)
    zero = complex_.zero_chain()
    return Lie2Algebra(
        complex_,
        HEMISTRICT,
        _memo2(lambda F, G: hemi_bracket(P, F, G, sampler)),
        lambda F, f: lie_derivative(F.v, f),
        lambda f, F: zero,
        alternator,
        lambda F, G, H: zero,
    )


def build_semistrict(P: PlecticStructure, sampler: SampleConfig | None = None) -> Lie2Algebra:
    """Bracket ``i_{v_G} i_{v_F} omega``; degree-1 brackets and alternator
    zero; Jacobiator ``-i_{v_F} i_{v_G} i_{v_H} omega``."""
    _require_2plectic(P)
    complex_ = TwoTermComplex(P)
    zero = complex_.zero_chain()
    return Lie2Algebra(
        complex_,
        SEMISTRICT,
        _memo2(lambda F, G: semi_bracket(P, F, G, sampler)),
        lambda F, f: zero,
        lambda f, F: zero,
        lambda F, G: zero,
        lambda F, G, H: jacobiator(P, F, G, H),
    )


@dataclass(frozen=True)
class Morphism1Chain:
    """``witness: source -> target`` with ``target = source + d(witness)``."""

    source: DifferentialForm
    target: DifferentialForm
    witness: DifferentialForm

    def defect(self) -> DifferentialForm:
        return self.target - self.source - exterior_derivative(self.witness)

    def verify(self, sampler: SampleConfig | None = None) -> Verdict:
        return is_zero_form(self.defect(), sampler)

    def then(self, other: "Morphism1Chain") -> "Morphism1Chain":
        """Composite ``self`` followed by ``other``; witnesses add."""
        return Morphism1Chain(self.source, other.target, self.witness + other.witness)

    def __add__(self, other: "Morphism1Chain") -> "Morphism1Chain":
        return Morphism1Chain(self.source + other.source, self.target + other.target, self.witness + other.witness)

    def __neg__(self) -> "Morphism1Chain":
        return Morphism1Chain(-self.source, -self.target, -self.witness)


@dataclass(frozen=True)
class Lie2Homomorphism:
    """Identity chain map with chain homotopy ``Phi: [x,y]' -> [x,y]``."""

    source: Lie2Algebra
    target: Lie2Algebra
    homotopy: Callable[[HamiltonianForm, HamiltonianForm], DifferentialForm]


def build_isomorphism(P: PlecticStructure, sampler: SampleConfig | None = None):
    """Forward ``hemistrict -> semistrict`` with ``Phi_{F,G} = i_{v_F} G``
    and backward with ``-Phi``."""
    h = build_hemistrict(P, sampler)
    s = build_semistrict(P, sampler)
    forward = Lie2Homomorphism(h, s, lambda F, G: interior_product(F.v, G.form))
    backward = Lie2Homomorphism(s, h, lambda F, G: -interior_product(F.v, G.form))
    return forward, backward


def compose_homomorphisms(first: Lie2Homomorphism, second: Lie2Homomorphism) -> Lie2Homomorphism:
    """``second`` after ``first``; with identity chain maps the homotopies add."""
    return Lie2Homomorphism(first.source, second.target, lambda F, G: first.homotopy(F, G) + second.homotopy(F, G))


# ---------------------------------------------------------------------------
# Batteries


@dataclass(frozen=True)
class Battery:
    """Test elements: Hamiltonian 0-chains and 1-chains (functions)."""

    chains: tuple[HamiltonianForm, ...]
    functions: tuple[DifferentialForm, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.chains) < 4 or len(self.functions) < 2:
            raise ValueError("a battery needs at least four 0-chains and two 1-chains")

    def zero_chains(self, include_exact: bool = True) -> list[HamiltonianForm]:
        """The 0-chains plus ``df`` for every 1-chain ``f``."""
        out = list(self.chains)
        if include_exact:
            P_chart = self.chains[0].form.chart
            out += [
                HamiltonianForm(exterior_derivative(f), self.chains[0].v * 0, ProvedZero(), True)
                for f in self.functions
                if f.chart == P_chart
            ]
        return out


def volume_battery(P: PlecticStructure) -> Battery:
    """``x dy, y dz, z dx, (x^2+y) dz`` with functions ``x, xy`` on the
    3-dimensional volume form."""
    chart = P.chart
    texts = ["x * dy", "y * dz", "z * dx", "(x^2 + y) * dz"]
    chains = tuple(hamiltonian_vector_field(P, parse_form(t, chart)) for t in texts)
    functions = tuple(DifferentialForm.function(chart, t) for t in ["x", "x*y"])
    return Battery(chains, functions, tuple(texts))


def default_battery(P: PlecticStructure, sampler: SampleConfig | None = None, size: int = 4) -> Battery:
    """First ``size`` Hamiltonian forms with nonzero vector field among
    ``c_i c_j dc_k`` then ``c_i dc_k`` (coordinates in chart order);
    functions ``c_1`` and ``c_1 c_2``.  Needs constant ``omega``."""
    chart = P.chart
    names = list(chart.coords)
    quadratic = [f"{a}*{b} * d{c}" for a, b in itertools.combinations_with_replacement(names, 2) for c in names]
    linear = [f"{a} * d{c}" for a in names for c in names if a != c]
    chains, labels = [], []
    for text in quadratic + linear:
        F = parse_form(text, chart)
        if exterior_derivative(F).is_zero():
            continue
        try:
            H = hamiltonian_vector_field(P, F, sampler=sampler)
        except (NotHamiltonianError, CertificationError):
            continue
        chains.append(H)
        labels.append(text)
        if len(chains) == size:
            break
    if len(chains) < size:
        raise ValueError(f"found only {len(chains)} Hamiltonian forms for a default battery")
    functions = (DifferentialForm.function(chart, names[0]), DifferentialForm.function(chart, f"{names[0]}*{names[1]}"))
    return Battery(tuple(chains), functions, tuple(labels))


def verify_bracket_laws(P: PlecticStructure, battery: Battery, sampler: SampleConfig | None = None, limit: int | None = 24) -> Report:
    """Liouville, closure of both brackets, the hemi/semi relation, and the
    antisymmetry and Jacobi laws of each bracket on ``battery``."""
    sampler = sampler or SampleConfig()
    elements = battery.zero_chains()
    report = Report("bracket laws")
    liouville = report.check("liouville")
    hamiltonian = report.check("hamiltonian")
    closure = report.check("bracket-closure")
    relation = report.check("hemi-semi-relation")
    hemi_anti = report.check("hemi-antisymmetry")
    hemi_jacobi = report.check("hemi-jacobi")
    semi_anti = report.check("semi-antisymmetry")
    semi_jacobi = report.check("semi-jacobi")
    for F in elements:
        hamiltonian.add(hamiltonian_field_residual(P, F, sampler))
        liouville.add(liouville_residual(P, F, sampler))

    def pair(F, G):
        for H in (hemi_bracket(P, F, G, sampler), semi_bracket(P, F, G, sampler)):
            closure.add(is_zero_field(H.v - lie_bracket(F.v, G.v), sampler))
        relation.add(bracket_relation_residual(P, F, G, sampler))
        hemi_anti.add(hemi_antisymmetry_defect(P, F, G, sampler))
        semi_anti.add(semi_antisymmetry_defect(P, F, G, sampler))

    for F, G in _tuples(elements, 2, None, sampler.seed):
        _guarded(closure, "", pair, F, G)
    for F, G, H in _tuples(elements, 3, limit, sampler.seed):
        _guarded(hemi_jacobi, "", lambda *a: hemi_jacobi.add(jacobi_hemi_residual(P, *a, sampler)), F, G, H)
        _guarded(semi_jacobi, "", lambda *a: semi_jacobi.add(jacobi_semi_defect(P, *a, sampler)), F, G, H)
    return report


def string_battery(S, sampler: SampleConfig | None = None) -> Battery:
    """Hamiltonian 1-forms on the string phase space from symmetries of
    ``theta``: ``H`` (time translation), translations in ``u0`` and ``q1``,
    and linear maps of the target lifted to the phase space; functions
    ``u0*u1`` and ``p0_0 + u<d-1>``."""
    from .strings import linear_symmetry_form, translation_form

    d = S.d
    P = S.plectic
    chains = [
        S.hamiltonian,
        hamiltonian_vector_field(P, translation_form(S, 0), sampler=sampler),
        hamiltonian_vector_field(P, translation_form(S, "q1"), sampler=sampler),
    ]
    labels = ["H", "T_u0", "T_q1"]
    generators = [("dilation", np.eye(d, dtype=int))]
    if d >= 2:
        boost = np.zeros((d, d), dtype=int)
        boost[0, 1] = boost[1, 0] = 1
        generators.append(("boost01", boost))
    if d >= 3:
        rot = np.zeros((d, d), dtype=int)
        rot[1, 2], rot[2, 1] = 1, -1
        generators.append(("rot12", rot))
    for name, A in generators:
        F, v = linear_symmetry_form(S, A)
        candidate = None if P.is_constant else v
        chains.append(hamiltonian_vector_field(P, F, candidate=candidate, sampler=sampler))
        labels.append(name)
    u = S.u
    functions = (
        DifferentialForm.function(P.chart, f"{u[0]}*{u[min(1, d - 1)]}"),
        DifferentialForm.function(P.chart, f"{S.p0[0]} + {u[-1]}"),
    )
    return Battery(tuple(chains), functions, tuple(labels))


# ---------------------------------------------------------------------------
# Reports


def format_point(point: Mapping[str, float] | None) -> str:
    if not point:
        return "-"
    return "(" + ",".join(f"{k}={v:.6g}" for k, v in sorted(point.items())) + ")"


@dataclass
class CheckResult:
    """Worst verdict over every instance of one named check."""

    name: str
    verdict: Verdict = field(default_factory=ProvedZero)
    instances: int = 0
    detail: str = ""

    def add(self, verdict: Verdict, detail: str = "") -> None:
        self.instances += 1
        combined = worst([self.verdict, verdict])
        if combined is verdict and isinstance(verdict, NonzeroWitness) and detail:
            self.detail = detail
        self.verdict = combined

    @property
    def ok(self) -> bool:
        return self.verdict.ok

    @property
    def status(self) -> str:
        return self.verdict.status

    def line(self, key: str = "diagram") -> str:
        witness = self.verdict.point if isinstance(self.verdict, NonzeroWitness) else None
        text = (
            f"{key}={self.name} status={self.status} "
            f"max_residual={self.verdict.max_residual:.3e} witness={format_point(witness)}"
        )
        return text


@dataclass
class Report:
    suite: str
    checks: list[CheckResult] = field(default_factory=list)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        c = CheckResult(name)
        self.checks.append(c)
        return c

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def lines(self, key: str = "diagram") -> list[str]:
        return [c.line(key) for c in self.checks]

    def format(self, key: str = "diagram") -> str:
        return "\n".join([f"# {self.suite}", *self.lines(key)])


def _tuples(items: Sequence, k: int, limit: int | None, seed: int) -> list[tuple]:
    """All ordered ``k``-tuples of distinct items, or a seeded subset."""
    every = list(itertools.permutations(range(len(items)), k))
    if limit is not None and len(every) > limit:
        rng = np.random.default_rng(seed)
        chosen = sorted(rng.choice(len(every), size=limit, replace=False))
        every = [every[i] for i in chosen]
    return [tuple(items[i] for i in t) for t in every]


class _View:
    """Bracket operations of a Lie 2-algebra, optionally mirrored.

    The five-Jacobiator diagram is stated for a bracket acting from the
    right, with ``J_{x,y,z}: [[x,y],z] -> [[x,z],y] + [x,[y,z]]``.  Reading
    it through ``B(a,b) = [b,a]`` and ``J^B_{x,y,z} = J_{z,y,x}`` turns it
    into an identity about ``L``.
    """

    def __init__(self, L: Lie2Algebra, mirror: bool):
        self.L = L
        self.mirror = mirror

    def br(self, a: HamiltonianForm, b: HamiltonianForm) -> HamiltonianForm:
        return self.L.bracket(b, a) if self.mirror else self.L.bracket(a, b)

    def br_chain_left(self, T: DifferentialForm, c: HamiltonianForm) -> DifferentialForm:
        """``[T, c]`` for a 1-chain ``T`` and a 0-chain ``c``."""
        return self.L.bracket_01(c, T) if self.mirror else self.L.bracket_10(T, c)

    def br_chain_right(self, c: HamiltonianForm, T: DifferentialForm) -> DifferentialForm:
        """``[c, T]`` for a 0-chain ``c`` and a 1-chain ``T``."""
        return self.L.bracket_10(T, c) if self.mirror else self.L.bracket_01(c, T)

    def J(self, x, y, z) -> DifferentialForm:
        return self.L.jacobiator(z, y, x) if self.mirror else self.L.jacobiator(x, y, z)


def _sum(forms: Iterable[HamiltonianForm]) -> DifferentialForm:
    forms = list(forms)
    out = forms[0].form
    for f in forms[1:]:
        out = out + f.form
    return out


def _edge(result: CheckResult, source, target, witness, sampler, detail) -> None:
    result.add(Morphism1Chain(source, target, witness).verify(sampler), detail)


def _guarded(result: CheckResult, detail: str, fn, *args) -> None:
    """Run one diagram instance; a bracket that fails its Hamiltonian
    certificate is recorded as a failure of the diagram."""
    try:
        fn(*args)
    except CertificationError as exc:
        verdict = exc.verdict if isinstance(exc.verdict, NonzeroWitness) else NonzeroWitness({}, float("nan"), str(exc))
        result.add(verdict, detail)
    except NotHamiltonianError as exc:
        result.add(NonzeroWitness(dict(exc.point), exc.residual, exc.where), detail)


def _diagram_pentagon(view: _View, w, x, y, z, result: CheckResult, sampler, detail: str) -> None:
    b, J = view.br, view.J
    bl, br_ = view.br_chain_left, view.br_chain_right
    wx, wy, wz, xy, xz, yz = b(w, x), b(w, y), b(w, z), b(x, y), b(x, z), b(y, z)
    n1 = b(b(wx, y), z).form
    n2 = _sum([b(b(wy, x), z), b(b(w, xy), z)])
    n4 = _sum([b(b(wy, z), x), b(wy, xz), b(w, b(xy, z)), b(wz, xy)])
    n5 = _sum([b(b(wx, z), y), b(wx, yz)])
    n6 = _sum([b(b(wz, y), x), b(b(w, yz), x), b(wy, xz), b(w, b(xy, z)), b(wz, xy)])
    n7 = _sum([b(b(w, xz), y), b(wx, yz), b(b(wz, x), y)])
    n8 = _sum([b(b(wz, y), x), b(wz, xy), b(wy, xz), b(w, b(xz, y)), b(b(w, yz), x), b(w, b(x, yz))])
    e12 = bl(J(w, x, y), z)
    e24 = J(wy, x, z) + J(w, xy, z)
    e46 = bl(J(w, y, z), x)
    e68 = br_(w, J(x, y, z))
    e35 = J(wx, y, z)
    e57 = bl(J(w, x, z), y)
    e78 = J(w, xz, y) + J(wz, x, y) + J(w, x, yz)
    for s, t, T in [(n1, n2, e12), (n2, n4, e24), (n4, n6, e46), (n6, n8, e68), (n1, n5, e35), (n5, n7, e57), (n7, n8, e78)]:
        _edge(result, s, t, T, sampler, detail)
    left = e12 + e24 + e46 + e68
    right = e35 + e57 + e78
    result.add(is_zero_form(left - right, sampler), detail)


def _diagram_alternator_jacobiator(L: Lie2Algebra, x, y, z, result, sampler, detail) -> None:
    b = L.bracket
    n1 = b(b(x, y), z).form
    n2 = -b(b(y, x), z).form
    n3 = b(x, b(y, z)).form - b(y, b(x, z)).form
    e12 = L.bracket_10(L.alternator(x, y), z)
    e13 = -L.jacobiator(x, y, z)
    # the sign that makes this edge a morphism n2 -> n3
    e23 = L.jacobiator(y, x, z)
    _edge(result, n1, n2, e12, sampler, detail)
    _edge(result, n1, n3, e13, sampler, detail)
    _edge(result, n2, n3, e23, sampler, detail)
    result.add(is_zero_form(e12 + e23 - e13, sampler), detail)


def _diagram_square(L: Lie2Algebra, x, y, z, result, sampler, detail) -> None:
    b, S, J = L.bracket, L.alternator, L.jacobiator
    xy, xz, yz, zy = b(x, y), b(x, z), b(y, z), b(z, y)
    n1 = b(x, yz).form
    n2 = -b(x, zy).form
    n3 = b(xy, z).form + b(y, xz).form
    n4 = -b(xz, y).form - b(z, xy).form
    e12 = L.bracket_01(x, S(y, z))
    e34 = S(xy, z) + S(y, xz)
    e13 = J(x, y, z)
    e24 = -J(x, z, y)
    for s, t, T in [(n1, n2, e12), (n3, n4, e34), (n1, n3, e13), (n2, n4, e24)]:
        _edge(result, s, t, T, sampler, detail)
    result.add(is_zero_form(e12 + e24 - e13 - e34, sampler), detail)


def _diagram_triangle(L: Lie2Algebra, x, y, z, result, sampler, detail) -> None:
    b, S = L.bracket, L.alternator
    yz = b(y, z)
    n1 = b(x, yz).form
    n3 = -b(yz, x).form
    e13 = S(x, yz)
    e32 = -S(yz, x)
    _edge(result, n1, n3, e13, sampler, detail)
    _edge(result, n3, n1, e32, sampler, detail)
    result.add(is_zero_form(e13 + e32, sampler), detail)


def verify_coherence(
    L: Lie2Algebra,
    battery: Battery,
    sampler: SampleConfig | None = None,
    limit: int | None = 24,
) -> Report:
    """Certify the four coherence diagrams on ``battery``.

    Each diagram line covers every edge (source and target agree up to the
    edge's witness) and the equality of the two path witnesses.  Extra lines
    cover the chain-map law, bracket closure and, for the semistrict
    algebra, the two Jacobiator identities used in its construction.
    """
    sampler = sampler or SampleConfig()
    P = L.plectic
    elements = battery.zero_chains()
    names = list(battery.labels) + [f"d({f})" for f in battery.functions]
    named = dict(zip(map(id, elements), names))
    report = Report(f"coherence {L.flavor}")
    d1, d2, d3, d4 = (report.check(str(i)) for i in range(1, 5))
    mirror = _View(L, mirror=True)

    def label(*items):
        return ",".join(named.get(id(i), "?") for i in items)

    for w, x, y, z in _tuples(elements, 4, limit, sampler.seed):
        _guarded(d1, label(w, x, y, z), _diagram_pentagon, mirror, w, x, y, z, d1, sampler, label(w, x, y, z))
    for x, y, z in _tuples(elements, 3, limit, sampler.seed):
        tag = label(x, y, z)
        _guarded(d2, tag, _diagram_alternator_jacobiator, L, x, y, z, d2, sampler, tag)
        _guarded(d3, tag, _diagram_square, L, x, y, z, d3, sampler, tag)
        _guarded(d4, tag, _diagram_triangle, L, x, y, z, d4, sampler, tag)

    chain_map = report.check("chain-map")
    closure = report.check("closure")

    def chain_map_law(F, f):
        df = L.d(f)
        chain_map.add(is_zero_form(exterior_derivative(L.bracket_01(F, f)) - L.bracket(F, df).form, sampler))
        chain_map.add(is_zero_form(exterior_derivative(L.bracket_10(f, F)) - L.bracket(df, F).form, sampler))

    for F in elements:
        closure.add(hamiltonian_field_residual(P, F, sampler))
        for f in battery.functions:
            _guarded(chain_map, label(F), chain_map_law, F, f)
    for F, G in _tuples(elements, 2, None, sampler.seed):
        _guarded(closure, label(F, G), lambda F, G: closure.add(hamiltonian_field_residual(P, L.bracket(F, G), sampler)), F, G)

    if L.flavor == SEMISTRICT:
        first = report.check("jacobiator-shift")
        second = report.check("jacobiator-derivation")
        J, b = L.jacobiator, L.bracket

        def shift(K, F, G, H):
            lhs = J(b(K, F), G, H)
            rhs = J(b(H, K), F, G) - J(b(F, H), G, K) - lie_derivative(G.v, J(K, F, H))
            first.add(is_zero_form(lhs - rhs, sampler), label(K, F, G, H))

        def derivation(K, F, G, H):
            rhs = J(b(G, K), F, H) + J(K, b(G, F), H) + J(K, F, b(G, H))
            second.add(is_zero_form(lie_derivative(G.v, J(K, F, H)) - rhs, sampler), label(K, F, G, H))

        for K, F, G, H in _tuples(elements, 4, limit, sampler.seed):
            _guarded(first, label(K, F, G, H), shift, K, F, G, H)
            _guarded(second, label(K, F, G, H), derivation, K, F, G, H)
    return report


def verify_homomorphism(
    h: Lie2Homomorphism,
    battery: Battery,
    sampler: SampleConfig | None = None,
    limit: int | None = 24,
) -> Report:
    """Certify a homomorphism with identity chain map.

    ``homotopy``: ``Phi_{x,y}: [x,y]' -> [x,y]`` in degree 0 plus the
    degree-1 homotopy equations; ``alternator-square`` and ``hexagon``: the
    two diagrams of the definition.
    """
    sampler = sampler or SampleConfig()
    src, tgt, Phi = h.source, h.target, h.homotopy
    elements = battery.zero_chains()
    report = Report("homomorphism")
    law = report.check("homotopy")
    square = report.check("alternator-square")
    hexagon = report.check("hexagon")

    def homotopy_edge(x, y):
        _edge(law, tgt.bracket(x, y).form, src.bracket(x, y).form, Phi(x, y), sampler, "")

    def homotopy_degree1(x, f):
        df = src.d(f)
        # [x,f]' + Phi_{x,df} = [x,f] and [f,x]' + Phi_{df,x} = [f,x]
        law.add(is_zero_form(tgt.bracket_01(x, f) + Phi(x, df) - src.bracket_01(x, f), sampler))
        law.add(is_zero_form(tgt.bracket_10(f, x) + Phi(df, x) - src.bracket_10(f, x), sampler))

    def alternator_square(x, y):
        n1 = tgt.bracket(x, y).form
        n2 = src.bracket(x, y).form
        n3 = -tgt.bracket(y, x).form
        n4 = -src.bracket(y, x).form
        e12, e13, e24, e34 = Phi(x, y), tgt.alternator(x, y), src.alternator(x, y), -Phi(y, x)
        for s, t, T in [(n1, n2, e12), (n1, n3, e13), (n2, n4, e24), (n3, n4, e34)]:
            _edge(square, s, t, T, sampler, "")
        square.add(is_zero_form(e12 + e24 - e13 - e34, sampler))

    b, bp = src.bracket, tgt.bracket

    def hexagon_instance(x, y, z):
        yz, xy, xz = b(y, z), b(x, y), b(x, z)
        n1 = bp(x, bp(y, z)).form
        n2 = bp(bp(x, y), z).form + bp(y, bp(x, z)).form
        n3 = bp(x, yz).form
        n4 = bp(xy, z).form + bp(y, xz).form
        n5 = b(x, yz).form
        n6 = b(xy, z).form + b(y, xz).form
        e12 = tgt.jacobiator(x, y, z)
        e13 = tgt.bracket_01(x, Phi(y, z))
        e24 = tgt.bracket_10(Phi(x, y), z) + tgt.bracket_01(y, Phi(x, z))
        e35 = Phi(x, yz)
        e46 = Phi(xy, z) + Phi(y, xz)
        e56 = src.jacobiator(x, y, z)
        for s, t, T in [(n1, n2, e12), (n1, n3, e13), (n2, n4, e24), (n3, n5, e35), (n4, n6, e46), (n5, n6, e56)]:
            _edge(hexagon, s, t, T, sampler, "")
        hexagon.add(is_zero_form(e13 + e35 + e56 - e12 - e24 - e46, sampler))

    for x, y in _tuples(elements, 2, None, sampler.seed):
        _guarded(law, "", homotopy_edge, x, y)
        _guarded(square, "", alternator_square, x, y)
    for x in elements:
        for f in battery.functions:
            _guarded(law, "", homotopy_degree1, x, f)
    for x, y, z in _tuples(elements, 3, limit, sampler.seed):
        _guarded(hexagon, "", hexagon_instance, x, y, z)
    return report


def composite_homotopy_check(first: Lie2Homomorphism, second: Lie2Homomorphism, battery: Battery, sampler=None) -> CheckResult:
    """The composite of ``first`` and ``second`` has zero homotopy on every
    battery pair (structural zero expected)."""
    composite = compose_homomorphisms(first, second)
    result = CheckResult("composite")
    for x, y in itertools.product(battery.zero_chains(), repeat=2):
        result.add(is_zero_form(composite.homotopy(x, y), sampler))
    return result
