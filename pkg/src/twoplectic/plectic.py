"""n-plectic structures, Hamiltonian forms and their two brackets.

A closed, nondegenerate ``(n+1)``-form ``omega`` assigns to an ``(n-1)``-form
``F`` at most one vector field ``v`` with ``dF = -i_v omega``.  Such ``F``
are Hamiltonian; for ``n = 2`` they carry the hemi-bracket ``L_{v_F} G``
and the semi-bracket ``i_{v_G} i_{v_F} omega``.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .expr import (
    NonzeroWitness,
    NormalForm,
    ProvedZero,
    SampleConfig,
    Verdict,
    is_zero_many,
    sample_points,
    worst,
)
from .forms import (
    Chart,
    ChartMismatchError,
    DegreeError,
    DifferentialForm,
    VectorField,
    contract,
    exterior_derivative,
    interior_product,
    is_zero_form,
    lie_bracket,
    lie_derivative,
    permutation_sign,
    wedge,
)

__all__ = [
    "RANK_TOL",
    "RESIDUAL_TOL",
    "NotPlecticError",
    "NotHamiltonianError",
    "CertificationError",
    "NondegeneracyCertificate",
    "PlecticStructure",
    "HamiltonianForm",
    "check_closed",
    "check_nondegenerate",
    "hamiltonian_vector_field",
    "exact",
    "hemi_bracket",
    "semi_bracket",
    "bracket_relation_residual",
    "liouville_residual",
    "jacobi_hemi_residual",
    "jacobi_semi_defect",
    "hemi_antisymmetry_defect",
    "semi_antisymmetry_defect",
    "alternator",
    "jacobiator",
    "make_volume_plectic",
    "make_exterior_power_phase_space",
    "make_cojet_phase_space",
    "make_lie_algebra_plectic",
    "su2_structure_constants",
]

RANK_TOL = 1e-8
RESIDUAL_TOL = 1e-8


class NotPlecticError(ValueError):
    pass


class NotHamiltonianError(ValueError):
    """``-dF`` is not in the image of ``v -> i_v omega`` at ``point``."""

    def __init__(self, point: Mapping[str, float], residual: float, where: str = ""):
        detail = f" ({where})" if where else ""
        super().__init__(f"form is not Hamiltonian: residual {residual:.3e} at {dict(point)}{detail}")
        self.point = dict(point)
        self.residual = residual


class CertificationError(ArithmeticError):
    def __init__(self, message: str, verdict: Verdict | None = None):
        super().__init__(message)
        self.verdict = verdict


@dataclass(frozen=True)
class NondegeneracyCertificate:
    points: int
    min_singular_values: tuple[float, ...]
    tol: float
    witness: Mapping[str, float] | None = None
    null_vector: tuple[float, ...] | None = None

    @property
    def ok(self) -> bool:
        return self.witness is None

    @property
    def status(self) -> str:
        return "sampled" if self.ok else "FAIL"

    @property
    def smallest(self) -> float:
        return min(self.min_singular_values) if self.min_singular_values else 0.0


class PlecticStructure:
    """A form ``omega`` of degree ``n + 1`` on a chart.

    Construction performs no checks; :meth:`certify` runs the closedness
    and nondegeneracy tests and raises :class:`NotPlecticError` on failure.
    """

    def __init__(self, omega: DifferentialForm, potential: DifferentialForm | None = None, label: str = ""):
        if omega.degree < 2:
            raise DegreeError("an n-plectic form has degree at least 2")
        if potential is not None and potential.degree != omega.degree - 1:
            raise DegreeError("potential must have degree deg(omega) - 1")
        self.omega = omega
        self.potential = potential
        self.label = label
        self.closed: Verdict | None = None
        self.certificate: NondegeneracyCertificate | None = None

    @property
    def chart(self) -> Chart:
        return self.omega.chart

    @property
    def n(self) -> int:
        return self.omega.degree - 1

    @cached_property
    def contractions(self) -> tuple[DifferentialForm, ...]:
        """``i_{d/dx^j} omega`` for every coordinate ``j``."""
        return tuple(interior_product(self.chart.partial(c), self.omega) for c in self.chart.coords)

    @cached_property
    def rows(self) -> tuple[tuple[int, ...], ...]:
        return tuple(sorted({idx for f in self.contractions for idx in f.terms}))

    @cached_property
    def matrix(self) -> list[list[NormalForm]]:
        """Contraction matrix: row per ``n``-index, column per coordinate."""
        return [[f.coefficient(r) for f in self.contractions] for r in self.rows]

    @cached_property
    def is_constant(self) -> bool:
        return all(c.is_constant() for c in self.omega.terms.values())

    def numeric_matrix(self, point: Mapping[str, float], rows: Sequence[tuple[int, ...]] | None = None) -> np.ndarray:
        rows = self.rows if rows is None else rows
        out = np.zeros((len(rows), self.chart.dim))
        for j, f in enumerate(self.contractions):
            terms = f.terms
            for i, r in enumerate(rows):
                c = terms.get(r)
                if c is not None:
                    out[i, j] = c.evaluate(point)
        return out

    def certify(self, sampler: SampleConfig | None = None, jobs: int = 1) -> "PlecticStructure":
        sampler = sampler or SampleConfig()
        self.closed = check_closed(self.omega, sampler)
        if not self.closed.ok:
            raise NotPlecticError(f"omega is not closed: {self.closed}")
        self.certificate = check_nondegenerate(self, sampler, jobs=jobs)
        if not self.certificate.ok:
            raise NotPlecticError(
                f"omega is degenerate at {dict(self.certificate.witness)}; kernel {self.certificate.null_vector}"
            )
        return self

    def __repr__(self) -> str:
        name = f" {self.label}" if self.label else ""
        return f"PlecticStructure({self.n}-plectic{name} on {self.chart.coords})"


def check_closed(omega: DifferentialForm, sampler: SampleConfig | None = None) -> Verdict:
    return is_zero_form(exterior_derivative(omega), sampler)


def check_nondegenerate(
    P: PlecticStructure | DifferentialForm,
    sampler: SampleConfig | None = None,
    tol: float = RANK_TOL,
    jobs: int = 1,
) -> NondegeneracyCertificate:
    """Smallest singular value of the contraction matrix at sampled points."""
    if isinstance(P, DifferentialForm):
        P = PlecticStructure(P)
    sampler = sampler or SampleConfig()
    # constant forms are still probed at every point so certificates compare
    points = list(sample_points(P.chart.coords, sampler))
    m = P.chart.dim

    def smallest(point):
        A = P.numeric_matrix(point)
        if A.shape[0] < m:
            A = np.vstack([A, np.zeros((m - A.shape[0], m))])
        _, s, vt = np.linalg.svd(A)
        return s[-1], vt[-1]

    if jobs > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(smallest, points))
    else:
        results = [smallest(p) for p in points]
    values = []
    for point, (s, kernel) in zip(points, results):
        values.append(float(s))
        if not s > tol:
            return NondegeneracyCertificate(
                len(values), tuple(values), tol, dict(point), tuple(float(k) for k in np.round(kernel, 12))
            )
    return NondegeneracyCertificate(len(values), tuple(values), tol)


@dataclass(frozen=True)
class HamiltonianForm:
    """A form with its certified Hamiltonian vector field."""

    form: DifferentialForm
    vector_field: VectorField
    residual: Verdict = field(default_factory=ProvedZero)
    unique: bool = True

    @property
    def v(self) -> VectorField:
        return self.vector_field

    def __add__(self, other: "HamiltonianForm") -> "HamiltonianForm":
        return HamiltonianForm(
            self.form + other.form,
            self.vector_field + other.vector_field,
            worst([self.residual, other.residual]),
            self.unique and other.unique,
        )

    def __neg__(self) -> "HamiltonianForm":
        return HamiltonianForm(-self.form, -self.vector_field, self.residual, self.unique)

    def __sub__(self, other: "HamiltonianForm") -> "HamiltonianForm":
        return self + (-other)

    def scale(self, factor) -> "HamiltonianForm":
        factor = Fraction(factor)
        return HamiltonianForm(self.form * factor, self.vector_field * factor, self.residual, self.unique)

    def __str__(self) -> str:
        return str(self.form)


def _residual(P: PlecticStructure, F: DifferentialForm, v: VectorField, sampler: SampleConfig | None) -> Verdict:
    return is_zero_form(exterior_derivative(F) + interior_product(v, P.omega), sampler)


def _rational_solve(P: PlecticStructure, rhs: DifferentialForm):
    """Gaussian elimination over the rationals on ``[A | b]``; ``b`` carries
    normal-form entries.  Returns (solution columns, leftover rows, rank)."""
    rows = sorted(set(P.rows) | set(rhs.terms))
    m = P.chart.dim
    A = [[P.contractions[j].coefficient(r).constant_value() for j in range(m)] for r in rows]
    b = [rhs.coefficient(r) for r in rows]
    pivots: list[int] = []
    r = 0
    for col in range(m):
        pivot = next((i for i in range(r, len(rows)) if A[i][col] != 0), None)
        if pivot is None:
            continue
        A[r], A[pivot] = A[pivot], A[r]
        b[r], b[pivot] = b[pivot], b[r]
        inv = 1 / A[r][col]
        A[r] = [a * inv for a in A[r]]
        b[r] = b[r].scale(inv)
        for i in range(len(rows)):
            if i != r and A[i][col] != 0:
                factor = A[i][col]
                A[i] = [a - factor * p for a, p in zip(A[i], A[r])]
                b[i] = b[i] - b[r].scale(factor)
        pivots.append(col)
        r += 1
    solution = {col: b[i] for i, col in enumerate(pivots)}
    leftover = [(rows[i], b[i]) for i in range(r, len(rows))]
    return solution, leftover, len(pivots)


def hamiltonian_vector_field(
    P: PlecticStructure,
    F: DifferentialForm,
    candidate: VectorField | None = None,
    sampler: SampleConfig | None = None,
    tol: float = RESIDUAL_TOL,
) -> HamiltonianForm:
    """Solve ``i_v omega = -dF`` for ``v``.

    Constant ``omega``: exact elimination, free directions set to zero, then
    the equations left over are certified zero.  Otherwise the system is
    solved by least squares at sampled points, which can only refute; a
    ``candidate`` field is then required and is verified symbolically.
    """
    if F.chart != P.chart:
        raise ChartMismatchError("form and plectic structure live on different charts")
    if F.degree != P.n - 1:
        raise DegreeError(f"Hamiltonian forms of a {P.n}-plectic structure have degree {P.n - 1}, got {F.degree}")
    sampler = sampler or SampleConfig()
    rhs = -exterior_derivative(F)
    if rhs.is_zero() and candidate is None:
        v = VectorField.zero(P.chart)
        return HamiltonianForm(F, v, ProvedZero(), True)

    if P.is_constant and candidate is None:
        solution, leftover, rank = _rational_solve(P, rhs)
        if leftover:
            verdict = is_zero_many([c for _, c in leftover], sampler, [str(r) for r, _ in leftover], P.chart.coords)
            if isinstance(verdict, NonzeroWitness):
                raise NotHamiltonianError(verdict.point, abs(verdict.value), verdict.where)
        v = VectorField(P.chart, solution)
        residual = _residual(P, F, v, sampler)
        if not residual.ok:
            raise NotHamiltonianError(residual.point, residual.max_residual, residual.where)
        return HamiltonianForm(F, v, residual, rank == P.chart.dim)

    rows = sorted(set(P.rows) | set(rhs.terms))
    names = sorted(set(P.chart.coords))
    for point in sample_points(names, sampler):
        A = P.numeric_matrix(point, rows)
        b = np.array([rhs.coefficient(r).evaluate(point) for r in rows])
        x, *_ = np.linalg.lstsq(A, b, rcond=None)
        scale = np.linalg.norm(b)
        if scale > 0:
            rel = float(np.linalg.norm(A @ x - b) / scale)
            if rel > tol:
                raise NotHamiltonianError(point, rel)
    if candidate is None:
        raise CertificationError("omega has non-constant coefficients; supply a candidate vector field")
    residual = _residual(P, F, candidate, sampler)
    if not residual.ok:
        raise NotHamiltonianError(residual.point, residual.max_residual, residual.where)
    return HamiltonianForm(F, candidate, residual, True)


def exact(P: PlecticStructure, f) -> HamiltonianForm:
    """``df`` with its zero Hamiltonian vector field."""
    g = f if isinstance(f, DifferentialForm) else DifferentialForm.function(P.chart, f)
    return HamiltonianForm(exterior_derivative(g), VectorField.zero(P.chart), ProvedZero(), True)


def _certified(P: PlecticStructure, form: DifferentialForm, v: VectorField, sampler, what: str) -> HamiltonianForm:
    verdict = _residual(P, form, v, sampler)
    if not verdict.ok:
        raise CertificationError(f"{what} failed its Hamiltonian certificate: {verdict}", verdict)
    return HamiltonianForm(form, v, verdict, True)


def hemi_bracket(P: PlecticStructure, F: HamiltonianForm, G: HamiltonianForm, sampler: SampleConfig | None = None) -> HamiltonianForm:
    """``L_{v_F} G`` with Hamiltonian vector field ``[v_F, v_G]``."""
    form = lie_derivative(F.v, G.form)
    return _certified(P, form, lie_bracket(F.v, G.v), sampler, "hemi-bracket")


def semi_bracket(P: PlecticStructure, F: HamiltonianForm, G: HamiltonianForm, sampler: SampleConfig | None = None) -> HamiltonianForm:
    """``i_{v_G} i_{v_F} omega`` with Hamiltonian vector field ``[v_F, v_G]``."""
    form = contract(P.omega, [F.v, G.v])
    return _certified(P, form, lie_bracket(F.v, G.v), sampler, "semi-bracket")


def alternator(F: HamiltonianForm, G: HamiltonianForm) -> DifferentialForm:
    """``-(i_{v_F} G + i_{v_G} F)``."""
    return -(interior_product(F.v, G.form) + interior_product(G.v, F.form))


def jacobiator(P: PlecticStructure, F: HamiltonianForm, G: HamiltonianForm, H: HamiltonianForm) -> DifferentialForm:
    """``-i_{v_F} i_{v_G} i_{v_H} omega``."""
    return -contract(P.omega, [H.v, G.v, F.v])


def bracket_relation_residual(P, F: HamiltonianForm, G: HamiltonianForm, sampler=None) -> Verdict:
    """Hemi minus semi minus ``d i_{v_F} G``."""
    diff = (
        lie_derivative(F.v, G.form)
        - contract(P.omega, [F.v, G.v])
        - exterior_derivative(interior_product(F.v, G.form))
    )
    return is_zero_form(diff, sampler)


def liouville_residual(P, F: HamiltonianForm, sampler=None) -> Verdict:
    return is_zero_form(lie_derivative(F.v, P.omega), sampler)


def jacobi_hemi_residual(P, F, G, H, sampler=None) -> Verdict:
    lhs = hemi_bracket(P, F, hemi_bracket(P, G, H, sampler), sampler).form
    rhs = hemi_bracket(P, hemi_bracket(P, F, G, sampler), H, sampler).form + hemi_bracket(
        P, G, hemi_bracket(P, F, H, sampler), sampler
    ).form
    return is_zero_form(lhs - rhs, sampler)


def jacobi_semi_defect(P, F, G, H, sampler=None) -> Verdict:
    lhs = semi_bracket(P, F, semi_bracket(P, G, H, sampler), sampler).form
    lhs = lhs + exterior_derivative(jacobiator(P, F, G, H))
    rhs = semi_bracket(P, semi_bracket(P, F, G, sampler), H, sampler).form + semi_bracket(
        P, G, semi_bracket(P, F, H, sampler), sampler
    ).form
    return is_zero_form(lhs - rhs, sampler)


def hemi_antisymmetry_defect(P, F, G, sampler=None) -> Verdict:
    """``{F,G}_h + {G,F}_h + dS_{F,G}``."""
    total = lie_derivative(F.v, G.form) + lie_derivative(G.v, F.form) + exterior_derivative(alternator(F, G))
    return is_zero_form(total, sampler)


def semi_antisymmetry_defect(P, F, G, sampler=None) -> Verdict:
    return is_zero_form(contract(P.omega, [F.v, G.v]) + contract(P.omega, [G.v, F.v]), sampler)


def hamiltonian_field_residual(P, F: HamiltonianForm, sampler=None) -> Verdict:
    return _residual(P, F.form, F.v, sampler)


# ---------------------------------------------------------------------------
# Generators


def _volume_names(m: int) -> list[str]:
    if m <= 4:
        return ["x", "y", "z", "w"][:m]
    return [f"x{i}" for i in range(1, m + 1)]


def make_volume_plectic(m: int, sampler: SampleConfig | None = None) -> PlecticStructure:
    """``dx^1 ^ ... ^ dx^m``, an ``(m-1)``-plectic form; coordinates are
    ``x, y, z, w`` up to four dimensions and ``x1 ... xm`` beyond."""
    if m < 2:
        raise ValueError("the volume form is plectic only for m >= 2")
    chart = Chart(_volume_names(m))
    return PlecticStructure(chart.volume(), label=f"volume{m}").certify(sampler)


def exterior_power_index_name(index: Sequence[int], d: int) -> str:
    if d < 10:
        return "p" + "".join(str(i) for i in index)
    return "p" + "_".join(str(i) for i in index)


def make_exterior_power_phase_space(d: int, n: int, sampler: SampleConfig | None = None) -> PlecticStructure:
    """Canonical ``n``-plectic form ``d(p_I dq^I)`` on the bundle of
    ``n``-forms over ``R^d``; coordinates ``q1..qd`` then ``p_I`` named like
    ``p12``."""
    if not 1 <= n <= d:
        raise ValueError("need 1 <= n <= d")
    indices = list(itertools.combinations(range(1, d + 1), n))
    qs = [f"q{i}" for i in range(1, d + 1)]
    ps = [exterior_power_index_name(I, d) for I in indices]
    chart = Chart(qs + ps)
    alpha = DifferentialForm.zero(chart, n)
    for I, p in zip(indices, ps):
        alpha = alpha + DifferentialForm(chart, n, {tuple(chart.index(f"q{i}") for i in I): NormalForm.variable(p)})
    omega = exterior_derivative(alpha)
    return PlecticStructure(omega, alpha, label=f"extpower:{d},{n}").certify(sampler)


def make_cojet_phase_space(n: int, d: int, sampler: SampleConfig | None = None) -> PlecticStructure:
    """``d theta`` with ``theta = P vol + P^i_a (i_{d/dq^i} vol) ^ du^a`` on
    coordinates ``q1..qn, u1..ud, P{i}_{a}, P`` and ``vol = dq1 ^ ... ^ dqn``."""
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    qs = [f"q{i}" for i in range(1, n + 1)]
    us = [f"u{a}" for a in range(1, d + 1)]
    Ps = [f"P{i}_{a}" for i in range(1, n + 1) for a in range(1, d + 1)]
    chart = Chart(qs + us + Ps + ["P"])
    vol = DifferentialForm(chart, n, {tuple(range(n)): 1})
    theta = vol * NormalForm.variable("P")
    for i in range(1, n + 1):
        slot = interior_product(chart.partial(f"q{i}"), vol)
        for a in range(1, d + 1):
            theta = theta + wedge(slot, chart.differential(f"u{a}")) * NormalForm.variable(f"P{i}_{a}")
    return PlecticStructure(exterior_derivative(theta), theta, label=f"cojet:{n},{d}").certify(sampler)


def su2_structure_constants() -> list[list[list[int]]]:
    """``c[k][i][j]`` = Levi-Civita symbol."""
    g = 3
    return [[[permutation_sign((k, i, j)) for j in range(g)] for i in range(g)] for k in range(g)]


def make_lie_algebra_plectic(structure_constants, pairing, sampler: SampleConfig | None = None) -> PlecticStructure:
    """Constant 3-form ``omega_{ijk} = kappa_{il} c^l_{jk}`` on the Lie
    algebra, with ``structure_constants[l][j][k] = c^l_{jk}``.

    Raises :class:`NotPlecticError` if the tensor is not totally
    antisymmetric (pairing not invariant) or is degenerate.
    """
    c = [[[Fraction(x) for x in row] for row in plane] for plane in structure_constants]
    kappa = [[Fraction(x) for x in row] for row in pairing]
    g = len(kappa)
    if len(c) != g or any(len(plane) != g or any(len(r) != g for r in plane) for plane in c):
        raise ValueError("structure constants must have shape (g, g, g)")
    if any(len(r) != g for r in kappa):
        raise ValueError("pairing must be g x g")
    tensor = {
        (i, j, k): sum((kappa[i][l] * c[l][j][k] for l in range(g)), Fraction(0))
        for i in range(g)
        for j in range(g)
        for k in range(g)
    }
    for (i, j, k), value in tensor.items():
        for perm in itertools.permutations((0, 1, 2)):
            idx = (i, j, k)
            permuted = tuple(idx[p] for p in perm)
            if tensor[permuted] != permutation_sign(perm) * value:
                raise NotPlecticError(f"omega is not totally antisymmetric at {idx} vs {permuted}")
    chart = Chart([f"e{i}" for i in range(1, g + 1)])
    omega = DifferentialForm(chart, 3, {idx: v for idx, v in tensor.items() if idx[0] < idx[1] < idx[2]})
    return PlecticStructure(omega, label="lie-algebra").certify(sampler)
