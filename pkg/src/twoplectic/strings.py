"""Classical bosonic string on the extended phase space.

Symbolic side: the chart ``(q0, q1, u_a, p0_a, p1_a, e)``, the 2-form
``theta``, the 2-plectic ``omega = d theta``, the DeDonder-Weyl Hamiltonian
``h`` and the Hamiltonian 1-form ``H``.  Numeric side: worldsheet states on
a periodic grid, a second-order integrator for the wave equation with an
optional Kalb-Ramond force, energy and the bivector solution residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Sequence

import numpy as np

from .expr import NonzeroWitness, NormalForm, ProvedZero, SampleConfig, Verdict, is_zero
from .forms import (
    Chart,
    ChartMap,
    DifferentialForm,
    VectorField,
    exterior_derivative,
    interior_product,
    is_zero_form,
    lie_derivative,
    parse_form,
    pullback,
)
from .plectic import (
    CertificationError,
    HamiltonianForm,
    PlecticStructure,
    hamiltonian_vector_field,
)

__all__ = [
    "StringPhaseSpace",
    "BField",
    "WorldsheetState",
    "SolutionSection",
    "CFLError",
    "NonFiniteError",
    "build_phase_space",
    "hamiltonian_one_form",
    "translation_form",
    "linear_symmetry_form",
    "modified_plectic",
    "h_tau",
    "h_tau_identity",
    "centered_difference",
    "second_difference",
    "legendre_momenta",
    "kalb_ramond_force",
    "acceleration",
    "step",
    "integrate",
    "total_energy",
    "bivector_residual",
    "SolutionCriterion",
    "SimulationRow",
    "simulate",
    "step_back",
    "standing_wave",
    "standing_wave_state",
    "right_mover_state",
    "helix_state",
    "shift_periodic",
    "reference_solution",
    "euler_lagrange_crosscheck",
]

CERTIFY_POINTS = 50


def eta(d: int) -> np.ndarray:
    """Diagonal of the target metric, ``(1, -1, ..., -1)``."""
    out = -np.ones(d)
    out[0] = 1.0
    return out


@dataclass
class StringPhaseSpace:
    d: int
    chart: Chart
    theta: DifferentialForm
    omega: DifferentialForm
    h: NormalForm
    plectic: PlecticStructure
    hamiltonian: HamiltonianForm | None = None

    @property
    def u(self) -> list[str]:
        return [f"u{a}" for a in range(self.d)]

    @property
    def p0(self) -> list[str]:
        return [f"p0_{a}" for a in range(self.d)]

    @property
    def p1(self) -> list[str]:
        return [f"p1_{a}" for a in range(self.d)]

    @property
    def eta(self) -> np.ndarray:
        return eta(self.d)

    @property
    def target_chart(self) -> Chart:
        return Chart(self.u)

    def projection(self) -> ChartMap:
        """``(q, u, p, e) -> u``."""
        return ChartMap.projection(self.chart, self.target_chart)


def _eta_sign(a: int) -> int:
    return 1 if a == 0 else -1


def build_phase_space(d: int, sampler: SampleConfig | None = None) -> StringPhaseSpace:
    """Extended phase space for a string in ``d``-dimensional Minkowski
    space, with ``omega`` certified 2-plectic at 50 points."""
    if d < 1:
        raise ValueError("target dimension must be at least 1")
    us = [f"u{a}" for a in range(d)]
    p0 = [f"p0_{a}" for a in range(d)]
    p1 = [f"p1_{a}" for a in range(d)]
    chart = Chart(["q0", "q1", *us, *p0, *p1, "e"])
    ix = chart.index
    terms: dict[tuple[int, ...], NormalForm] = {(ix("q0"), ix("q1")): NormalForm.variable("e")}
    for a in range(d):
        terms[(ix(us[a]), ix("q1"))] = NormalForm.variable(p0[a])
        terms[(ix(us[a]), ix("q0"))] = -NormalForm.variable(p1[a])
    theta = DifferentialForm(chart, 2, terms)
    omega = exterior_derivative(theta)
    h = NormalForm()
    for a in range(d):
        # g = diag(1, -1): h = 1/2 eta^{aa} (p0_a^2 - p1_a^2)
        h = h + (NormalForm.variable(p0[a]) ** 2 - NormalForm.variable(p1[a]) ** 2).scale(Fraction(_eta_sign(a), 2))
    sampler = sampler or SampleConfig(points=CERTIFY_POINTS)
    plectic = PlecticStructure(omega, theta, label=f"string:{d}").certify(sampler)
    S = StringPhaseSpace(d, chart, theta, omega, h, plectic)
    S.hamiltonian = hamiltonian_one_form(S)
    return S


def hamiltonian_one_form(S: StringPhaseSpace) -> HamiltonianForm:
    """``H = -i_{d/dq0} theta`` with vector field ``-d/dq0``.

    Certifies ``L_{d/dq0} theta = 0`` and ``dH + i_{v_H} omega = 0``
    structurally; either failing raises :class:`CertificationError`.
    """
    dq0 = S.chart.partial("q0")
    invariance = lie_derivative(dq0, S.theta)
    if not invariance.is_zero():
        raise CertificationError("theta is not invariant under q0 translation")
    H = -interior_product(dq0, S.theta)
    v = -dq0
    residual = exterior_derivative(H) + interior_product(v, S.omega)
    if not residual.is_zero():
        raise CertificationError("dH + i_v omega does not vanish")
    return HamiltonianForm(H, v, ProvedZero(), True)


def translation_form(S: StringPhaseSpace, name: str | int) -> DifferentialForm:
    """``i_X theta`` for the coordinate field ``X = d/d(name)``; an integer
    selects ``u<name>``.  Its Hamiltonian vector field is ``X``."""
    if isinstance(name, int):
        name = S.u[name]
    if name not in ("q0", "q1", *S.u):
        raise ValueError(f"{name!r} is not a symmetry direction of theta")
    return interior_product(S.chart.partial(name), S.theta)


def linear_symmetry_form(S: StringPhaseSpace, A) -> tuple[DifferentialForm, VectorField]:
    """Lift of the linear target map ``u -> A u`` to the phase space,
    ``X = A^a_b u^b d/du^a - p^i_c A^c_b d/dp^i_b``, and ``F = i_X theta``.

    ``X`` preserves ``theta``, so ``dF = -i_X omega``.
    """
    A = np.asarray(A)
    d = S.d
    if A.shape != (d, d):
        raise ValueError(f"expected a {d}x{d} matrix")
    comps: dict[str, NormalForm] = {}

    def add(name, value):
        comps[name] = comps.get(name, NormalForm()) + value

    for a in range(d):
        for b in range(d):
            c = Fraction(int(A[a, b])) if float(A[a, b]).is_integer() else Fraction(A[a, b]).limit_denominator()
            if c == 0:
                continue
            add(S.u[a], NormalForm.variable(S.u[b]).scale(c))
            add(S.p0[b], NormalForm.variable(S.p0[a]).scale(-c))
            add(S.p1[b], NormalForm.variable(S.p1[a]).scale(-c))
    X = VectorField(S.chart, comps)
    if not lie_derivative(X, S.theta).is_zero():
        raise CertificationError("lifted field does not preserve theta")
    return interior_product(X, S.theta), X


# ---------------------------------------------------------------------------
# B-field


class BField:
    """Target-space 2-form ``B``.

    The literal's coefficient at ``du^b^du^c`` (``b < c``) is split evenly
    between the antisymmetric tensor entries, so ``B = B_{bc} du^b ^ du^c``
    summed over all ``b, c`` reproduces the literal.
    """

    def __init__(self, form: DifferentialForm):
        if form.degree != 2:
            raise ValueError("a B-field is a 2-form")
        names = form.chart.coords
        if any(n != f"u{a}" for a, n in enumerate(names)):
            raise ValueError("a B-field lives on the target chart u0..u{d-1}")
        self.form = form
        self.d = form.chart.dim
        self.chart = form.chart
        d = self.d
        half = Fraction(1, 2)
        self.tensor = [[NormalForm() for _ in range(d)] for _ in range(d)]
        for (b, c), coeff in form.terms.items():
            self.tensor[b][c] = coeff.scale(half)
            self.tensor[c][b] = coeff.scale(-half)
        self.field_strength = {}
        for b in range(d):
            for c in range(d):
                for e in range(d):
                    value = (
                        self.tensor[c][e].derivative(names[b])
                        + self.tensor[e][b].derivative(names[c])
                        + self.tensor[b][c].derivative(names[e])
                    )
                    if not value.is_zero():
                        self.field_strength[(b, c, e)] = value
        self._compiled = {k: v.lambdify(names) for k, v in self.field_strength.items()}

    def reversed(self) -> "BField":
        return BField(-self.form)

    @classmethod
    def from_literal(cls, text: str, d: int) -> "BField":
        chart = Chart([f"u{a}" for a in range(d)])
        return cls(parse_form(text, chart, degree=2))

    @property
    def dB(self) -> DifferentialForm:
        return exterior_derivative(self.form)

    def F(self, b: int, c: int, e: int) -> NormalForm:
        return self.field_strength.get((b, c, e), NormalForm())

    def strength_array(self, phi: np.ndarray) -> np.ndarray:
        """``F_{bcd}`` evaluated at every grid point, shape ``(d, d, d, N)``."""
        d, n = phi.shape
        out = np.zeros((d, d, d, n))
        args = [phi[a] for a in range(d)]
        for key, f in self._compiled.items():
            out[key] = np.broadcast_to(f(*args), (n,))
        return out

    def is_constant_strength(self) -> bool:
        return all(v.is_constant() for v in self.field_strength.values())


def modified_plectic(S: StringPhaseSpace, B: BField | None, sampler: SampleConfig | None = None) -> PlecticStructure:
    """``omega + p^* dB`` re-certified: closedness and rank at 50 points."""
    if B is None:
        omega = S.omega
    else:
        if B.d != S.d:
            raise ValueError("B-field and phase space have different target dimensions")
        omega = S.omega + pullback(S.projection(), B.dB)
    sampler = sampler or SampleConfig(points=CERTIFY_POINTS)
    return PlecticStructure(omega, label=f"string:{S.d}+B").certify(sampler)


# ---------------------------------------------------------------------------
# Energy identity


def _jet_names(d: int) -> tuple[list[str], list[str]]:
    return [f"ud0_{a}" for a in range(d)], [f"ud1_{a}" for a in range(d)]


def h_tau(S: StringPhaseSpace, substitute: bool = True) -> tuple[NormalForm, NormalForm]:
    """Coefficient of ``dq1`` in ``H`` restricted to a constant-``q0`` curve
    of a section, and the energy density ``epsilon``.

    Jet symbols ``ud0_a``, ``ud1_a`` stand for the first derivatives of the
    section.  With ``substitute`` the momentum relations and ``e = -h``
    are imposed.
    """
    ud0, ud1 = _jet_names(S.d)
    H = S.hamiltonian.form
    # tangent of the curve: d/dq1 + ud1^a d/du^a (H has no dp or de part)
    coefficient = H.component("q1")
    for a in range(S.d):
        coefficient = coefficient + H.component(S.u[a]) * NormalForm.variable(ud1[a])
    epsilon = NormalForm()
    for a in range(S.d):
        epsilon = epsilon + (NormalForm.variable(ud0[a]) ** 2 + NormalForm.variable(ud1[a]) ** 2).scale(
            Fraction(_eta_sign(a), 2)
        )
    if substitute:
        coefficient = coefficient.substitute({"e": -S.h})
        values = {}
        for a in range(S.d):
            values[S.p0[a]] = NormalForm.variable(ud0[a]).scale(_eta_sign(a))
            values[S.p1[a]] = NormalForm.variable(ud1[a]).scale(-_eta_sign(a))
        coefficient = coefficient.substitute(values)
    return coefficient, epsilon


def h_tau_identity(S: StringPhaseSpace, substitute: bool = True, sampler: SampleConfig | None = None) -> Verdict:
    """Verdict on ``H_tau - epsilon dq1``."""
    coefficient, epsilon = h_tau(S, substitute)
    return is_zero(coefficient - epsilon, sampler)


# ---------------------------------------------------------------------------
# Worldsheet numerics


class CFLError(ValueError):
    pass


class NonFiniteError(FloatingPointError):
    pass


@dataclass(frozen=True)
class WorldsheetState:
    """Target coordinates ``phi[a, j]`` and velocities at time ``t`` on a
    periodic grid ``sigma_j = j * 2 pi / N``."""

    t: float
    phi: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float)
        vel = np.array(self.velocity, dtype=float)
        if phi.ndim == 1:
            phi = phi[None, :]
        if vel.ndim == 1:
            vel = vel[None, :]
        if phi.shape != vel.shape:
            raise ValueError("phi and velocity shapes differ")
        if phi.shape[1] < 8:
            raise ValueError("the grid needs at least 8 points")
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(vel))):
            raise NonFiniteError(f"non-finite state at t = {self.t}")
        phi.setflags(write=False)
        vel.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "velocity", vel)

    @property
    def d(self) -> int:
        return self.phi.shape[0]

    @property
    def n(self) -> int:
        return self.phi.shape[1]

    @property
    def dsigma(self) -> float:
        return 2 * np.pi / self.n

    @property
    def sigma(self) -> np.ndarray:
        return np.arange(self.n) * self.dsigma

    @classmethod
    def zero(cls, d: int, n: int, t: float = 0.0) -> "WorldsheetState":
        return cls(t, np.zeros((d, n)), np.zeros((d, n)))


def centered_difference(f: np.ndarray, dsigma: float) -> np.ndarray:
    return (np.roll(f, -1, axis=-1) - np.roll(f, 1, axis=-1)) / (2 * dsigma)


def second_difference(f: np.ndarray, dsigma: float) -> np.ndarray:
    """Square of the centered difference: ``(f[j+2] - 2 f[j] + f[j-2]) / (2 ds)^2``.

    Using the square of the operator that defines the momenta keeps the
    discrete energy an exact invariant of the semi-discrete system.
    """
    return centered_difference(centered_difference(f, dsigma), dsigma)


@dataclass(frozen=True)
class SolutionSection:
    state: WorldsheetState
    pi0: np.ndarray
    pi1: np.ndarray
    e: np.ndarray

    @property
    def t(self) -> float:
        return self.state.t

    @property
    def h(self) -> np.ndarray:
        return -self.e


def legendre_momenta(state: WorldsheetState) -> SolutionSection:
    """``pi0 = eta v``, ``pi1 = -eta D phi`` (centered ``D``), ``e = -h``."""
    et = eta(state.d)[:, None]
    pi0 = et * state.velocity
    pi1 = -et * centered_difference(state.phi, state.dsigma)
    h = 0.5 * np.sum(et * (pi0**2 - pi1**2), axis=0)
    return SolutionSection(state, pi0, pi1, -h)


def energy_density(section: SolutionSection) -> np.ndarray:
    et = eta(section.state.d)[:, None]
    return 0.5 * np.sum(et * (section.pi0**2 + section.pi1**2), axis=0)


def total_energy(section: SolutionSection) -> float:
    """``sum_j epsilon_j * dsigma`` (signed, as the metric dictates)."""
    return float(np.sum(energy_density(section)) * section.state.dsigma)


def kalb_ramond_force(B: BField, state: WorldsheetState) -> np.ndarray:
    """``eta^{ad} J^{bc} F_{bcd}`` on the grid, with ``d/dq0`` the current
    velocity and ``d/dq1`` the centered difference."""
    if B.d != state.d:
        raise ValueError(f"B-field is {B.d}-dimensional, state is {state.d}-dimensional")
    return _force(B, state.phi, state.velocity, state.dsigma)


def _force(B: BField, phi: np.ndarray, velocity: np.ndarray, dsigma: float) -> np.ndarray:
    if not B.field_strength:
        return np.zeros_like(phi)
    F = B.strength_array(phi)
    d1 = centered_difference(phi, dsigma)
    J = np.einsum("bj,cj->bcj", velocity, d1)
    J = J - np.swapaxes(J, 0, 1)
    lowered = np.einsum("bcj,bcdj->dj", J, F)
    return eta(phi.shape[0])[:, None] * lowered


def acceleration(phi: np.ndarray, velocity: np.ndarray, dsigma: float, B: BField | None = None) -> np.ndarray:
    """Right-hand side ``d^2 phi / dt^2`` of the semi-discrete system."""
    a = second_difference(phi, dsigma)
    if B is not None:
        a = a + _force(B, phi, velocity, dsigma)
    return a


def _check_finite(*arrays, t: float) -> None:
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError(f"non-finite values at t = {t}")


def step(state: WorldsheetState, dt: float, B: BField | None = None) -> WorldsheetState:
    """One time step.

    Free string: velocity Verlet.  With a B-field the force depends on the
    velocity, so the step predicts the end velocity with a Verlet pass and
    then corrects with the force at the midpoint state; both variants are
    second order.
    """
    ds = state.dsigma
    if not 0 < dt <= ds * (1 + 1e-12):
        raise CFLError(f"time step {dt} violates 0 < dt <= dsigma = {ds}")
    phi, v = state.phi, state.velocity
    # overflow surfaces as NonFiniteError below, not as numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        D2 = second_difference(phi, ds)
        if B is None:
            v_half = v + 0.5 * dt * D2
            phi_new = phi + dt * v_half
            v_new = v_half + 0.5 * dt * second_difference(phi_new, ds)
        else:
            a0 = D2 + _force(B, phi, v, ds)
            v_half = v + 0.5 * dt * a0
            phi_new = phi + dt * v_half
            D2_new = second_difference(phi_new, ds)
            v_pred = v_half + 0.5 * dt * (D2_new + _force(B, phi_new, v_half, ds))
            phi_mid = 0.5 * (phi + phi_new)
            v_mid = 0.5 * (v + v_pred)
            v_new = v + dt * (0.5 * (D2 + D2_new) + _force(B, phi_mid, v_mid, ds))
    t_new = state.t + dt
    _check_finite(phi_new, v_new, t=t_new)
    return WorldsheetState(t_new, phi_new, v_new)


def integrate(
    state: WorldsheetState, dt: float, steps: int, B: BField | None = None, every: int = 1
) -> list[WorldsheetState]:
    """States at step ``0, every, 2*every, ...`` up to ``steps``."""
    out = [state]
    for k in range(1, steps + 1):
        state = step(state, dt, B)
        if k % every == 0 or k == steps:
            out.append(state)
    return out


def iterate(state: WorldsheetState, dt: float, B: BField | None = None) -> Iterator[WorldsheetState]:
    while True:
        yield state
        state = step(state, dt, B)


# ---------------------------------------------------------------------------
# Solution criterion


class SolutionCriterion:
    """Residual of ``omega~(v0, v1, .) = d(e + h)`` along sampled sections.

    ``omega~`` is ``omega`` plus the pulled-back ``dB`` when a B-field is
    given.  The criterion is that ``omega~(v0, v1, .)`` vanishes on vectors
    tangent to the constraint surface ``e + h = 0``; the proportionality
    factor is fixed by the ``de`` slot.  ``v0`` and ``v1`` are the tangent
    vectors of the section, by centered differences in time (neighbouring
    slices) and space.
    """

    def __init__(self, S: StringPhaseSpace, B: BField | None = None):
        self.S = S
        self.omega = S.omega if B is None else S.omega + pullback(S.projection(), B.dB)
        coords = list(S.chart.coords)
        self._coords = coords
        self._terms = [(idx, c.lambdify(coords)) for idx, c in sorted(self.omega.terms.items())]

    def _fields(self, sec: SolutionSection) -> dict[str, np.ndarray]:
        n = sec.state.n
        values = {"q0": np.full(n, sec.t), "q1": sec.state.sigma, "e": sec.e}
        for a in range(sec.state.d):
            values[f"u{a}"] = sec.state.phi[a]
            values[f"p0_{a}"] = sec.pi0[a]
            values[f"p1_{a}"] = sec.pi1[a]
        return values

    def components(self, before: SolutionSection, here: SolutionSection, after: SolutionSection) -> np.ndarray:
        """Slot ``l`` of the residual at every grid point, shape ``(m, N)``."""
        chart = self.S.chart
        state = here.state
        if state.d != self.S.d:
            raise ValueError(f"state is {state.d}-dimensional, phase space is {self.S.d}-dimensional")
        d, n, ds = state.d, state.n, state.dsigma
        dt2 = after.t - before.t
        if not dt2 > 0:
            raise ValueError("sections must be ordered in time")
        m, ix = chart.dim, chart.index
        now, prev, nxt = self._fields(here), self._fields(before), self._fields(after)
        v0 = np.zeros((m, n))
        v1 = np.zeros((m, n))
        v0[ix("q0")] = 1.0
        v1[ix("q1")] = 1.0
        for name in self._coords:
            if name in ("q0", "q1"):
                continue
            if name.startswith("u"):
                v0[ix(name)] = state.velocity[int(name[1:])]
            else:
                v0[ix(name)] = (nxt[name] - prev[name]) / dt2
            v1[ix(name)] = centered_difference(now[name], ds)

        out = np.zeros((m, n))
        args = [now[k] for k in self._coords]
        for idx, f in self._terms:
            c = np.broadcast_to(f(*args), (n,))
            for r, l in enumerate(idx):
                a, b = [i for i in idx if i != l]
                out[l] += (-1) ** r * c * (v0[a] * v1[b] - v0[b] * v1[a])
        # d(e + h) = de + eta^{aa} p0_a dp0_a - eta^{aa} p1_a dp1_a
        out[ix("e")] -= 1.0
        et = eta(d)
        for a in range(d):
            out[ix(f"p0_{a}")] -= et[a] * here.pi0[a]
            out[ix(f"p1_{a}")] += et[a] * here.pi1[a]
        return out

    def __call__(self, before: SolutionSection, here: SolutionSection, after: SolutionSection) -> float:
        return float(np.max(np.abs(self.components(before, here, after))))


def bivector_residual(
    sections: Sequence[SolutionSection],
    S: StringPhaseSpace,
    B: BField | None = None,
) -> list[tuple[float, float]]:
    """Max-norm of the solution criterion at every interior time slice of
    ``sections`` (see :class:`SolutionCriterion`)."""
    if len(sections) < 3:
        raise ValueError("need at least three time slices")
    criterion = SolutionCriterion(S, B)
    return [(sections[k].t, criterion(*sections[k - 1 : k + 2])) for k in range(1, len(sections) - 1)]


def step_back(state: WorldsheetState, dt: float, B: BField | None = None) -> WorldsheetState:
    """State one step earlier, by stepping the time-reversed system (the
    velocity-dependent force changes sign under reversal)."""
    flipped = WorldsheetState(state.t, state.phi, -state.velocity)
    back = step(flipped, dt, None if B is None else B.reversed())
    return WorldsheetState(state.t - dt, back.phi, -back.velocity)


@dataclass(frozen=True)
class SimulationRow:
    t: float
    total_energy: float
    linf_error: float | None
    bivector_residual: float


def simulate(
    initial: WorldsheetState,
    dt: float,
    steps: int,
    S: StringPhaseSpace,
    B: BField | None = None,
    every: int = 1,
    exact: Callable[[float], np.ndarray] | None = None,
) -> list[SimulationRow]:
    """Integrate and record energy, error against ``exact`` (a map from
    time to ``phi``) and the solution residual at steps ``0, every, ...``
    and at the last step."""
    criterion = SolutionCriterion(S, B)
    prev = legendre_momenta(step_back(initial, dt, B))
    state = initial
    cur = legendre_momenta(state)
    rows = []
    for k in range(steps + 1):
        nxt_state = step(state, dt, B)
        nxt = legendre_momenta(nxt_state)
        if k % every == 0 or k == steps:
            err = None if exact is None else float(np.max(np.abs(state.phi - exact(state.t))))
            rows.append(SimulationRow(state.t, total_energy(cur), err, criterion(prev, cur, nxt)))
        prev, cur, state = cur, nxt, nxt_state
    return rows


# ---------------------------------------------------------------------------
# Initial data and oracles


def _component(d: int) -> int:
    # transverse direction when one exists
    return 1 if d >= 2 else 0


def standing_wave(A: float, k: int, t: float, sigma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``A cos(k t) sin(k sigma)`` and its time derivative."""
    return A * np.cos(k * t) * np.sin(k * sigma), -A * k * np.sin(k * t) * np.sin(k * sigma)


def standing_wave_state(d: int, n: int, A: float, k: int = 1, t: float = 0.0) -> WorldsheetState:
    """Exact standing mode in the transverse direction ``u1`` (``u0`` if
    ``d = 1``), sampled on the grid."""
    phi = np.zeros((d, n))
    vel = np.zeros((d, n))
    sigma = np.arange(n) * 2 * np.pi / n
    a = _component(d)
    phi[a], vel[a] = standing_wave(A, k, t, sigma)
    return WorldsheetState(t, phi, vel)


def helix_state(d: int, n: int, A: float = 0.5) -> WorldsheetState:
    """Loop ``u1 = A sin(sigma)``, ``u2 = A cos(sigma)`` moving with unit
    velocity along ``u0``: the smallest data on which a constant
    ``F_{012}`` exerts an order-one force."""
    if d < 3:
        raise ValueError("the helix needs d >= 3")
    sigma = np.arange(n) * 2 * np.pi / n
    phi = np.zeros((d, n))
    vel = np.zeros((d, n))
    phi[1] = A * np.sin(sigma)
    phi[2] = A * np.cos(sigma)
    vel[0] = 1.0
    return WorldsheetState(0.0, phi, vel)


def spectral_derivative(f: np.ndarray) -> np.ndarray:
    n = f.shape[-1]
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    return np.real(np.fft.ifft(1j * k * np.fft.fft(f)))


def shift_periodic(f: np.ndarray, shift: float) -> np.ndarray:
    """``f(sigma - shift)`` for periodic samples, by Fourier phase shift."""
    n = f.shape[-1]
    k = np.fft.fftfreq(n, d=1.0 / n)
    phase = np.exp(-1j * k * shift)
    if n % 2 == 0:
        phase[n // 2] = np.cos(k[n // 2] * shift)
    return np.real(np.fft.ifft(np.fft.fft(f) * phase))


def right_mover_state(d: int, profile: np.ndarray, t: float = 0.0) -> WorldsheetState:
    """``phi(t, sigma) = f(sigma - t)`` in the transverse direction."""
    profile = np.asarray(profile, dtype=float)
    n = profile.shape[0]
    phi = np.zeros((d, n))
    vel = np.zeros((d, n))
    a = _component(d)
    phi[a] = shift_periodic(profile, t)
    vel[a] = -spectral_derivative(phi[a])
    return WorldsheetState(t, phi, vel)


def reference_solution(
    state: WorldsheetState, t_end: float, B: BField | None = None, rtol: float = 1e-11, atol: float = 1e-12
) -> WorldsheetState:
    """High-order adaptive integration of the same semi-discrete system."""
    from scipy.integrate import solve_ivp

    d, n, ds = state.d, state.n, state.dsigma

    def rhs(_t, y):
        phi = y[: d * n].reshape(d, n)
        v = y[d * n :].reshape(d, n)
        return np.concatenate([v.ravel(), acceleration(phi, v, ds, B).ravel()])

    y0 = np.concatenate([state.phi.ravel(), state.velocity.ravel()])
    sol = solve_ivp(rhs, (state.t, t_end), y0, method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise ArithmeticError(f"reference integration failed: {sol.message}")
    y = sol.y[:, -1]
    return WorldsheetState(t_end, y[: d * n].reshape(d, n), y[d * n :].reshape(d, n))


@dataclass(frozen=True)
class CrosscheckReport:
    t: float
    max_difference: float
    steps: int
    dt: float

    def ok(self, tol: float) -> bool:
        return self.max_difference <= tol


def euler_lagrange_crosscheck(
    initial: WorldsheetState,
    dt: float,
    steps: int,
    B: BField | None = None,
    reference: Callable[[WorldsheetState, float, BField | None], WorldsheetState] | None = None,
) -> CrosscheckReport:
    """Integrate with :func:`step` and compare the final configuration with
    an independent integrator of the same equations."""
    final = initial
    for _ in range(steps):
        final = step(final, dt, B)
    reference = reference or (lambda s, t, b: reference_solution(s, t, b))
    other = reference(initial, final.t, B)
    diff = float(np.max(np.abs(final.phi - other.phi)))
    return CrosscheckReport(final.t, diff, steps, dt)
