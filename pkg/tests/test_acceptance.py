"""End-to-end acceptance checks, one test per criterion.

Each test records a ``criterion N: PASS|FAIL ...`` line before asserting, so
the verdict is printed even when the assertion fails.
"""

from __future__ import annotations

import dataclasses
import math
import time
from pathlib import Path

import numpy as np
import pytest

import oracles
from acceptance_log import record
from twoplectic.cli import main
from twoplectic.expr import ProvedZero, SampleConfig, SampledZero
from twoplectic.forms import Chart, exterior_derivative, interior_product, is_zero_form, lie_derivative, parse_form, wedge
from twoplectic.lie2 import (
    build_hemistrict,
    build_isomorphism,
    build_semistrict,
    composite_homotopy_check,
    string_battery,
    verify_bracket_laws,
    verify_coherence,
    verify_homomorphism,
    volume_battery,
)
from twoplectic.plectic import check_closed, hamiltonian_vector_field, hemi_bracket, make_volume_plectic, semi_bracket
from twoplectic.strings import (
    BField,
    SolutionCriterion,
    build_phase_space,
    euler_lagrange_crosscheck,
    h_tau_identity,
    helix_state,
    integrate,
    legendre_momenta,
    modified_plectic,
    standing_wave_state,
    step,
    total_energy,
)

SPECS = Path(__file__).resolve().parent.parent / "specs"
SAMPLER = SampleConfig(points=20, tol=1e-9, seed=0)
R3 = Chart(["x", "y", "z"])
A = 0.1
KR = "u0 * du1^du2"


@pytest.fixture(scope="module")
def batteries():
    volume = make_volume_plectic(3, SAMPLER)
    string3 = build_phase_space(3, SAMPLER)
    return {
        "volume": (volume, volume_battery(volume)),
        "string3": (string3.plectic, string_battery(string3, SAMPLER)),
    }


def zero(verdict) -> bool:
    return isinstance(verdict, (ProvedZero, SampledZero))


# ---------------------------------------------------------------------------
# 1. exterior calculus


def random_raw_form(rng, m, k):
    indices = [tuple(sorted(rng.choice(m, size=k, replace=False))) for _ in range(rng.integers(1, 4))]
    return {
        idx: [(int(rng.integers(-3, 4)) or 1, tuple(int(e) for e in rng.integers(0, 3, size=m))) for _ in range(rng.integers(1, 4))]
        for idx in indices
    }


def test_criterion_1_exterior_calculus():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    cfg = SampleConfig(tol=1e-10)
    d2 = leibniz = cartan = 0
    oracle_gap = 0.0
    for _ in range(50):
        m = int(rng.integers(2, 6))
        k = int(rng.integers(0, m + 1))
        chart = Chart([f"c{i}" for i in range(m)])
        raw = random_raw_form(rng, m, k)
        f = oracles.to_library(raw, chart, k)
        d2 += isinstance(is_zero_form(exterior_derivative(exterior_derivative(f))), ProvedZero)

        l = int(rng.integers(0, m - k + 1))
        g = oracles.to_library(random_raw_form(rng, m, l), chart, l)
        lhs = exterior_derivative(wedge(f, g))
        rhs = wedge(exterior_derivative(f), g) + wedge(f, exterior_derivative(g)) * (-1) ** k
        leibniz += zero(is_zero_form(lhs - rhs, cfg))

        vraw = [random_raw_form(rng, m, 0)[()] for _ in range(m)]
        v = oracles.field_to_library(vraw, chart)
        got = lie_derivative(v, f)
        if k:
            formula = interior_product(v, exterior_derivative(f)) + exterior_derivative(interior_product(v, f))
        else:
            formula = interior_product(v, exterior_derivative(f))
        x = rng.uniform(-1.5, 1.5, size=m)
        vx = np.array([oracles.poly_value(p, x) for p in vraw])
        dv = np.array([oracles.poly_grad(p, x) for p in vraw])
        expected = oracles.lie_derivative(vx, dv, oracles.dense(raw, m, k, x), oracles.dense_gradient(raw, m, k, x))
        gap = float(np.max(np.abs(oracles.library_dense(got, x) - expected), initial=0.0))
        oracle_gap = max(oracle_gap, gap / max(1.0, float(np.max(np.abs(expected), initial=0.0))))
        cartan += zero(is_zero_form(got - formula, cfg)) and oracle_gap <= 1e-10
    elapsed = time.perf_counter() - start
    ok = d2 == leibniz == cartan == 50 and elapsed < 30
    record(1, ok, f"d2={d2}/50 leibniz={leibniz}/50 cartan={cartan}/50 oracle_rel_gap={oracle_gap:.1e} time={elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------------------
# 2. bracket laws


def test_criterion_2_bracket_laws(batteries):
    start = time.perf_counter()
    volume = verify_bracket_laws(*batteries["volume"], SAMPLER)
    string = verify_bracket_laws(*batteries["string3"], SAMPLER)
    elapsed = time.perf_counter() - start
    ok = (
        all(isinstance(c.verdict, ProvedZero) for c in volume.checks)
        and all(zero(c.verdict) for c in string.checks)
        and len(string.checks) == len(volume.checks) == 8
        and elapsed < 60
    )
    statuses = {c.status for c in string.checks}
    record(2, ok, f"volume=proved x{len(volume.checks)} string3={'/'.join(sorted(statuses))} time={elapsed:.1f}s")
    assert ok, volume.format() + string.format()


# ---------------------------------------------------------------------------
# 3. worked values


def test_criterion_3_worked_values():
    P = make_volume_plectic(3)
    F = hamiltonian_vector_field(P, parse_form("x * dy", R3))
    G = hamiltonian_vector_field(P, parse_form("y * dz", R3))
    symbolic = (
        F.v == -R3.partial("z")
        and semi_bracket(P, F, G).form == R3.differential("y")
        and hemi_bracket(P, F, G).form.is_zero()
        and interior_product(F.v, G.form) == R3.function("-y")
    )
    Omega = oracles.dense({(0, 1, 2): [(1, (0, 0, 0))]}, 3, 3, np.zeros(3))
    raw_F = {(1,): [(1, (1, 0, 0))]}
    raw_G = {(2,): [(1, (0, 1, 0))]}
    agree = True
    for x in np.random.default_rng(3).uniform(-2, 2, size=(10, 3)):
        vF, rF = oracles.hamiltonian_solve(Omega, oracles.exterior_derivative(oracles.dense_gradient(raw_F, 3, 1, x)))
        vG, rG = oracles.hamiltonian_solve(Omega, oracles.exterior_derivative(oracles.dense_gradient(raw_G, 3, 1, x)))
        semi = np.einsum("i,j,ijk->k", vF, vG, Omega)
        # v_F is constant, so its Jacobian vanishes
        hemi = oracles.lie_derivative(vF, np.zeros((3, 3)), oracles.dense(raw_G, 3, 1, x), oracles.dense_gradient(raw_G, 3, 1, x))
        phi = oracles.interior(vF, oracles.dense(raw_G, 3, 1, x))
        agree &= (
            max(rF, rG) < 1e-12
            and np.allclose(vF, [0, 0, -1], atol=1e-12)
            and np.allclose(semi, [0, 1, 0], atol=1e-12)
            and np.allclose(hemi, 0, atol=1e-12)
            and abs(phi + x[1]) < 1e-12
        )
    ok = symbolic and agree
    record(3, ok, "v=-d/dz semi=dy hemi=0 phi=-y symbolic and dense-oracle routes agree")
    assert ok


# ---------------------------------------------------------------------------
# 4. coherence and fault injection


def negated_bracket(L):
    def bracket(F, G):
        B = L.bracket(F, G)
        return dataclasses.replace(B, form=-B.form)

    return dataclasses.replace(L, bracket=bracket)


def test_criterion_4_coherence(batteries):
    parts = []
    ok = True
    for name, (P, chains) in batteries.items():
        for flavor in (build_hemistrict, build_semistrict):
            L = flavor(P, SAMPLER)
            report = verify_coherence(L, chains, SAMPLER)
            diagrams_ok = all(zero(report[d].verdict) for d in "1234")
            faulty = verify_coherence(negated_bracket(L), chains, SAMPLER)
            failures = [c for c in faulty.checks if c.status == "FAIL"]
            witnessed = bool(failures) and all(set(c.verdict.point) == set(P.chart.coords) for c in failures)
            ok &= diagrams_ok and report.ok and witnessed
            parts.append(f"{name}/{L.flavor}={'ok' if diagrams_ok else 'bad'},fault={len(failures)}FAIL")
    record(4, ok, " ".join(parts))
    assert ok


# ---------------------------------------------------------------------------
# 5. homomorphisms


def test_criterion_5_homomorphisms(batteries):
    parts = []
    ok = True
    for name, (P, chains) in batteries.items():
        forward, backward = build_isomorphism(P, SAMPLER)
        for h in (forward, backward):
            report = verify_homomorphism(h, chains, SAMPLER)
            ok &= report.ok and all(zero(c.verdict) for c in report.checks) and zero(report["hexagon"].verdict)
        for a, b in ((forward, backward), (backward, forward)):
            ok &= isinstance(composite_homotopy_check(a, b, chains).verdict, ProvedZero)
        parts.append(f"{name}=ok" if ok else f"{name}=bad")
    record(5, ok, " ".join(parts) + " composites=proved")
    assert ok


# ---------------------------------------------------------------------------
# 6. free string


def max_error_over_period(n):
    state = standing_wave_state(3, n, A)
    dt = state.dsigma / 2
    worst = 0.0
    for _ in range(2 * n):
        state = step(state, dt)
        worst = max(worst, float(np.max(np.abs(state.phi - standing_wave_state(3, n, A, t=state.t).phi))))
    return worst


def test_criterion_6_free_string():
    start = time.perf_counter()
    errors = [max_error_over_period(n) for n in (32, 64, 128, 256)]
    orders = [math.log2(a / b) for a, b in zip(errors, errors[1:])]

    state = standing_wave_state(3, 256, A)
    dt = state.dsigma / 2
    E0 = total_energy(legendre_momenta(state))
    drift = 0.0
    for _ in range(10 * 512):
        state = step(state, dt)
        drift = max(drift, abs(total_energy(legendre_momenta(state)) - E0) / abs(E0))
    closed_form = -math.pi * A**2 / 2
    energy_gap = abs(E0 - closed_form) / abs(closed_form)
    elapsed = time.perf_counter() - start

    ok = (
        errors[-1] <= 5e-3
        and all(1.8 <= o <= 2.2 for o in orders)
        and drift <= 1e-4
        and energy_gap <= 1e-3
        and elapsed < 60
    )
    record(
        6,
        ok,
        f"max_error_N256={errors[-1]:.2e} orders={[round(o, 3) for o in orders]} "
        f"drift_10_periods={drift:.2e} energy_rel_gap={energy_gap:.2e} time={elapsed:.1f}s",
    )
    assert ok


# ---------------------------------------------------------------------------
# 7. solution criterion


def exact_sections(n, amplitude=A, t=0.7):
    dt = 2 * np.pi / n / 2
    return [legendre_momenta(standing_wave_state(3, n, amplitude, t=t + s * dt)) for s in (-1, 0, 1)]


def test_criterion_7_solution_criterion():
    crit = SolutionCriterion(build_phase_space(3))
    residuals = [crit(*exact_sections(n)) for n in (32, 64, 128, 256)]
    orders = [math.log2(a / b) for a, b in zip(residuals, residuals[1:])]
    flipped = crit(*[dataclasses.replace(s, pi1=-s.pi1) for s in exact_sections(64, amplitude=1.0)])
    ok = all(1.8 <= o <= 2.2 for o in orders) and flipped > 0.5
    record(7, ok, f"orders={[round(o, 3) for o in orders]} flipped_residual={flipped:.3f}")
    assert ok


# ---------------------------------------------------------------------------
# 8. B-field


def test_criterion_8_bfield():
    S = build_phase_space(3)
    B = BField.from_literal(KR, 3)
    # default certification samples the rank at 50 points
    P = modified_plectic(S, B)
    certified = isinstance(check_closed(P.omega), ProvedZero) and P.certificate.ok and P.certificate.points == 50

    state = helix_state(3, 128)
    dt = state.dsigma / 2
    steps = 256
    report = euler_lagrange_crosscheck(state, dt, steps, B)
    phi, _ = oracles.rk4(state.phi, state.velocity, dt / 4, 4 * steps, oracles.levi_civita_strength(3, 0.5))
    final = integrate(state, dt, steps, B)[-1]
    oracle_gap = float(np.max(np.abs(final.phi - phi)))

    identities = [isinstance(h_tau_identity(build_phase_space(d)), ProvedZero) for d in (1, 2, 3)]
    ok = (
        certified
        and abs(report.t - 2 * math.pi) < 1e-9
        and report.ok(1e-3)
        and oracle_gap <= 1e-3
        and all(identities)
    )
    record(
        8,
        ok,
        f"certified={certified} crosscheck={report.max_difference:.2e} rk4_oracle={oracle_gap:.2e} h_tau={identities}",
    )
    assert ok


# ---------------------------------------------------------------------------
# 9. determinism


def test_criterion_9_determinism(capsys, tmp_path):
    runs = [
        ["verify", "--spec", str(SPECS / "volume3.toml"), "--seed", "7"],
        ["lie2", "--spec", str(SPECS / "string3.toml")],
        ["string", "sim", "--spec", str(SPECS / "helix_bfield.toml")],
        ["string", "residual", "--spec", str(SPECS / "standing.toml")],
    ]
    same = True
    for i, argv in enumerate(runs):
        files, stdouts = [], []
        for j in range(2):
            target = tmp_path / f"{i}-{j}.out"
            main(argv + ["--out", str(target)])
            files.append(target.read_bytes())
            main(argv)
            stdouts.append(capsys.readouterr().out)
        same &= files[0] == files[1] and stdouts[0] == stdouts[1] and len(files[0]) > 0
    record(9, same, f"{len(runs)} commands byte-identical across repeated runs")
    assert same
