from __future__ import annotations

import dataclasses

import pytest

from twoplectic.expr import NonzeroWitness, ProvedZero, SampleConfig
from twoplectic.forms import Chart, interior_product, parse_form
from twoplectic.lie2 import (
    HEMISTRICT,
    SEMISTRICT,
    Battery,
    Lie2Homomorphism,
    Morphism1Chain,
    Report,
    build_hemistrict,
    build_isomorphism,
    build_semistrict,
    composite_homotopy_check,
    default_battery,
    format_point,
    string_battery,
    verify_bracket_laws,
    verify_coherence,
    verify_homomorphism,
)
from twoplectic.plectic import (
    HamiltonianForm,
    hamiltonian_vector_field,
    make_exterior_power_phase_space,
    make_volume_plectic,
)

R3 = Chart(["x", "y", "z"])
DIAGRAMS = ["1", "2", "3", "4"]


def ham(P, text):
    return hamiltonian_vector_field(P, parse_form(text, P.chart))


def negated_bracket(L):
    """Flip the sign of the bracket's form but keep its vector field."""
    def bracket(F, G):
        B = L.bracket(F, G)
        return HamiltonianForm(-B.form, B.v, B.residual, B.unique)

    return dataclasses.replace(L, bracket=bracket)


@pytest.fixture(scope="module")
def string2_chains(string2, sampler):
    return string_battery(string2, sampler)


def test_flavors(volume):
    assert build_hemistrict(volume).flavor == HEMISTRICT
    assert build_semistrict(volume).flavor == SEMISTRICT


def test_lie2_needs_two_plectic():
    with pytest.raises(ValueError):
        build_hemistrict(make_volume_plectic(4))


def test_degree_one_brackets(volume):
    h, s = build_hemistrict(volume), build_semistrict(volume)
    x_dy = ham(volume, "x * dy")
    f = R3.function("x*z")
    assert h.bracket_01(x_dy, f) == R3.function("-x")
    assert h.bracket_10(f, x_dy).is_zero()
    assert s.bracket_01(x_dy, f).is_zero() and s.alternator(x_dy, x_dy).is_zero()


def test_morphism_chain_composition():
    a = R3.function("x")
    T1 = Morphism1Chain(R3.differential("x"), R3.differential("x") + parse_form("2*y * dy", R3), R3.function("y^2"))
    T2 = Morphism1Chain(T1.target, T1.target + R3.differential("z"), R3.function("z"))
    assert isinstance(T1.verify(), ProvedZero) and isinstance(T2.verify(), ProvedZero)
    assert isinstance(T1.then(T2).verify(), ProvedZero)
    bad = Morphism1Chain(R3.differential("x"), R3.differential("y"), a)
    assert isinstance(bad.verify(), NonzeroWitness)


def test_battery_needs_enough_elements(volume_chains):
    with pytest.raises(ValueError):
        Battery(volume_chains.chains[:3], volume_chains.functions)


def test_default_battery_on_exterior_power():
    P = make_exterior_power_phase_space(3, 2)
    battery = default_battery(P)
    assert len(battery.chains) == 4
    assert all(not F.v.is_zero() for F in battery.chains)


@pytest.mark.parametrize("flavor", [build_hemistrict, build_semistrict])
def test_coherence_on_volume_battery(volume, volume_chains, flavor, sampler):
    report = verify_coherence(flavor(volume, sampler), volume_chains, sampler)
    for name in DIAGRAMS + ["chain-map", "closure"]:
        assert isinstance(report[name].verdict, ProvedZero), report.format()
        assert report[name].instances > 0


@pytest.mark.parametrize("flavor", [build_hemistrict, build_semistrict])
def test_coherence_on_string_battery(string2, string2_chains, flavor, sampler):
    report = verify_coherence(flavor(string2.plectic, sampler), string2_chains, sampler)
    assert report.ok, report.format()


def test_semistrict_jacobiator_identities(volume, volume_chains, sampler):
    report = verify_coherence(build_semistrict(volume, sampler), volume_chains, sampler)
    assert report["jacobiator-shift"].ok and report["jacobiator-derivation"].ok


@pytest.mark.parametrize("flavor", [build_hemistrict, build_semistrict])
def test_sign_flipped_bracket_fails_first_diagram(string2, string2_chains, flavor, sampler):
    L = negated_bracket(flavor(string2.plectic, sampler))
    report = verify_coherence(L, string2_chains, sampler)
    first = report["1"]
    assert first.status == "FAIL"
    assert set(first.verdict.point) == set(string2.chart.coords)


@pytest.mark.parametrize("flavor", [build_hemistrict, build_semistrict])
def test_sign_flipped_bracket_fails_on_volume_battery(volume, volume_chains, flavor, sampler):
    report = verify_coherence(negated_bracket(flavor(volume, sampler)), volume_chains, sampler)
    failed = [c for c in report.checks if c.status == "FAIL"]
    assert failed and all(isinstance(c.verdict.point, dict) for c in failed)


def test_homomorphisms_on_volume_battery(volume, volume_chains, sampler):
    forward, backward = build_isomorphism(volume, sampler)
    for h in (forward, backward):
        report = verify_homomorphism(h, volume_chains, sampler)
        assert report.ok and all(isinstance(c.verdict, ProvedZero) for c in report.checks), report.format()


def test_homomorphisms_on_string_battery(string2, string2_chains, sampler):
    for h in build_isomorphism(string2.plectic, sampler):
        assert verify_homomorphism(h, string2_chains, sampler).ok


def test_homotopy_of_worked_pair(volume):
    forward, backward = build_isomorphism(volume)
    F, G = ham(volume, "x * dy"), ham(volume, "y * dz")
    assert forward.homotopy(F, G) == R3.function("-y")
    assert backward.homotopy(F, G) == R3.function("y")


def test_composites_cancel(volume, volume_chains):
    forward, backward = build_isomorphism(volume)
    for first, second in ((forward, backward), (backward, forward)):
        result = composite_homotopy_check(first, second, volume_chains)
        assert isinstance(result.verdict, ProvedZero)
        assert result.instances == len(volume_chains.zero_chains()) ** 2


def test_dropped_sign_in_backward_homotopy_fails(volume, volume_chains, sampler):
    h, s = build_hemistrict(volume, sampler), build_semistrict(volume, sampler)
    wrong = Lie2Homomorphism(s, h, lambda F, G: interior_product(F.v, G.form))
    report = verify_homomorphism(wrong, volume_chains, sampler)
    assert report["hexagon"].status == "FAIL"
    assert report["homotopy"].status == "FAIL"


def test_bracket_laws_report(volume, volume_chains, sampler):
    report = verify_bracket_laws(volume, volume_chains, sampler)
    names = [c.name for c in report.checks]
    assert names == [
        "liouville",
        "hamiltonian",
        "bracket-closure",
        "hemi-semi-relation",
        "hemi-antisymmetry",
        "hemi-jacobi",
        "semi-antisymmetry",
        "semi-jacobi",
    ]
    assert all(isinstance(c.verdict, ProvedZero) for c in report.checks)


def test_report_lines():
    report = Report("demo")
    report.check("a").add(ProvedZero())
    report.check("b").add(NonzeroWitness({"x": 0.5, "y": -1.0}, -2.0))
    assert report.lines() == [
        "diagram=a status=proved max_residual=0.000e+00 witness=-",
        "diagram=b status=FAIL max_residual=2.000e+00 witness=(x=0.5,y=-1)",
    ]
    assert not report.ok
    assert report.format("check").splitlines()[0] == "# demo"
    assert format_point(None) == "-"


def test_coherence_is_deterministic(volume, volume_chains):
    cfg = SampleConfig(seed=3)
    a = verify_coherence(build_semistrict(volume, cfg), volume_chains, cfg, limit=5).format()
    b = verify_coherence(build_semistrict(volume, cfg), volume_chains, cfg, limit=5).format()
    assert a == b
