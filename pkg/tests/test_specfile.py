from __future__ import annotations

from pathlib import Path

import pytest

from twoplectic.specfile import CheckConfig, SpecError, build_preset, load_spec, parse_spec

SPECS = Path(__file__).resolve().parent.parent / "specs"


def test_volume_fixture():
    spec = load_spec(SPECS / "volume3.toml")
    assert spec.preset == "volume3" and spec.plectic.n == 2
    assert list(spec.forms) == ["F", "G", "H", "K", "f", "g"]
    assert spec.check == CheckConfig(samples=20, tol=1e-9, seed=0, jobs=1)


def test_explicit_chart_and_omega():
    spec = load_spec(SPECS / "volume3_explicit.toml")
    assert spec.plectic.chart.coords == ("x", "y", "z")
    assert str(spec.plectic.omega) == "1 * dx^dy^dz"


def test_string_fixtures():
    spec = load_spec(SPECS / "helix_bfield.toml")
    assert spec.string.d == 3 and spec.string.bfield == "u0 * du1^du2" and spec.string.every == 16
    assert spec.plectic is None
    S = load_spec(SPECS / "string3.toml").string_space
    assert S.d == 3 and S.chart.dim == 12


def test_overrides_win_over_the_file():
    spec = load_spec(SPECS / "volume3.toml", {"seed": 5, "samples": None})
    assert spec.check.seed == 5 and spec.check.samples == 20


@pytest.mark.parametrize(
    "text, location",
    [
        ('[plectic]\nchart = ["x", "y", "z"]\nomega = "1 * dx^dy^"\n', "[plectic] omega"),
        ("[plectic]\npreset = 'volume3'\n[nonsense]\n", "<spec>"),
        ("[plectic]\npreset = 'volume3'\n[check]\nsamples = 0\n", "[check] samples"),
        ("[plectic]\npreset = 'volume3'\n[check]\ntol = 'small'\n", "[check] tol"),
        ("[plectic]\npreset = 'torus'\n", "[plectic] preset"),
        ("[plectic]\npreset = 'extpower:3'\n", "[plectic] preset"),
        ('[plectic]\nchart = ["x", "x"]\nomega = "dx"\n', "[plectic] chart"),
        ('[plectic]\nchart = ["x", "y", "z"]\nomega = "dx^dy^dz"\nn = 3\n', "[plectic] n"),
        ("[forms]\nF = 'x * dy'\n", "[forms] F"),
        ("[plectic]\npreset = 'volume3'\n[vectors]\nv = ['1', '0']\n", "[vectors] v"),
        ("[string]\nd = 3\nnsigma = 4\ndt = 0.1\nsteps = 1\npreset = 'standing:0.1,1'\n", "[string] nsigma"),
        ("[string]\nd = 3\nnsigma = 16\ndt = 0.1\nsteps = 1\npreset = 'wobble'\n", "[string] preset"),
        ("[string]\nd = 3\nnsigma = 16\ndt = 0.1\n", "[string]"),
        ("[string]\nd = 3\nnsigma = 16\ndt = 0.1\nsteps = 1\npreset = 'helix'\nbfield = 'u0 * du7'\n", "[string] bfield"),
        ("[plectic]\npreset = 'volume3'\nextra = 1\n", "[plectic]"),
    ],
)
def test_errors_name_their_location(text, location):
    with pytest.raises(SpecError) as info:
        parse_spec(text)
    assert info.value.location == location
    assert str(info.value).startswith(location)


def test_toml_syntax_errors_are_spec_errors():
    with pytest.raises(SpecError):
        parse_spec("[plectic\n")


def test_degenerate_explicit_omega_is_loaded_uncertified():
    # certification is the verify command's job, so it can report the kernel
    spec = load_spec(SPECS / "degenerate4.toml")
    assert spec.plectic.certificate is None


def test_missing_file():
    with pytest.raises(SpecError, match="cannot read"):
        load_spec(SPECS / "absent.toml")


@pytest.mark.parametrize("preset, dim", [("volume:4", 4), ("extpower:3,2", 6), ("cojet:2,1", 6), ("su2", 3), ("string:1", 6)])
def test_presets(preset, dim):
    P, _ = build_preset(preset)
    assert P.chart.dim == dim


def test_non_plectic_preset_is_a_spec_error():
    with pytest.raises(SpecError):
        build_preset("volume:1")
