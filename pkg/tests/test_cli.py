from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from twoplectic.cli import main

SPECS = Path(__file__).resolve().parent.parent / "specs"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def spec(name):
    return str(SPECS / name)


def statuses(out):
    return [line.split()[1] for line in out.splitlines() if line.startswith(("check=", "diagram="))]


@pytest.mark.parametrize("name", ["volume3.toml", "volume3_explicit.toml", "su2.toml"])
def test_verify_proves_everything(capsys, name):
    code, out, _ = run(capsys, "verify", "--spec", spec(name))
    assert code == 0
    found = statuses(out)
    assert found and all(s in ("status=proved", "status=sampled") for s in found)
    assert "check=nondegenerate status=sampled" in out
    assert sum(s == "status=proved" for s in found) == len(found) - 1


def test_verify_reports_degenerate_kernel(capsys):
    code, out, _ = run(capsys, "verify", "--spec", spec("degenerate4.toml"))
    assert code == 1
    line = next(l for l in out.splitlines() if l.startswith("check=nondegenerate"))
    assert "status=FAIL" in line and line.endswith("kernel=[0.0, 0.0, 0.0, 1.0]")


def test_malformed_spec_exits_two_with_location(capsys):
    code, out, err = run(capsys, "verify", "--spec", spec("bad_syntax.toml"))
    assert code == 2 and out == ""
    assert "[plectic] omega" in err and "offset 9" in err


def test_missing_spec_exits_two(capsys):
    assert run(capsys, "verify", "--spec", spec("absent.toml"))[0] == 2


@pytest.mark.parametrize("kind, expected", [("hemi", "0"), ("semi", "1 * dy")])
def test_bracket_of_worked_pair(capsys, kind, expected):
    code, out, _ = run(capsys, "bracket", "--spec", spec("volume3.toml"), "--kind", kind, "--f", "F", "--g", "G")
    assert code == 0 and out.splitlines()[0] == expected


def test_bracket_at_a_point(capsys):
    code, out, _ = run(
        capsys, "bracket", "--spec", spec("volume3.toml"), "--kind", "semi", "--f", "F", "--g", "G", "--point", "x=1,y=2,z=3"
    )
    assert code == 0 and "dy = 1.000000000000e+00" in out


def test_bracket_of_non_hamiltonian_form(capsys):
    code, out, _ = run(capsys, "bracket", "--spec", spec("degenerate4.toml"), "--kind", "semi", "--f", "F", "--g", "G")
    assert code == 1
    assert out.startswith("NotHamiltonian form=F max_residual=1.000e+00 witness=(w=")


def test_bracket_of_unknown_name(capsys):
    code, _, err = run(capsys, "bracket", "--spec", spec("volume3.toml"), "--kind", "semi", "--f", "Q", "--g", "G")
    assert code == 2 and "Q" in err


def test_lie2_command(capsys):
    code, out, _ = run(capsys, "lie2", "--spec", spec("volume3.toml"))
    assert code == 0
    assert "# coherence hemistrict" in out and "# homomorphism semistrict->hemistrict" in out
    assert set(statuses(out)) == {"status=proved"}


def test_report_to_file(capsys, tmp_path):
    target = tmp_path / "report.txt"
    code, out, _ = run(capsys, "verify", "--spec", spec("volume3.toml"), "--out", str(target))
    assert code == 0 and out == ""
    assert "diagram=hexagon status=proved" in target.read_text()


def write_spec(tmp_path, body):
    path = tmp_path / "s.toml"
    path.write_text(body)
    return str(path)


SMALL_STANDING = """
[string]
d = 2
nsigma = 32
dt = 0.09817477042468103
steps = 64
every = 8
preset = "standing:0.1,1"
"""


def test_string_sim_csv(capsys, tmp_path):
    code, out, _ = run(capsys, "string", "sim", "--spec", write_spec(tmp_path, SMALL_STANDING))
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "t,total_energy,linf_error,bivector_residual"
    rows = [l for l in lines[1:] if not l.startswith("#")]
    assert len(rows) == 9
    t, energy, err, res = map(float, rows[-1].split(","))
    assert t == pytest.approx(2 * np.pi) and err < 5e-2
    summary = next(l for l in lines if l.startswith("# summary"))
    assert "energy_drift=" in summary and "max_linf_error=" in summary


def test_string_sim_refinement_orders(capsys, tmp_path):
    code, out, _ = run(capsys, "string", "sim", "--spec", write_spec(tmp_path, SMALL_STANDING), "--refine", "2")
    assert code == 0
    refine = [l for l in out.splitlines() if l.startswith("# refine")]
    assert len(refine) == 3
    for line in refine[1:]:
        fields = dict(kv.split("=") for kv in line[2:].split()[1:])
        assert 1.8 <= float(fields["order"]) <= 2.2


def test_string_residual_refinement(capsys, tmp_path):
    code, out, _ = run(capsys, "string", "residual", "--spec", write_spec(tmp_path, SMALL_STANDING), "--refine", "2")
    assert code == 0 and out.startswith("t,bivector_residual\n")
    orders = [float(l.rsplit("order=", 1)[1]) for l in out.splitlines() if l.startswith("# refine") and "order=-" not in l]
    assert len(orders) == 2 and all(1.8 <= o <= 2.2 for o in orders)


def test_string_sim_with_bfield_runs_crosscheck(capsys, tmp_path):
    # the 1e-3 crosscheck tolerance needs the criterion's resolution, N=128
    body = (
        SMALL_STANDING.replace("d = 2", "d = 3")
        .replace("nsigma = 32", "nsigma = 128")
        .replace("dt = 0.09817477042468103", "dt = 0.02454369260617026")
        .replace("steps = 64", "steps = 256")
        .replace('"standing:0.1,1"', '"helix:0.5"')
    )
    code, out, _ = run(capsys, "string", "sim", "--spec", write_spec(tmp_path, body), "--bfield")
    assert code == 0
    check = next(l for l in out.splitlines() if "check=crosscheck" in l)
    assert "status=pass" in check


def test_cfl_violation_exits_two(capsys, tmp_path):
    body = SMALL_STANDING.replace("dt = 0.09817477042468103", "dt = 0.5")
    code, _, err = run(capsys, "string", "sim", "--spec", write_spec(tmp_path, body))
    assert code == 2 and "dsigma" in err


def test_dalembert_profile(capsys, tmp_path):
    sigma = np.arange(32) * 2 * np.pi / 32
    np.savetxt(tmp_path / "profile.csv", 0.05 * np.sin(2 * sigma) + 0.02 * np.cos(sigma))
    body = SMALL_STANDING.replace('"standing:0.1,1"', '"dalembert:profile.csv"')
    code, out, _ = run(capsys, "string", "sim", "--spec", write_spec(tmp_path, body))
    assert code == 0
    summary = next(l for l in out.splitlines() if l.startswith("# summary"))
    assert float(summary.split("max_linf_error=")[1]) < 5e-2


def test_dalembert_profile_length_must_match(capsys, tmp_path):
    np.savetxt(tmp_path / "profile.csv", np.zeros(10))
    body = SMALL_STANDING.replace('"standing:0.1,1"', '"dalembert:profile.csv"')
    code, _, err = run(capsys, "string", "sim", "--spec", write_spec(tmp_path, body))
    assert code == 2 and "nsigma" in err


def test_helix_needs_three_dimensions(capsys, tmp_path):
    body = SMALL_STANDING.replace('"standing:0.1,1"', '"helix:0.5"')
    assert run(capsys, "string", "sim", "--spec", write_spec(tmp_path, body))[0] == 2


def test_outputs_are_byte_identical(capsys, tmp_path):
    path = write_spec(tmp_path, SMALL_STANDING)
    first = run(capsys, "string", "sim", "--spec", path)[1]
    second = run(capsys, "string", "sim", "--spec", path)[1]
    assert first == second
    a = run(capsys, "verify", "--spec", spec("volume3.toml"), "--seed", "4")[1]
    b = run(capsys, "verify", "--spec", spec("volume3.toml"), "--seed", "4")[1]
    assert a == b
