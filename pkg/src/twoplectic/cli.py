"""Command-line entry point.

Exit codes: 0 when every check passes, 1 on any FAIL (or a non-finite
simulation), 2 on spec errors and CFL violations.  Reports and CSV are
deterministic for a fixed spec and seed; wall time goes to stderr.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Callable, TextIO

import numpy as np

from .expr import SampleConfig
from .forms import DifferentialForm, format_field, format_form
from .lie2 import (
    Battery,
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
    volume_battery,
)
from .plectic import (
    CertificationError,
    NotHamiltonianError,
    PlecticStructure,
    check_closed,
    check_nondegenerate,
    hamiltonian_vector_field,
    hemi_bracket,
    semi_bracket,
)
from .specfile import SpecError, SpecFile, StringConfig, load_spec
from .strings import (
    BField,
    CFLError,
    NonFiniteError,
    SimulationRow,
    SolutionCriterion,
    StringPhaseSpace,
    WorldsheetState,
    build_phase_space,
    euler_lagrange_crosscheck,
    helix_state,
    legendre_momenta,
    right_mover_state,
    shift_periodic,
    simulate,
    standing_wave_state,
)

DEFAULT_BFIELD = "u0 * du1^du2"
CROSSCHECK_TOL = 1e-3
EXIT_OK, EXIT_FAIL, EXIT_SPEC = 0, 1, 2


# ---------------------------------------------------------------------------
# Output helpers


@contextmanager
def _output(path: str | None):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _num(x: float) -> str:
    return format(x, ".12e")


def _write_report(out: TextIO, report: Report, key: str = "diagram") -> bool:
    out.write(report.format(key) + "\n")
    return report.ok


def _check_line(name: str, status: str, residual: float, witness=None, extra: str = "") -> str:
    line = f"check={name} status={status} max_residual={residual:.3e} witness={format_point(witness)}"
    return line + (f" {extra}" if extra else "")


# ---------------------------------------------------------------------------
# verify / lie2 / bracket


def _require_plectic(spec: SpecFile) -> PlecticStructure:
    if spec.plectic is None:
        raise SpecError("a [plectic] section is required", str(spec.path or "<spec>"))
    return spec.plectic


def _battery(spec: SpecFile, sampler: SampleConfig) -> Battery:
    """Battery from ``[forms]`` when it names at least four Hamiltonian
    candidates, otherwise the preset's default."""
    P = _require_plectic(spec)
    chains = {k: f for k, f in spec.forms.items() if f.degree == P.n - 1}
    functions = tuple(f for f in spec.forms.values() if f.degree == 0)
    if len(chains) >= 4:
        solved = []
        for name, F in chains.items():
            try:
                solved.append(hamiltonian_vector_field(P, F, candidate=spec.vectors.get(name), sampler=sampler))
            except NotHamiltonianError as exc:
                raise SpecError(
                    f"form is not Hamiltonian: residual {exc.residual:.3e} at {format_point(exc.point)}",
                    f"[forms] {name}",
                ) from None
            except CertificationError as exc:
                raise SpecError(str(exc), f"[forms] {name}") from None
        if len(functions) < 2:
            names = P.chart.coords
            functions = (
                DifferentialForm.function(P.chart, names[0]),
                DifferentialForm.function(P.chart, f"{names[0]}*{names[1 % len(names)]}"),
            )
        return Battery(tuple(solved), functions, tuple(chains))
    if spec.string_space is not None:
        return string_battery(spec.string_space, sampler)
    if spec.preset == "volume3":
        return volume_battery(P)
    try:
        return default_battery(P, sampler)
    except ValueError as exc:
        raise SpecError(f"{exc}; name at least four forms in [forms]", "[forms]") from None


def _lie2_reports(P: PlecticStructure, battery: Battery, sampler: SampleConfig) -> list[Report]:
    reports = [verify_coherence(build_hemistrict(P, sampler), battery, sampler)]
    reports.append(verify_coherence(build_semistrict(P, sampler), battery, sampler))
    forward, backward = build_isomorphism(P, sampler)
    hom = verify_homomorphism(forward, battery, sampler)
    hom.suite = "homomorphism hemistrict->semistrict"
    reports.append(hom)
    hom = verify_homomorphism(backward, battery, sampler)
    hom.suite = "homomorphism semistrict->hemistrict"
    reports.append(hom)
    composites = Report("composites")
    for first, second, name in ((forward, backward, "composite-hsh"), (backward, forward, "composite-shs")):
        result = composite_homotopy_check(first, second, battery, sampler)
        result.name = name
        composites.checks.append(result)
    reports.append(composites)
    return reports


def _certify_lines(P: PlecticStructure, sampler: SampleConfig, jobs: int) -> tuple[list[str], bool]:
    closed = check_closed(P.omega, sampler)
    cert = check_nondegenerate(P, sampler, jobs=jobs)
    lines = [
        _check_line("closed", closed.status, closed.max_residual, getattr(closed, "point", None)),
        _check_line(
            "nondegenerate",
            cert.status,
            0.0 if cert.ok else cert.smallest,
            cert.witness,
            f"min_singular_value={cert.smallest:.6e} points={cert.points}"
            + ("" if cert.ok else f" kernel={list(cert.null_vector)}"),
        ),
    ]
    P.closed, P.certificate = closed, cert
    return lines, closed.ok and cert.ok


def cmd_verify(spec: SpecFile, args, out: TextIO) -> int:
    P = _require_plectic(spec)
    sampler = spec.check.sampler()
    out.write(f"# plectic {P.label or 'omega'} n={P.n} dim={P.chart.dim}\n")
    out.write(f"# omega = {format_form(P.omega)}\n")
    lines, ok = _certify_lines(P, sampler, spec.check.jobs)
    out.write("\n".join(lines) + "\n")
    if not ok:
        return EXIT_FAIL
    if P.n != 2:
        out.write(f"# bracket suites apply to 2-plectic structures; this one is {P.n}-plectic\n")
        return EXIT_OK
    battery = _battery(spec, sampler)
    out.write("# battery " + ", ".join(battery.labels) + "\n")
    ok = _write_report(out, verify_bracket_laws(P, battery, sampler), key="check")
    for report in _lie2_reports(P, battery, sampler):
        ok = _write_report(out, report) and ok
    return EXIT_OK if ok else EXIT_FAIL


def cmd_lie2(spec: SpecFile, args, out: TextIO) -> int:
    P = _require_plectic(spec)
    sampler = spec.check.sampler()
    lines, ok = _certify_lines(P, sampler, spec.check.jobs)
    if not ok:
        out.write("\n".join(lines) + "\n")
        return EXIT_FAIL
    if P.n != 2:
        raise SpecError(f"Lie 2-algebras need a 2-plectic structure, got n = {P.n}", "[plectic]")
    battery = _battery(spec, sampler)
    out.write("# battery " + ", ".join(battery.labels) + "\n")
    ok = True
    for report in _lie2_reports(P, battery, sampler):
        ok = _write_report(out, report) and ok
    return EXIT_OK if ok else EXIT_FAIL


def _parse_point(text: str, P: PlecticStructure) -> dict[str, float]:
    point = {}
    for item in text.split(","):
        name, sep, value = item.partition("=")
        name = name.strip()
        if not sep or name not in P.chart:
            raise SpecError(f"bad point entry {item!r}", "--point")
        try:
            point[name] = float(value)
        except ValueError:
            raise SpecError(f"bad value in {item!r}", "--point") from None
    missing = [c for c in P.chart.coords if c not in point]
    if missing:
        raise SpecError(f"missing coordinates {', '.join(missing)}", "--point")
    return point


def cmd_bracket(spec: SpecFile, args, out: TextIO) -> int:
    P = _require_plectic(spec)
    sampler = spec.check.sampler()
    point = _parse_point(args.point, P) if args.point else None
    solved = []
    for name in (args.f, args.g):
        if name not in spec.forms:
            raise SpecError(f"no form named {name!r}", "[forms]")
        try:
            solved.append(hamiltonian_vector_field(P, spec.forms[name], candidate=spec.vectors.get(name), sampler=sampler))
        except NotHamiltonianError as exc:
            out.write(
                f"NotHamiltonian form={name} max_residual={exc.residual:.3e} witness={format_point(exc.point)}\n"
            )
            return EXIT_FAIL
    bracket = hemi_bracket if args.kind == "hemi" else semi_bracket
    result = bracket(P, *solved, sampler)
    out.write(format_form(result.form) + "\n")
    if point is not None:
        out.write(f"# vector_field = {format_field(result.v)}\n")
        out.write(f"# at {format_point(point)}\n")
        for idx, coefficient in sorted(result.form.terms.items()):
            basis = "^".join(f"d{P.chart.coords[i]}" for i in idx) or "1"
            out.write(f"{basis} = {_num(coefficient.evaluate(point))}\n")
        values = result.v.evaluate(point)
        out.write("v = [" + ", ".join(_num(x) for x in values) + "]\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# string


def _preset_value(text: str, count_min: int, count_max: int, where: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",")] if text else []
    except ValueError:
        raise SpecError(f"bad preset arguments {text!r}", where) from None
    if not count_min <= len(values) <= count_max:
        raise SpecError(f"expected {count_min} to {count_max} preset arguments", where)
    return values


def initial_data(
    cfg: StringConfig, n: int, base_dir: Path, B: BField | None
) -> tuple[WorldsheetState, Callable[[float], np.ndarray] | None]:
    """Initial state for ``cfg.preset`` on an ``n``-point grid, with the
    exact solution when one is known for the free string."""
    kind, _, rest = cfg.preset.partition(":")
    where = "[string] preset"
    if kind == "standing":
        A, k = _preset_value(rest, 2, 2, where)
        if k != int(k) or k < 1:
            raise SpecError("the wave number must be a positive integer", where)
        k = int(k)
        state = standing_wave_state(cfg.d, n, A, k)
        exact = None if B else (lambda t: standing_wave_state(cfg.d, n, A, k, t=t).phi)
        return state, exact
    if kind == "dalembert":
        path = base_dir / rest
        try:
            profile = np.loadtxt(path, delimiter=",", ndmin=1, comments="#")
        except (OSError, ValueError) as exc:
            raise SpecError(f"cannot read profile {str(path)!r}: {exc}", where) from None
        if profile.ndim != 1:
            raise SpecError("the profile file holds one value per line", where)
        if profile.shape[0] != cfg.nsigma:
            raise SpecError(f"profile has {profile.shape[0]} samples, nsigma is {cfg.nsigma}", where)
        if n != cfg.nsigma:
            profile = _resample(profile, n)
        state = right_mover_state(cfg.d, profile)
        a = 1 if cfg.d >= 2 else 0

        def exact(t):
            phi = np.zeros((cfg.d, n))
            phi[a] = shift_periodic(profile, t)
            return phi

        return state, None if B else exact
    if kind == "helix":
        (A,) = _preset_value(rest, 0, 1, where) or [0.5]
        try:
            return helix_state(cfg.d, n, A), None
        except ValueError as exc:
            raise SpecError(str(exc), where) from None
    raise SpecError(f"unknown initial-data preset {cfg.preset!r}", where)


def _resample(profile: np.ndarray, n: int) -> np.ndarray:
    # trigonometric interpolation onto a finer periodic grid
    m = profile.shape[0]
    coeffs = np.fft.rfft(profile)
    return np.fft.irfft(coeffs, n) * (n / m)


def _string_setup(spec: SpecFile, args) -> tuple[StringConfig, StringPhaseSpace, BField | None]:
    cfg = spec.string
    if cfg is None:
        raise SpecError("a [string] section is required", str(spec.path or "<spec>"))
    literal = args.bfield if args.bfield is not None else cfg.bfield
    B = None
    if literal is not None:
        try:
            B = BField.from_literal(literal, cfg.d)
        except ValueError as exc:
            raise SpecError(str(exc), "--bfield" if args.bfield is not None else "[string] bfield") from None
    if spec.string_space is not None and spec.string_space.d == cfg.d:
        S = spec.string_space
    else:
        S = build_phase_space(cfg.d)
    return cfg, S, B


def _level(cfg: StringConfig, i: int) -> tuple[int, float, int, int]:
    f = 2**i
    return cfg.nsigma * f, cfg.dt / f, cfg.steps * f, cfg.every * f


def _orders(values: list[float]) -> list[float | None]:
    out: list[float | None] = [None]
    for a, b in zip(values, values[1:]):
        out.append(math.log2(a / b) if a > 0 and b > 0 else None)
    return out


def _fmt_order(x: float | None) -> str:
    return "-" if x is None else f"{x:.4f}"


def _energy_drift(rows: list[SimulationRow]) -> float:
    E0 = rows[0].total_energy
    scale = abs(E0) if E0 != 0 else 1.0
    return max(abs(r.total_energy - E0) for r in rows) / scale


def cmd_string_sim(spec: SpecFile, args, out: TextIO) -> int:
    cfg, S, B = _string_setup(spec, args)
    initial, exact = initial_data(cfg, cfg.nsigma, spec.base_dir, B)
    rows = simulate(initial, cfg.dt, cfg.steps, S, B, cfg.every, exact)
    summary: list[str] = []
    with _output(args.out) as csv:
        csv.write("t,total_energy,linf_error,bivector_residual\n")
        for r in rows:
            err = "" if r.linf_error is None else _num(r.linf_error)
            csv.write(f"{_num(r.t)},{_num(r.total_energy)},{err},{_num(r.bivector_residual)}\n")
    status = EXIT_OK
    summary.append(
        f"summary steps={cfg.steps} t_final={_num(rows[-1].t)} energy_initial={_num(rows[0].total_energy)} "
        f"energy_drift={_num(_energy_drift(rows))} final_residual={_num(rows[-1].bivector_residual)}"
        + ("" if exact is None else f" max_linf_error={_num(max(r.linf_error for r in rows))}")
    )
    if B is not None:
        report = euler_lagrange_crosscheck(initial, cfg.dt, cfg.steps, B)
        ok = report.ok(CROSSCHECK_TOL)
        summary.append(
            f"check=crosscheck status={'pass' if ok else 'FAIL'} max_difference={report.max_difference:.3e} "
            f"tol={CROSSCHECK_TOL:.0e}"
        )
        if not ok:
            status = EXIT_FAIL
    if args.refine:
        errors, residuals = [], []
        for i in range(args.refine + 1):
            n, dt, steps, every = _level(cfg, i)
            state, ex = initial_data(cfg, n, spec.base_dir, B)
            level_rows = simulate(state, dt, steps, S, B, every, ex)
            errors.append(None if ex is None else max(r.linf_error for r in level_rows))
            residuals.append(max(r.bivector_residual for r in level_rows))
        err_orders = _orders(errors) if errors[0] is not None else [None] * len(errors)
        res_orders = _orders(residuals)
        for i in range(args.refine + 1):
            n, dt, _, _ = _level(cfg, i)
            err = "-" if errors[i] is None else _num(errors[i])
            summary.append(
                f"refine nsigma={n} dt={_num(dt)} max_linf_error={err} order={_fmt_order(err_orders[i])} "
                f"max_residual={_num(residuals[i])} residual_order={_fmt_order(res_orders[i])}"
            )
    prefix = "# " if args.out is None else ""
    sys.stdout.write("".join(prefix + line + "\n" for line in summary))
    return status


def _exact_sections(cfg: StringConfig, n: int, dt: float, steps: int, every: int):
    """Sections of the exact standing wave at the sample times and one step
    to either side."""
    _, _, rest = cfg.preset.partition(":")
    A, k = _preset_value(rest, 2, 2, "[string] preset")
    out = []
    for j in list(range(0, steps + 1, every)) + ([steps] if steps % every else []):
        t = j * dt
        out.append(tuple(legendre_momenta(standing_wave_state(cfg.d, n, A, int(k), t=t + s * dt)) for s in (-1, 0, 1)))
    return out


def _residual_rows(spec, cfg, S, B, n, dt, steps, every) -> list[tuple[float, float]]:
    if cfg.preset.startswith("standing") and B is None:
        criterion = SolutionCriterion(S)
        return [(sec[1].t, criterion(*sec)) for sec in _exact_sections(cfg, n, dt, steps, every)]
    state, _ = initial_data(cfg, n, spec.base_dir, B)
    return [(r.t, r.bivector_residual) for r in simulate(state, dt, steps, S, B, every)]


def cmd_string_residual(spec: SpecFile, args, out: TextIO) -> int:
    cfg, S, B = _string_setup(spec, args)
    rows = _residual_rows(spec, cfg, S, B, cfg.nsigma, cfg.dt, cfg.steps, cfg.every)
    with _output(args.out) as csv:
        csv.write("t,bivector_residual\n")
        for t, r in rows:
            csv.write(f"{_num(t)},{_num(r)}\n")
    summary = [f"summary max_residual={_num(max(r for _, r in rows))}"]
    if args.refine:
        residuals = []
        for i in range(args.refine + 1):
            residuals.append(max(r for _, r in _residual_rows(spec, cfg, S, B, *_level(cfg, i))))
        for i, order in enumerate(_orders(residuals)):
            summary.append(f"refine nsigma={_level(cfg, i)[0]} max_residual={_num(residuals[i])} order={_fmt_order(order)}")
    prefix = "# " if args.out is None else ""
    sys.stdout.write("".join(prefix + line + "\n" for line in summary))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", required=True, metavar="FILE", help="TOML spec file")
    common.add_argument("--samples", type=int, metavar="N", help="sample points per zero test (default 20)")
    common.add_argument("--tol", type=float, metavar="X", help="zero-test tolerance (default 1e-9)")
    common.add_argument("--seed", type=int, metavar="S", help="sampling seed (default 0)")
    common.add_argument("--jobs", type=int, metavar="N", help="threads for sample-point checks")
    common.add_argument("--out", metavar="FILE", help="write the report or CSV here")

    parser = argparse.ArgumentParser(prog="twoplectic", description="2-plectic geometry checks and string simulation")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[common], help="certify omega, bracket laws and Lie 2-algebra coherence")
    sub.add_parser("lie2", parents=[common], help="Lie 2-algebra coherence and homomorphism checks")
    br = sub.add_parser("bracket", parents=[common], help="print the bracket of two named forms")
    br.add_argument("--kind", choices=["hemi", "semi"], required=True)
    br.add_argument("--f", required=True, metavar="NAME")
    br.add_argument("--g", required=True, metavar="NAME")
    br.add_argument("--point", metavar="x=1,y=2,...", help="also evaluate the result here")

    string = sub.add_parser("string", help="worldsheet simulation")
    string_sub = string.add_subparsers(dest="string_command", required=True)
    for name, help_text in (("sim", "integrate and write CSV"), ("residual", "solution-criterion residual")):
        p = string_sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--refine", type=int, default=0, metavar="K", help="also run K grid refinements")
        p.add_argument(
            "--bfield",
            nargs="?",
            const=DEFAULT_BFIELD,
            metavar="LITERAL",
            help=f"Kalb-Ramond 2-form over u-coordinates (bare flag: {DEFAULT_BFIELD!r})",
        )
    return parser


COMMANDS = {
    "verify": cmd_verify,
    "lie2": cmd_lie2,
    "bracket": cmd_bracket,
    ("string", "sim"): cmd_string_sim,
    ("string", "residual"): cmd_string_residual,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    key = ("string", args.string_command) if args.command == "string" else args.command
    started = time.perf_counter()
    try:
        if getattr(args, "refine", 0) < 0:
            raise SpecError("--refine must be non-negative", "--refine")
        overrides = {"samples": args.samples, "tol": args.tol, "seed": args.seed, "jobs": args.jobs}
        spec = load_spec(args.spec, overrides)
        if key in ("verify", "lie2", "bracket"):
            with _output(args.out) as out:
                status = COMMANDS[key](spec, args, out)
        else:
            status = COMMANDS[key](spec, args, sys.stdout)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        status = EXIT_SPEC
    except CFLError as exc:
        print(f"error: {exc}", file=sys.stderr)
        status = EXIT_SPEC
    except NonFiniteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        status = EXIT_FAIL
    print(f"wall_time={time.perf_counter() - started:.3f}s", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
