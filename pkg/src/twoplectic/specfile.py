"""Loading of TOML spec files.

Sections: ``[plectic]`` (``chart`` and ``omega``, or ``preset``),
``[forms]`` (named form literals), ``[vectors]`` (named component lists),
``[string]`` (worldsheet simulation) and ``[check]`` (sampling settings).
Every problem is reported as :class:`SpecError` with a location.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .expr import SampleConfig
from .forms import Chart, DifferentialForm, VectorField, parse_form
from .plectic import (
    NotPlecticError,
    PlecticStructure,
    make_cojet_phase_space,
    make_exterior_power_phase_space,
    make_lie_algebra_plectic,
    make_volume_plectic,
    su2_structure_constants,
)

__all__ = ["SpecError", "SpecFile", "StringConfig", "CheckConfig", "load_spec", "parse_spec", "build_preset"]

SECTIONS = {
    "plectic": {"chart", "omega", "n", "preset"},
    "forms": None,
    "vectors": None,
    "string": {"d", "nsigma", "dt", "steps", "preset", "bfield", "every"},
    "check": {"samples", "tol", "seed", "jobs"},
}


class SpecError(ValueError):
    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


@dataclass(frozen=True)
class CheckConfig:
    samples: int = 20
    tol: float = 1e-9
    seed: int = 0
    jobs: int = 1

    def sampler(self) -> SampleConfig:
        return SampleConfig(points=self.samples, tol=self.tol, seed=self.seed)


@dataclass(frozen=True)
class StringConfig:
    d: int
    nsigma: int
    dt: float
    steps: int
    preset: str
    bfield: str | None = None
    every: int = 1


@dataclass
class SpecFile:
    path: Path | None
    plectic: PlecticStructure | None = None
    preset: str | None = None
    forms: dict[str, DifferentialForm] = field(default_factory=dict)
    vectors: dict[str, VectorField] = field(default_factory=dict)
    string: StringConfig | None = None
    check: CheckConfig = field(default_factory=CheckConfig)
    string_space: Any = None

    @property
    def base_dir(self) -> Path:
        return self.path.parent if self.path else Path.cwd()


def _type(value, kind, where: str):
    if kind is int and isinstance(value, bool):
        raise SpecError("expected an integer", where)
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, kind):
        raise SpecError(f"expected {kind.__name__}, got {type(value).__name__}", where)
    return value


def _preset_args(text: str, count: int, where: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",")]
    except ValueError:
        raise SpecError(f"preset arguments must be integers: {text!r}", where) from None
    if len(values) != count:
        raise SpecError(f"expected {count} preset arguments, got {len(values)}", where)
    return values


def build_preset(preset: str, sampler: SampleConfig | None = None, where: str = "[plectic] preset"):
    """Plectic structure for a preset name; ``string:d`` also returns the
    string phase space as the second element."""
    name, _, args = preset.partition(":")
    try:
        if name == "volume3" and not args:
            return make_volume_plectic(3, sampler), None
        if name == "volume":
            (m,) = _preset_args(args, 1, where)
            return make_volume_plectic(m, sampler), None
        if name == "extpower":
            d, n = _preset_args(args, 2, where)
            return make_exterior_power_phase_space(d, n, sampler), None
        if name == "cojet":
            n, d = _preset_args(args, 2, where)
            return make_cojet_phase_space(n, d, sampler), None
        if name == "su2" and not args:
            kappa = [[-2 if i == j else 0 for j in range(3)] for i in range(3)]
            P = make_lie_algebra_plectic(su2_structure_constants(), kappa).certify(sampler)
            P.label = "su2"
            return P, None
        if name == "string":
            from .strings import build_phase_space

            (d,) = _preset_args(args, 1, where)
            S = build_phase_space(d)
            return S.plectic, S
    except NotPlecticError as exc:
        raise SpecError(f"preset {preset!r} is not plectic: {exc}", where) from None
    except ValueError as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(str(exc), where) from None
    raise SpecError(f"unknown preset {preset!r}", where)


def _parse_check(table: dict) -> CheckConfig:
    kw = {}
    for key, kind in (("samples", int), ("tol", float), ("seed", int), ("jobs", int)):
        if key in table:
            kw[key] = _type(table[key], kind, f"[check] {key}")
    cfg = CheckConfig(**kw)
    if cfg.samples < 1:
        raise SpecError("samples must be positive", "[check] samples")
    if not cfg.tol > 0:
        raise SpecError("tol must be positive", "[check] tol")
    if cfg.jobs < 1:
        raise SpecError("jobs must be positive", "[check] jobs")
    return cfg


def _parse_string(table: dict) -> StringConfig:
    missing = [k for k in ("d", "nsigma", "dt", "steps", "preset") if k not in table]
    if missing:
        raise SpecError(f"missing keys {', '.join(missing)}", "[string]")
    cfg = StringConfig(
        d=_type(table["d"], int, "[string] d"),
        nsigma=_type(table["nsigma"], int, "[string] nsigma"),
        dt=_type(table["dt"], float, "[string] dt"),
        steps=_type(table["steps"], int, "[string] steps"),
        preset=_type(table["preset"], str, "[string] preset"),
        bfield=_type(table["bfield"], str, "[string] bfield") if "bfield" in table else None,
        every=_type(table.get("every", 1), int, "[string] every"),
    )
    if cfg.d < 1:
        raise SpecError("d must be at least 1", "[string] d")
    if cfg.nsigma < 8:
        raise SpecError("nsigma must be at least 8", "[string] nsigma")
    if cfg.steps < 1 or cfg.every < 1:
        raise SpecError("steps and every must be positive", "[string]")
    kind = cfg.preset.partition(":")[0]
    if kind not in ("standing", "dalembert", "helix"):
        raise SpecError(f"unknown initial-data preset {cfg.preset!r}", "[string] preset")
    return cfg


def parse_spec(text: str, path: Path | None = None, overrides: dict | None = None) -> SpecFile:
    """Parse and validate spec text; ``overrides`` replaces ``[check]``
    entries (command-line flags win over the file)."""
    source = str(path) if path else "<spec>"
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise SpecError(str(exc), source) from None
    for section, value in data.items():
        if section not in SECTIONS:
            raise SpecError(f"unknown section [{section}]", source)
        if not isinstance(value, dict):
            raise SpecError(f"[{section}] must be a table", source)
        allowed = SECTIONS[section]
        if allowed is not None:
            for key in value:
                if key not in allowed:
                    raise SpecError(f"unknown key {key!r}", f"[{section}]")

    spec = SpecFile(path)
    spec.check = _parse_check(data.get("check", {}))
    if overrides:
        spec.check = replace(spec.check, **{k: v for k, v in overrides.items() if v is not None})
    sampler = spec.check.sampler()

    plectic = data.get("plectic")
    if plectic is not None:
        if "preset" in plectic:
            if "chart" in plectic or "omega" in plectic:
                raise SpecError("give either preset or chart and omega", "[plectic]")
            spec.preset = _type(plectic["preset"], str, "[plectic] preset")
            spec.plectic, spec.string_space = build_preset(spec.preset, sampler)
        else:
            if "chart" not in plectic or "omega" not in plectic:
                raise SpecError("needs chart and omega, or preset", "[plectic]")
            coords = _type(plectic["chart"], list, "[plectic] chart")
            if not coords or not all(isinstance(c, str) for c in coords):
                raise SpecError("chart must be a non-empty list of names", "[plectic] chart")
            try:
                chart = Chart(coords)
            except ValueError as exc:
                raise SpecError(str(exc), "[plectic] chart") from None
            omega = _form(plectic["omega"], chart, "[plectic] omega")
            if "n" in plectic and _type(plectic["n"], int, "[plectic] n") != omega.degree - 1:
                raise SpecError(f"n = {plectic['n']} but omega has degree {omega.degree}", "[plectic] n")
            spec.plectic = PlecticStructure(omega, label=source)
    chart = spec.plectic.chart if spec.plectic else None

    for name, literal in data.get("forms", {}).items():
        if chart is None:
            raise SpecError("[forms] needs a [plectic] chart", f"[forms] {name}")
        spec.forms[name] = _form(literal, chart, f"[forms] {name}")
    for name, comps in data.get("vectors", {}).items():
        where = f"[vectors] {name}"
        if chart is None:
            raise SpecError("[vectors] needs a [plectic] chart", where)
        comps = _type(comps, list, where)
        if len(comps) != chart.dim:
            raise SpecError(f"expected {chart.dim} components, got {len(comps)}", where)
        values = {}
        for i, c in enumerate(comps):
            if isinstance(c, bool) or not isinstance(c, (str, int)):
                raise SpecError("components are expression strings or integers", where)
            values[i] = _form(str(c), chart, where, degree=0).scalar()
        spec.vectors[name] = VectorField(chart, values)

    if "string" in data:
        spec.string = _parse_string(data["string"])
        if spec.string.bfield is not None:
            target = Chart([f"u{a}" for a in range(spec.string.d)])
            _form(spec.string.bfield, target, "[string] bfield", degree=2)
    return spec


def _form(literal, chart: Chart, where: str, degree: int | None = None) -> DifferentialForm:
    literal = _type(literal, str, where)
    try:
        return parse_form(literal, chart, degree)
    except ValueError as exc:
        raise SpecError(f"{exc} in {literal!r}", where) from None


def load_spec(path: str | Path, overrides: dict | None = None) -> SpecFile:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecError(f"cannot read spec: {exc.strerror}", str(path)) from None
    return parse_spec(text, path, overrides)
