"""Exterior calculus on a single coordinate chart.

Forms are stored sparsely over strictly increasing multi-indices with
:class:`~twoplectic.expr.NormalForm` coefficients, so identities such as
``d(d f) == 0`` hold exactly rather than up to round-off.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .expr import (
    Expr,
    ExprSyntaxError,
    Sum,
    NormalForm,
    SampleConfig,
    Verdict,
    _Parser,
    is_zero_many,
    normalize,
    parse,
    to_text,
)

__all__ = [
    "Chart",
    "ChartMismatchError",
    "DegreeError",
    "DifferentialForm",
    "VectorField",
    "ChartMap",
    "wedge",
    "exterior_derivative",
    "interior_product",
    "contract",
    "lie_derivative",
    "lie_bracket",
    "pullback",
    "evaluate_form",
    "is_zero_form",
    "is_zero_field",
    "parse_form",
    "format_form",
    "permutation_sign",
]


class ChartMismatchError(ValueError):
    pass


class DegreeError(ValueError):
    pass


@dataclass(frozen=True)
class Chart:
    """Ordered coordinate names of a single chart."""

    coords: tuple[str, ...]

    def __init__(self, coords: Iterable[str]):
        coords = tuple(coords)
        if not coords:
            raise ValueError("a chart needs at least one coordinate")
        if any(not c for c in coords):
            raise ValueError("coordinate names must be nonempty")
        if len(set(coords)) != len(coords):
            raise ValueError(f"duplicate coordinate names in {coords}")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "_index", {c: i for i, c in enumerate(coords)})

    @property
    def dim(self) -> int:
        return len(self.coords)

    def __len__(self) -> int:
        return len(self.coords)

    def __iter__(self):
        return iter(self.coords)

    def __contains__(self, name) -> bool:
        return name in self._index

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ChartMismatchError(f"{name!r} is not a coordinate of {self.coords}") from None

    def differential(self, name: str) -> "DifferentialForm":
        return DifferentialForm(self, 1, {(self.index(name),): 1})

    def partial(self, name: str) -> "VectorField":
        return VectorField(self, {self.index(name): 1})

    def function(self, value) -> "DifferentialForm":
        return DifferentialForm.function(self, value)

    def volume(self) -> "DifferentialForm":
        return DifferentialForm(self, self.dim, {tuple(range(self.dim)): 1})


def permutation_sign(seq: Sequence[int]) -> int:
    """Sign of the permutation sorting ``seq``; 0 if ``seq`` repeats."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def _coerce(chart: Chart, value) -> NormalForm:
    if isinstance(value, str):
        value = parse(value, chart.coords)
    nf = normalize(value) if not isinstance(value, NormalForm) else value
    stray = nf.variables() - set(chart.coords)
    if stray:
        raise ChartMismatchError(f"coefficient uses {sorted(stray)} outside chart {chart.coords}")
    return nf


def _same_chart(*objects) -> Chart:
    chart = objects[0].chart
    for o in objects[1:]:
        if o.chart != chart:
            raise ChartMismatchError(f"charts differ: {chart.coords} vs {o.chart.coords}")
    return chart


class DifferentialForm:
    """A degree-``k`` form on ``chart``.

    ``terms`` maps index tuples to coefficients; indices in any order are
    sorted with the permutation sign, repeated indices drop out, and zero
    coefficients are pruned.  Instances are immutable.
    """

    __slots__ = ("chart", "degree", "_terms")

    def __init__(self, chart: Chart, degree: int, terms: Mapping[Sequence[int], object] | None = None):
        if not 0 <= degree:
            raise DegreeError(f"negative degree {degree}")
        self.chart = chart
        self.degree = degree
        store: dict[tuple[int, ...], NormalForm] = {}
        for idx, value in (terms or {}).items():
            idx = tuple(idx)
            if len(idx) != degree:
                raise DegreeError(f"index {idx} does not have length {degree}")
            if any(not 0 <= i < chart.dim for i in idx):
                raise ChartMismatchError(f"index {idx} outside chart of dimension {chart.dim}")
            sign = permutation_sign(idx)
            if sign == 0:
                continue
            nf = _coerce(chart, value)
            key = tuple(sorted(idx))
            total = store.get(key, NormalForm()) + (nf if sign > 0 else -nf)
            if total.is_zero():
                store.pop(key, None)
            else:
                store[key] = total
        self._terms = store

    @classmethod
    def _trusted(cls, chart: Chart, degree: int, terms: dict) -> "DifferentialForm":
        # terms already sorted, pruned, and over the chart
        f = cls.__new__(cls)
        f.chart = chart
        f.degree = degree
        f._terms = terms
        return f

    @classmethod
    def zero(cls, chart: Chart, degree: int) -> "DifferentialForm":
        return cls._trusted(chart, degree, {})

    @classmethod
    def function(cls, chart: Chart, value) -> "DifferentialForm":
        return cls(chart, 0, {(): value})

    @property
    def terms(self) -> Mapping[tuple[int, ...], NormalForm]:
        return dict(self._terms)

    @property
    def coefficients(self) -> dict[tuple[int, ...], Expr]:
        return {idx: nf.to_expr() for idx, nf in self._terms.items()}

    def coefficient(self, idx: Sequence[int]) -> NormalForm:
        idx = tuple(idx)
        sign = permutation_sign(idx)
        if sign == 0:
            return NormalForm()
        value = self._terms.get(tuple(sorted(idx)), NormalForm())
        return value if sign > 0 else -value

    def component(self, *names: str) -> NormalForm:
        """Coefficient of ``d<names[0]>^d<names[1]>...``."""
        return self.coefficient([self.chart.index(n) for n in names])

    def scalar(self) -> NormalForm:
        if self.degree != 0:
            raise DegreeError("only 0-forms have a scalar value")
        return self._terms.get((), NormalForm())

    def is_zero(self) -> bool:
        """Structural zero test (every coefficient's normal form vanishes)."""
        return not self._terms

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def _check(self, other: "DifferentialForm") -> None:
        _same_chart(self, other)
        if other.degree != self.degree:
            raise DegreeError(f"cannot add forms of degree {self.degree} and {other.degree}")

    def __add__(self, other: "DifferentialForm") -> "DifferentialForm":
        if not isinstance(other, DifferentialForm):
            return NotImplemented
        self._check(other)
        terms = dict(self._terms)
        for idx, c in other._terms.items():
            total = terms.get(idx, NormalForm()) + c
            if total.is_zero():
                terms.pop(idx, None)
            else:
                terms[idx] = total
        return DifferentialForm._trusted(self.chart, self.degree, terms)

    def __neg__(self) -> "DifferentialForm":
        return DifferentialForm._trusted(self.chart, self.degree, {i: -c for i, c in self._terms.items()})

    def __sub__(self, other: "DifferentialForm") -> "DifferentialForm":
        if not isinstance(other, DifferentialForm):
            return NotImplemented
        return self + (-other)

    def __mul__(self, factor) -> "DifferentialForm":
        if isinstance(factor, DifferentialForm):
            return wedge(self, factor)
        nf = _coerce(self.chart, factor)
        terms = {}
        for idx, c in self._terms.items():
            p = c * nf
            if not p.is_zero():
                terms[idx] = p
        return DifferentialForm._trusted(self.chart, self.degree, terms)

    def __rmul__(self, factor) -> "DifferentialForm":
        return self * factor

    def __xor__(self, other: "DifferentialForm") -> "DifferentialForm":
        return wedge(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DifferentialForm):
            return NotImplemented
        return self.chart == other.chart and self.degree == other.degree and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self.chart, self.degree, frozenset(self._terms.items())))

    def substitute(self, values: Mapping[str, NormalForm]) -> "DifferentialForm":
        """Substitute coordinate values into the coefficients only."""
        values = {k: normalize(v) for k, v in values.items()}
        return DifferentialForm(self.chart, self.degree, {i: c.substitute(values) for i, c in self._terms.items()})

    def __repr__(self) -> str:
        return f"DifferentialForm(deg={self.degree}, {format_form(self)})"

    def __str__(self) -> str:
        return format_form(self)


class VectorField:
    """Components of a vector field in the coordinate frame of ``chart``."""

    __slots__ = ("chart", "_components")

    def __init__(self, chart: Chart, components: Mapping[int | str, object] | None = None):
        self.chart = chart
        store: dict[int, NormalForm] = {}
        for key, value in (components or {}).items():
            i = chart.index(key) if isinstance(key, str) else key
            if not 0 <= i < chart.dim:
                raise ChartMismatchError(f"component {i} outside chart of dimension {chart.dim}")
            nf = store.get(i, NormalForm()) + _coerce(chart, value)
            if nf.is_zero():
                store.pop(i, None)
            else:
                store[i] = nf
        self._components = store

    @classmethod
    def zero(cls, chart: Chart) -> "VectorField":
        return cls(chart, {})

    @property
    def components(self) -> Mapping[int, NormalForm]:
        return dict(self._components)

    def component(self, key: int | str) -> NormalForm:
        i = self.chart.index(key) if isinstance(key, str) else key
        return self._components.get(i, NormalForm())

    def items(self):
        return self._components.items()

    def is_zero(self) -> bool:
        return not self._components

    def apply(self, f) -> NormalForm:
        """Directional derivative ``v(f)`` of a scalar."""
        nf = normalize(f) if not isinstance(f, NormalForm) else f
        out = NormalForm()
        names = self.chart.coords
        free = nf.variables()
        for i, vi in self._components.items():
            if names[i] in free:
                out = out + vi * nf.derivative(names[i])
        return out

    def __add__(self, other: "VectorField") -> "VectorField":
        _same_chart(self, other)
        merged: dict[int, object] = dict(self._components)
        for i, c in other._components.items():
            merged[i] = merged.get(i, NormalForm()) + c
        return VectorField(self.chart, merged)

    def __neg__(self) -> "VectorField":
        return VectorField(self.chart, {i: -c for i, c in self._components.items()})

    def __sub__(self, other: "VectorField") -> "VectorField":
        return self + (-other)

    def __mul__(self, factor) -> "VectorField":
        nf = _coerce(self.chart, factor)
        return VectorField(self.chart, {i: c * nf for i, c in self._components.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, VectorField):
            return NotImplemented
        return self.chart == other.chart and self._components == other._components

    def __hash__(self) -> int:
        return hash((self.chart, frozenset(self._components.items())))

    def evaluate(self, point: Mapping[str, float]) -> list[float]:
        values = [0.0] * self.chart.dim
        for i, c in self._components.items():
            values[i] = c.evaluate(point)
        return values

    def __repr__(self) -> str:
        return f"VectorField({format_field(self)})"

    def __str__(self) -> str:
        return format_field(self)


def format_field(v: VectorField) -> str:
    if v.is_zero():
        return "0"
    parts = []
    for i in sorted(v._components):
        parts.append(_term_text(v._components[i], f"d/d{v.chart.coords[i]}"))
    return _join_terms(parts)


@dataclass(frozen=True)
class ChartMap:
    """A map ``source -> target`` given by one expression per target coordinate."""

    source: Chart
    target: Chart
    components: tuple[NormalForm, ...]

    def __init__(self, source: Chart, target: Chart, components: Sequence[object] | Mapping[str, object]):
        if isinstance(components, Mapping):
            missing = set(target.coords) - components.keys()
            if missing:
                raise ChartMismatchError(f"no expression for target coordinates {sorted(missing)}")
            components = [components[c] for c in target.coords]
        if len(components) != target.dim:
            raise ChartMismatchError(f"{len(components)} expressions for a {target.dim}-dimensional target")
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "components", tuple(_coerce(source, c) for c in components))

    @classmethod
    def projection(cls, source: Chart, target: Chart) -> "ChartMap":
        """The map forgetting every source coordinate not named in ``target``."""
        for c in target.coords:
            source.index(c)
        return cls(source, target, [NormalForm.variable(c) for c in target.coords])


def wedge(a: DifferentialForm, b: DifferentialForm) -> DifferentialForm:
    chart = _same_chart(a, b)
    degree = a.degree + b.degree
    terms: dict[tuple[int, ...], NormalForm] = {}
    if degree > chart.dim:
        return DifferentialForm.zero(chart, degree)
    for ia, ca in a._terms.items():
        for ib, cb in b._terms.items():
            idx = ia + ib
            sign = permutation_sign(idx)
            if sign == 0:
                continue
            key = tuple(sorted(idx))
            p = ca * cb
            total = terms.get(key, NormalForm()) + (p if sign > 0 else -p)
            if total.is_zero():
                terms.pop(key, None)
            else:
                terms[key] = total
    return DifferentialForm._trusted(chart, degree, terms)


def exterior_derivative(f: DifferentialForm) -> DifferentialForm:
    chart = f.chart
    terms: dict[tuple[int, ...], NormalForm] = {}
    for idx, c in f._terms.items():
        for name in c.variables():
            j = chart.index(name)
            if j in idx:
                continue
            # d(c dx^I) = dc/dx^j dx^j ^ dx^I; moving dx^j into place costs
            # one sign per smaller index it passes
            position = sum(1 for i in idx if i < j)
            dc = c.derivative(name)
            if position % 2:
                dc = -dc
            key = idx[:position] + (j,) + idx[position:]
            total = terms.get(key, NormalForm()) + dc
            if total.is_zero():
                terms.pop(key, None)
            else:
                terms[key] = total
    return DifferentialForm._trusted(chart, f.degree + 1, terms)


def interior_product(v: VectorField, f: DifferentialForm) -> DifferentialForm:
    chart = _same_chart(v, f)
    if f.degree == 0:
        raise DegreeError("interior product of a 0-form is undefined")
    terms: dict[tuple[int, ...], NormalForm] = {}
    for idx, c in f._terms.items():
        for p, i in enumerate(idx):
            vi = v._components.get(i)
            if vi is None:
                continue
            key = idx[:p] + idx[p + 1 :]
            term = vi * c
            if p % 2:
                term = -term
            total = terms.get(key, NormalForm()) + term
            if total.is_zero():
                terms.pop(key, None)
            else:
                terms[key] = total
    return DifferentialForm._trusted(chart, f.degree - 1, terms)


def contract(f: DifferentialForm, vectors: Sequence[VectorField]) -> DifferentialForm:
    """``f(v1, ..., vk, ...)`` as a form of degree ``deg f - k``."""
    for v in vectors:
        f = interior_product(v, f)
    return f


def lie_derivative(v: VectorField, f: DifferentialForm) -> DifferentialForm:
    """Cartan formula ``L_v = i_v d + d i_v``."""
    _same_chart(v, f)
    out = interior_product(v, exterior_derivative(f))
    if f.degree > 0:
        out = out + exterior_derivative(interior_product(v, f))
    return out


def lie_bracket(v: VectorField, w: VectorField) -> VectorField:
    chart = _same_chart(v, w)
    components: dict[int, NormalForm] = {}
    for i in range(chart.dim):
        c = v.apply(w.component(i)) - w.apply(v.component(i))
        if not c.is_zero():
            components[i] = c
    return VectorField(chart, components)


def pullback(m: ChartMap, f: DifferentialForm) -> DifferentialForm:
    """``m^* f``: substitute the map into the coefficients and each ``dy^i``
    by ``d(m^i)``."""
    if f.chart != m.target:
        raise ChartMismatchError("form does not live on the target chart of the map")
    source = m.source
    if f.degree > source.dim:
        return DifferentialForm.zero(source, f.degree)
    values = dict(zip(m.target.coords, m.components))
    differentials: dict[int, DifferentialForm] = {}
    out = DifferentialForm.zero(source, f.degree)
    for idx, c in f._terms.items():
        term = DifferentialForm.function(source, c.substitute(values))
        for i in idx:
            if i not in differentials:
                differentials[i] = exterior_derivative(DifferentialForm.function(source, m.components[i]))
            term = wedge(term, differentials[i])
            if term.is_zero():
                break
        out = out + term
    return out


def evaluate_form(f: DifferentialForm, vectors: Sequence[VectorField], point: Mapping[str, float]) -> float:
    """Numeric value ``f(v1, ..., vk)`` at ``point`` by the signed sum over
    permutations of the vector slots."""
    if len(vectors) != f.degree:
        raise DegreeError(f"a {f.degree}-form needs {f.degree} vectors, got {len(vectors)}")
    for v in vectors:
        _same_chart(f, v)
    rows = [v.evaluate(point) for v in vectors]
    total = []
    for idx, c in f._terms.items():
        coefficient = c.evaluate(point)
        acc = 0.0
        for perm in itertools.permutations(range(f.degree)):
            product = 1.0
            for slot, position in enumerate(perm):
                product *= rows[slot][idx[position]]
                if product == 0.0:
                    break
            if product:
                acc += permutation_sign(perm) * product
        total.append(coefficient * acc)
    return math.fsum(total)


def is_zero_form(f: DifferentialForm, sampler: SampleConfig | None = None) -> Verdict:
    """Zero verdict for every coefficient at once; a witness names its slot."""
    items = sorted(f._terms.items())
    labels = [_basis_text(f.chart, idx) for idx, _ in items]
    return is_zero_many([c for _, c in items], sampler or SampleConfig(), labels, f.chart.coords)


def is_zero_field(v: VectorField, sampler: SampleConfig | None = None) -> Verdict:
    items = sorted(v._components.items())
    labels = [f"d/d{v.chart.coords[i]}" for i, _ in items]
    return is_zero_many([c for _, c in items], sampler or SampleConfig(), labels, v.chart.coords)


# ---------------------------------------------------------------------------
# Form literals


def _basis_text(chart: Chart, idx: tuple[int, ...]) -> str:
    if not idx:
        return "1"
    return "^".join(f"d{chart.coords[i]}" for i in idx)


def _term_text(c: NormalForm, basis: str) -> str:
    expr = c.to_expr()
    text = to_text(expr)
    if isinstance(expr, Sum):
        text = f"({text})"
    elif text.startswith("-") and "/" in text.split("*", 1)[0]:
        text = f"({text})"
    return f"{text} * {basis}"


def _join_terms(parts: list[str]) -> str:
    out = parts[0]
    for p in parts[1:]:
        out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
    return out


def format_form(f: DifferentialForm) -> str:
    """Form literal, e.g. ``x * dy^dz + 1 * dx^dz``; the zero form is ``0``."""
    if f.is_zero():
        return "0"
    if f.degree == 0:
        return to_text(f.scalar().to_expr())
    return _join_terms([_term_text(c, _basis_text(f.chart, idx)) for idx, c in sorted(f._terms.items())])


def parse_form(text: str, chart: Chart, degree: int | None = None) -> DifferentialForm:
    """Parse a form literal over ``chart``.

    Terms are ``<expr> * dA^dB...`` or a bare ``dA^dB...``; ``dA`` must be
    ``d`` followed by a coordinate name.  A literal without differentials is
    a 0-form unless it is ``0`` and ``degree`` says otherwise.
    """
    differentials = {f"d{c}": c for c in chart.coords if f"d{c}" not in chart}
    parser = _Parser(text, chart.coords, differentials)
    pieces: list[tuple[NormalForm, tuple[int, ...], int]] = []  # coefficient, indices, offset
    while True:
        start = parser.tok.offset
        sign = 1
        if pieces:
            if not parser.at_op("+", "-"):
                break
            sign = 1 if parser.advance().text == "+" else -1
        while parser.at_op("+", "-") and parser.is_differential(parser.peek()):
            if parser.advance().text == "-":
                sign = -sign
        if parser.is_differential(parser.tok):
            coefficient = NormalForm.constant(1)
        else:
            coefficient = normalize(parser.parse_term())
            if not (parser.at_op("*") and parser.is_differential(parser.peek())):
                pieces.append((coefficient.scale(sign), (), start))
                continue
            parser.advance()
        indices = [chart.index(differentials[parser.advance().text])]
        while parser.at_op("^") and parser.is_differential(parser.peek()):
            parser.advance()
            indices.append(chart.index(differentials[parser.advance().text]))
        pieces.append((coefficient.scale(sign), tuple(indices), start))
    if parser.tok.kind != "end":
        raise ExprSyntaxError(f"unexpected {parser.tok.text!r}", parser.tok.offset)
    found = len(pieces[0][1])
    for _, idx, offset in pieces:
        if len(idx) != found:
            raise ExprSyntaxError("terms of different degree in one form literal", offset)
    out = DifferentialForm.zero(chart, found)
    for coefficient, idx, _ in pieces:
        out = out + DifferentialForm(chart, found, {idx: coefficient})
    if degree is not None and degree != found:
        if out.is_zero():
            return DifferentialForm.zero(chart, degree)
        raise DegreeError(f"expected a {degree}-form, literal has degree {found}")
    return out
