"""Scalar expressions over chart coordinates.

Expressions are immutable trees built from exact rational constants,
variables, sums, products, integer powers and the functions ``sin``,
``cos`` and ``exp``.  Every tree has a :class:`NormalForm`: an expanded
polynomial over variables and transcendental atoms with rational
coefficients.  Two trees with equal normal forms agree pointwise; the
converse fails for transcendental identities, which :func:`is_zero`
settles by seeded sampling.
"""

from __future__ import annotations

import math
import re
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

__all__ = [
    "FUNCTIONS",
    "Expr",
    "Constant",
    "Variable",
    "Sum",
    "Product",
    "Power",
    "Apply",
    "NormalForm",
    "ExprError",
    "ExprSyntaxError",
    "UnknownIdentifierError",
    "EvaluationError",
    "PoleError",
    "MissingAssignmentError",
    "SampleConfig",
    "ProvedZero",
    "SampledZero",
    "NonzeroWitness",
    "Verdict",
    "worst",
    "as_expr",
    "parse",
    "to_text",
    "evaluate",
    "differentiate",
    "normalize",
    "is_zero",
    "sample_points",
]

FUNCTIONS = ("sin", "cos", "exp")

Number = Union[int, Fraction]


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ExprError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r} at offset {offset}")
        self.name = name
        self.offset = offset


class EvaluationError(ArithmeticError):
    pass


class PoleError(EvaluationError, ZeroDivisionError):
    pass


class MissingAssignmentError(EvaluationError, KeyError):
    def __init__(self, name: str):
        super().__init__(f"no value assigned to {name!r}")
        self.name = name

    def __str__(self) -> str:
        return self.args[0]


# ---------------------------------------------------------------------------
# Expression trees


class Expr:
    """Base class of expression nodes."""

    __slots__ = ()

    def __add__(self, other):
        return _add(self, as_expr(other))

    def __radd__(self, other):
        return _add(as_expr(other), self)

    def __sub__(self, other):
        return _add(self, _neg(as_expr(other)))

    def __rsub__(self, other):
        return _add(as_expr(other), _neg(self))

    def __mul__(self, other):
        return _mul(self, as_expr(other))

    def __rmul__(self, other):
        return _mul(as_expr(other), self)

    def __truediv__(self, other):
        other = as_expr(other)
        if isinstance(other, Constant):
            if other.value == 0:
                raise PoleError("division by the constant zero")
            return _mul(self, Constant(1 / other.value))
        return _mul(self, Power(other, -1))

    def __rtruediv__(self, other):
        return as_expr(other) / self

    def __neg__(self):
        return _neg(self)

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int):
            raise TypeError("exponents must be integers")
        return Power(self, exponent)

    def __str__(self) -> str:
        return to_text(self)

    def normal_form(self) -> "NormalForm":
        return normalize(self)

    def variables(self) -> frozenset[str]:
        return normalize(self).variables()


@dataclass(frozen=True, slots=True)
class Constant(Expr):
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True, slots=True)
class Variable(Expr):
    name: str


@dataclass(frozen=True, slots=True)
class Sum(Expr):
    terms: tuple[Expr, ...]


@dataclass(frozen=True, slots=True)
class Product(Expr):
    factors: tuple[Expr, ...]


@dataclass(frozen=True, slots=True)
class Power(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True, slots=True)
class Apply(Expr):
    function: str
    argument: Expr

    def __post_init__(self):
        if self.function not in FUNCTIONS:
            raise ExprError(f"unsupported function {self.function!r}")


ZERO = Constant(Fraction(0))
ONE = Constant(Fraction(1))


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, NormalForm):
        return value.to_expr()
    if isinstance(value, bool):
        raise TypeError("booleans are not expressions")
    if isinstance(value, (int, Fraction)):
        return Constant(Fraction(value))
    if isinstance(value, str):
        return Variable(value)
    raise TypeError(f"cannot convert {type(value).__name__} to an expression")


def _add(a: Expr, b: Expr) -> Expr:
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    terms = (a.terms if isinstance(a, Sum) else (a,)) + (b.terms if isinstance(b, Sum) else (b,))
    return Sum(terms)


def _mul(a: Expr, b: Expr) -> Expr:
    if a == ZERO or b == ZERO:
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    if isinstance(a, Constant) and isinstance(b, Constant):
        return Constant(a.value * b.value)
    if isinstance(a, Constant) and isinstance(b, Product) and isinstance(b.factors[0], Constant):
        return _mul(Constant(a.value * b.factors[0].value), Product(b.factors[1:]) if len(b.factors) > 2 else b.factors[1])
    factors = (a.factors if isinstance(a, Product) else (a,)) + (
        b.factors if isinstance(b, Product) else (b,)
    )
    return Product(factors)


def _neg(a: Expr) -> Expr:
    if isinstance(a, Constant):
        return Constant(-a.value)
    return _mul(Constant(Fraction(-1)), a)


# ---------------------------------------------------------------------------
# Parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*|\.\d+|\d+)|(?P<ident>[A-Za-z][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


@dataclass(frozen=True)
class _Token:
    kind: str  # "num", "ident", "op", "end"
    text: str
    offset: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0

    def byte_offset(i: int) -> int:
        return len(text[:i].encode("utf-8"))

    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            tokens.append(_Token("end", "", byte_offset(len(text))))
            return tokens
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", byte_offset(pos))
        kind = m.lastgroup
        tokens.append(_Token(kind, m.group(kind), byte_offset(m.start(kind))))
        pos = m.end()


class _Parser:
    """Recursive-descent parser shared by expression and form literals."""

    def __init__(self, text: str, coordinates: Iterable[str] | None, differentials: Mapping[str, str] | None = None):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.coordinates = None if coordinates is None else set(coordinates)
        # identifier -> coordinate for tokens like "dx"; only used by form literals
        self.differentials = dict(differentials or {})

    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> _Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def advance(self) -> _Token:
        t = self.tokens[self.pos]
        if t.kind != "end":
            self.pos += 1
        return t

    def expect(self, text: str) -> _Token:
        t = self.tok
        if t.kind != "op" or t.text != text:
            raise ExprSyntaxError(f"expected {text!r}", t.offset)
        return self.advance()

    def at_op(self, *ops: str) -> bool:
        return self.tok.kind == "op" and self.tok.text in ops

    def is_differential(self, t: _Token) -> bool:
        return t.kind == "ident" and t.text in self.differentials

    # expr := term (('+'|'-') term)*
    def parse_expr(self) -> Expr:
        result = self.parse_term()
        while self.at_op("+", "-"):
            op = self.advance().text
            rhs = self.parse_term()
            result = result + rhs if op == "+" else result - rhs
        return result

    # term := unary (('*'|'/') unary)*
    def parse_term(self) -> Expr:
        result = self.parse_unary()
        while self.at_op("*", "/"):
            if self.tok.text == "*" and self.is_differential(self.peek()):
                break
            op = self.advance().text
            rhs = self.parse_unary()
            result = result * rhs if op == "*" else result / rhs
        return result

    def parse_unary(self) -> Expr:
        if self.at_op("-"):
            self.advance()
            return -self.parse_unary()
        if self.at_op("+"):
            self.advance()
            return self.parse_unary()
        return self.parse_power()

    def parse_power(self) -> Expr:
        base = self.parse_atom()
        while self.at_op("^"):
            self.advance()
            base = Power(base, self.parse_exponent())
        return base

    def parse_exponent(self) -> int:
        paren = self.at_op("(")
        if paren:
            self.advance()
        sign = 1
        if self.at_op("-"):
            self.advance()
            sign = -1
        t = self.tok
        if t.kind != "num" or not t.text.isdigit():
            raise ExprSyntaxError("expected an integer exponent", t.offset)
        self.advance()
        if paren:
            self.expect(")")
        return sign * int(t.text)

    def parse_atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Constant(Fraction(t.text))
        if t.kind == "ident":
            if t.text in FUNCTIONS:
                self.advance()
                self.expect("(")
                arg = self.parse_expr()
                self.expect(")")
                return Apply(t.text, arg)
            if self.coordinates is not None and t.text not in self.coordinates:
                if t.text in self.differentials:
                    raise ExprSyntaxError(f"differential {t.text!r} not allowed here", t.offset)
                raise UnknownIdentifierError(t.text, t.offset)
            self.advance()
            return Variable(t.text)
        if t.kind == "op" and t.text == "(":
            self.advance()
            inner = self.parse_expr()
            self.expect(")")
            return inner
        if t.kind == "end":
            raise ExprSyntaxError("unexpected end of input", t.offset)
        raise ExprSyntaxError(f"unexpected {t.text!r}", t.offset)


def _coordinate_names(chart) -> Iterable[str] | None:
    if chart is None:
        return None
    return getattr(chart, "coords", chart)


def parse(text: str, chart=None) -> Expr:
    """Parse ``text`` into an expression.

    ``chart`` is a :class:`~twoplectic.forms.Chart` or any iterable of
    coordinate names; identifiers outside it raise
    :class:`UnknownIdentifierError`.  ``None`` accepts every identifier.
    """
    parser = _Parser(text, _coordinate_names(chart))
    result = parser.parse_expr()
    if parser.tok.kind != "end":
        raise ExprSyntaxError(f"unexpected {parser.tok.text!r}", parser.tok.offset)
    return result


# ---------------------------------------------------------------------------
# Printing

_PREC_SUM, _PREC_PRODUCT, _PREC_UNARY, _PREC_POWER, _PREC_ATOM = range(5)


def _const_text(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _const_prec(value: Fraction) -> int:
    if value < 0:
        return _PREC_UNARY
    if value.denominator != 1:
        return _PREC_PRODUCT
    return _PREC_ATOM


def _render(e: Expr) -> tuple[str, int]:
    if isinstance(e, Constant):
        return _const_text(e.value), _const_prec(e.value)
    if isinstance(e, Variable):
        return e.name, _PREC_ATOM
    if isinstance(e, Apply):
        return f"{e.function}({to_text(e.argument)})", _PREC_ATOM
    if isinstance(e, Power):
        base, prec = _render(e.base)
        if prec < _PREC_ATOM:
            base = f"({base})"
        exp = str(e.exponent) if e.exponent >= 0 else f"({e.exponent})"
        return f"{base}^{exp}", _PREC_POWER
    if isinstance(e, Product):
        if not e.factors:
            return "1", _PREC_ATOM
        factors = list(e.factors)
        sign = ""
        if isinstance(factors[0], Constant) and factors[0].value < 0 and len(factors) > 1:
            sign = "-"
            magnitude = -factors[0].value
            factors = factors[1:] if magnitude == 1 else [Constant(magnitude), *factors[1:]]
        parts = []
        for i, f in enumerate(factors):
            s, prec = _render(f)
            # "a*-b" is outside the grammar and "a*b/c" regroups
            if prec < _PREC_PRODUCT or (prec == _PREC_PRODUCT and i > 0) or (prec == _PREC_UNARY):
                s = f"({s})"
            parts.append(s)
        body = "*".join(parts)
        return sign + body, (_PREC_UNARY if sign else _PREC_PRODUCT)
    if isinstance(e, Sum):
        if not e.terms:
            return "0", _PREC_ATOM
        out = []
        for i, t in enumerate(e.terms):
            s, prec = _render(t)
            if prec == _PREC_SUM:
                s = f"({s})"
            if i == 0:
                out.append(s)
            elif s.startswith("-"):
                out.append(f" - {s[1:]}" if _negation_is_safe(t) else f" + ({s})")
            else:
                out.append(f" + {s}")
        return "".join(out), _PREC_SUM
    raise TypeError(f"not an expression: {e!r}")


def _negation_is_safe(t: Expr) -> bool:
    # "a - 3*x" re-parses as a + (-3)*x only when the leading minus binds to
    # the whole term, which holds for products and constants.
    return isinstance(t, (Constant, Product))


def to_text(e: Expr) -> str:
    """Print ``e`` in the input grammar; ``parse(to_text(e))`` evaluates like ``e``."""
    return _render(e)[0]


# ---------------------------------------------------------------------------
# Evaluation

_MATH = {"sin": math.sin, "cos": math.cos, "exp": math.exp}


def evaluate(e, point: Mapping[str, float]) -> float:
    """Evaluate an expression (or normal form) at ``point``."""
    if isinstance(e, NormalForm):
        return e.evaluate(point)
    if isinstance(e, Constant):
        return float(e.value)
    if isinstance(e, Variable):
        try:
            return float(point[e.name])
        except KeyError:
            raise MissingAssignmentError(e.name) from None
    if isinstance(e, Sum):
        return math.fsum(evaluate(t, point) for t in e.terms)
    if isinstance(e, Product):
        result = 1.0
        for f in e.factors:
            result *= evaluate(f, point)
        return result
    if isinstance(e, Power):
        base = evaluate(e.base, point)
        if e.exponent < 0 and base == 0.0:
            raise PoleError(f"pole of {to_text(e)}")
        return base ** e.exponent
    if isinstance(e, Apply):
        return _MATH[e.function](evaluate(e.argument, point))
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# Differentiation on trees


def differentiate(e: Expr, var: str) -> Expr:
    """Exact partial derivative of ``e`` with respect to ``var``.

    Works directly on the tree with the textbook rules; the result is not
    simplified beyond dropping zero and unit factors.
    """
    if isinstance(e, Constant):
        return ZERO
    if isinstance(e, Variable):
        return ONE if e.name == var else ZERO
    if isinstance(e, Sum):
        out: Expr = ZERO
        for t in e.terms:
            out = out + differentiate(t, var)
        return out
    if isinstance(e, Product):
        out = ZERO
        for i, f in enumerate(e.factors):
            df = differentiate(f, var)
            if df == ZERO:
                continue
            term: Expr = df
            for j, g in enumerate(e.factors):
                if j != i:
                    term = term * g
            out = out + term
        return out
    if isinstance(e, Power):
        db = differentiate(e.base, var)
        if db == ZERO or e.exponent == 0:
            return ZERO
        lowered = e.base if e.exponent == 2 else Power(e.base, e.exponent - 1)
        return Constant(Fraction(e.exponent)) * lowered * db
    if isinstance(e, Apply):
        da = differentiate(e.argument, var)
        if da == ZERO:
            return ZERO
        if e.function == "sin":
            outer: Expr = Apply("cos", e.argument)
        elif e.function == "cos":
            outer = -Apply("sin", e.argument)
        else:
            outer = e
        return outer * da
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# Normal forms
#
# Atoms are interned: a variable atom is keyed ("v", name), a function atom
# ("f", fname, argument-key) and a reciprocal of a multi-term polynomial
# ("r", base-key).  A monomial is a tuple of (atom id, exponent) pairs sorted
# by id; ids are process-local so printing sorts by a readable key instead.


@dataclass(frozen=True)
class _Atom:
    key: tuple
    kind: str  # "var", "sin", "cos", "exp", "recip"
    name: str = ""
    arg: "NormalForm | None" = None
    free: frozenset = field(default_factory=frozenset)


_atom_lock = threading.Lock()
_atoms: list[_Atom] = []
_atom_ids: dict[tuple, int] = {}


def _intern(atom: _Atom) -> int:
    idx = _atom_ids.get(atom.key)
    if idx is not None:
        return idx
    with _atom_lock:
        idx = _atom_ids.get(atom.key)
        if idx is None:
            idx = len(_atoms)
            _atoms.append(atom)
            _atom_ids[atom.key] = idx
        return idx


def _var_atom(name: str) -> int:
    key = ("v", name)
    idx = _atom_ids.get(key)
    if idx is not None:
        return idx
    return _intern(_Atom(key, "var", name=name, free=frozenset((name,))))


def _func_atom(fname: str, arg: "NormalForm") -> int:
    key = ("f", fname, arg.key)
    idx = _atom_ids.get(key)
    if idx is not None:
        return idx
    return _intern(_Atom(key, fname, arg=arg, free=arg.variables()))


def _recip_atom(base: "NormalForm") -> int:
    key = ("r", base.key)
    idx = _atom_ids.get(key)
    if idx is not None:
        return idx
    return _intern(_Atom(key, "recip", arg=base, free=base.variables()))


def _mono_mul(m1: tuple, m2: tuple) -> tuple:
    if not m1:
        return m2
    if not m2:
        return m1
    merged = dict(m1)
    for a, e in m2:
        ne = merged.get(a, 0) + e
        if ne:
            merged[a] = ne
        else:
            del merged[a]
    return tuple(sorted(merged.items()))


def _mono_sort_key(m: tuple) -> tuple:
    # readable, process-independent ordering: by total degree then atoms
    return (sum(abs(e) for _, e in m), tuple((_atom_print_key(a), -e) for a, e in m))


def _atom_print_key(a: int) -> tuple:
    atom = _atoms[a]
    if atom.kind == "var":
        return (0, _natural_key(atom.name))
    return (1, atom.kind, str(atom.arg.to_expr()))


def _natural_key(name: str) -> tuple:
    return tuple(int(p) if p.isdigit() else p for p in re.split(r"(\d+)", name))


class NormalForm(Mapping):
    """Canonical expanded polynomial over variables and transcendental atoms.

    Behaves as a read-only mapping from monomials to rational coefficients;
    zero coefficients never appear.  Supports ``+``, ``-``, ``*`` and
    non-negative integer powers with other normal forms and numbers.
    """

    __slots__ = ("_terms", "_key", "_hash", "_free")

    def __init__(self, terms: Mapping[tuple, Fraction] | None = None):
        self._terms = {m: Fraction(c) for m, c in (terms or {}).items() if c != 0}
        self._key = None
        self._hash = None
        self._free = None

    @classmethod
    def constant(cls, value: Number) -> "NormalForm":
        value = Fraction(value)
        return cls({(): value} if value else {})

    @classmethod
    def variable(cls, name: str) -> "NormalForm":
        nf = cls.__new__(cls)
        nf._terms = {((_var_atom(name), 1),): Fraction(1)}
        nf._key = nf._hash = nf._free = None
        return nf

    @classmethod
    def _raw(cls, terms: dict) -> "NormalForm":
        nf = cls.__new__(cls)
        nf._terms = terms
        nf._key = nf._hash = nf._free = None
        return nf

    # Mapping protocol
    def __getitem__(self, monomial):
        return self._terms[monomial]

    def __iter__(self):
        return iter(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    @property
    def key(self) -> frozenset:
        if self._key is None:
            self._key = frozenset(self._terms.items())
        return self._key

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.key)
        return self._hash

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            other = NormalForm.constant(other)
        if not isinstance(other, NormalForm):
            return NotImplemented
        return self._terms == other._terms

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and () in self._terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("normal form is not constant")
        return self._terms.get((), Fraction(0))

    def variables(self) -> frozenset[str]:
        if self._free is None:
            free: set[str] = set()
            for m in self._terms:
                for a, _ in m:
                    free |= _atoms[a].free
            self._free = frozenset(free)
        return self._free

    # arithmetic
    def __add__(self, other) -> "NormalForm":
        other = _as_nf(other)
        if other is NotImplemented:
            return other
        if not other._terms:
            return self
        if not self._terms:
            return other
        terms = dict(self._terms)
        for m, c in other._terms.items():
            nc = terms.get(m, 0) + c
            if nc:
                terms[m] = nc
            else:
                terms.pop(m, None)
        return NormalForm._raw(terms)

    __radd__ = __add__

    def __neg__(self) -> "NormalForm":
        return NormalForm._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "NormalForm":
        other = _as_nf(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "NormalForm":
        return _as_nf(other) - self

    def __mul__(self, other) -> "NormalForm":
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.scale(other)
        other = _as_nf(other)
        if other is NotImplemented:
            return other
        if not self._terms or not other._terms:
            return NormalForm._raw({})
        terms: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                nc = terms.get(m, 0) + c1 * c2
                if nc:
                    terms[m] = nc
                else:
                    terms.pop(m, None)
        return NormalForm._raw(terms)

    __rmul__ = __mul__

    def scale(self, factor: Number) -> "NormalForm":
        factor = Fraction(factor)
        if factor == 0:
            return NormalForm._raw({})
        if factor == 1:
            return self
        return NormalForm._raw({m: c * factor for m, c in self._terms.items()})

    def __pow__(self, n: int) -> "NormalForm":
        return nf_power(self, n)

    # calculus
    def derivative(self, var: str) -> "NormalForm":
        """Exact partial derivative with respect to ``var``."""
        if var not in self.variables():
            return NormalForm._raw({})
        out = NormalForm._raw({})
        for m, c in self._terms.items():
            for i, (a, e) in enumerate(m):
                atom = _atoms[a]
                if var not in atom.free:
                    continue
                rest = m[:i] + m[i + 1 :]
                lowered = _mono_mul(rest, ((a, e - 1),)) if e != 1 else rest
                inner = _atom_derivative(atom, a, var)
                out = out + NormalForm._raw({lowered: c * e}) * inner
        return out

    def substitute(self, values: Mapping[str, "NormalForm"]) -> "NormalForm":
        """Replace variables by normal forms."""
        if not (self.variables() & values.keys()):
            return self
        out = NormalForm._raw({})
        for m, c in self._terms.items():
            term = NormalForm._raw({(): c})
            for a, e in m:
                term = term * nf_power(_substitute_atom(_atoms[a], a, values), e)
            out = out + term
        return out

    # evaluation
    def evaluate(self, point: Mapping[str, float]) -> float:
        total, _ = self._evaluate_with_scale(point)
        return total

    def _evaluate_with_scale(self, point: Mapping[str, float], cache: dict | None = None) -> tuple[float, float]:
        cache = {} if cache is None else cache
        total = 0.0
        scale = 0.0
        for m, c in self._terms.items():
            value = float(c)
            for a, e in m:
                av = cache.get(a)
                if av is None:
                    av = _atom_value(_atoms[a], point, cache)
                    cache[a] = av
                if e < 0 and av == 0.0:
                    raise PoleError(f"pole of {_atoms[a].key} at {dict(point)}")
                value *= av**e
            total += value
            scale += abs(value)
        return total, scale

    def lambdify(self, names: Sequence[str]) -> Callable[..., np.ndarray]:
        """Vectorised numpy evaluator taking one array per name in ``names``."""
        index = {n: i for i, n in enumerate(names)}
        missing = self.variables() - index.keys()
        if missing:
            raise MissingAssignmentError(sorted(missing)[0])
        terms = list(self._terms.items())

        def f(*args):
            cache: dict = {}
            point = {n: args[i] for n, i in index.items()}
            shape = np.broadcast(*args).shape if args else ()
            total = np.zeros(shape)
            for m, c in terms:
                value = np.full(shape, float(c))
                for a, e in m:
                    av = cache.get(a)
                    if av is None:
                        av = _atom_array(_atoms[a], point, cache)
                        cache[a] = av
                    value = value * av**e if e > 0 else value / av ** (-e)
                total = total + value
            return total

        return f

    # conversion
    def sorted_terms(self) -> list[tuple[tuple, Fraction]]:
        return sorted(self._terms.items(), key=lambda mc: _mono_sort_key(mc[0]))

    def to_expr(self) -> Expr:
        terms = []
        for m, c in self.sorted_terms():
            factors = [_atom_power_expr(_atoms[a], e) for a, e in m]
            if not factors:
                terms.append(Constant(c))
            elif c == 1:
                terms.append(factors[0] if len(factors) == 1 else Product(tuple(factors)))
            else:
                terms.append(Product((Constant(c), *factors)))
        if not terms:
            return ZERO
        return terms[0] if len(terms) == 1 else Sum(tuple(terms))

    def monomial_text(self, monomial: tuple) -> str:
        """Readable label of a monomial, e.g. ``x^2`` or ``sin(x)^2``."""
        if not monomial:
            return "1"
        parts = []
        return "*".join(to_text(_atom_power_expr(_atoms[a], e)) for a, e in monomial)

    def readable(self) -> dict[str, Fraction]:
        """Mapping from monomial labels to coefficients."""
        return {self.monomial_text(m): c for m, c in self.sorted_terms()}

    def __repr__(self) -> str:
        return f"NormalForm({to_text(self.to_expr())})"

    def __str__(self) -> str:
        return to_text(self.to_expr())


def _as_nf(value):
    if isinstance(value, NormalForm):
        return value
    if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        return NormalForm.constant(value)
    if isinstance(value, Expr):
        return normalize(value)
    return NotImplemented


def _atom_expr(atom: _Atom) -> Expr:
    if atom.kind == "var":
        return Variable(atom.name)
    if atom.kind == "recip":
        return Power(atom.arg.to_expr(), -1)
    return Apply(atom.kind, atom.arg.to_expr())


def _atom_power_expr(atom: _Atom, e: int) -> Expr:
    if atom.kind == "recip":
        return Power(atom.arg.to_expr(), -e)
    base = _atom_expr(atom)
    return base if e == 1 else Power(base, e)


def _atom_derivative(atom: _Atom, a: int, var: str) -> NormalForm:
    if atom.kind == "var":
        return NormalForm._raw({(): Fraction(1)})
    inner = atom.arg.derivative(var)
    if atom.kind == "sin":
        return apply_function("cos", atom.arg) * inner
    if atom.kind == "cos":
        return -(apply_function("sin", atom.arg) * inner)
    if atom.kind == "exp":
        return NormalForm._raw({((a, 1),): Fraction(1)}) * inner
    # d(1/b) = -b'/b^2
    return -(NormalForm._raw({((a, 2),): Fraction(1)}) * inner)


def _substitute_atom(atom: _Atom, a: int, values: Mapping[str, NormalForm]) -> NormalForm:
    if atom.kind == "var":
        return values.get(atom.name) or (
            NormalForm._raw({}) if atom.name in values else NormalForm._raw({((a, 1),): Fraction(1)})
        )
    if not (atom.free & values.keys()):
        return NormalForm._raw({((a, 1),): Fraction(1)})
    arg = atom.arg.substitute(values)
    if atom.kind == "recip":
        return nf_power(arg, -1)
    return apply_function(atom.kind, arg)


def _atom_value(atom: _Atom, point: Mapping[str, float], cache: dict) -> float:
    if atom.kind == "var":
        try:
            return float(point[atom.name])
        except KeyError:
            raise MissingAssignmentError(atom.name) from None
    arg, _ = atom.arg._evaluate_with_scale(point, cache)
    if atom.kind == "recip":
        if arg == 0.0:
            raise PoleError(f"pole of 1/({atom.arg}) at {dict(point)}")
        return 1.0 / arg
    return _MATH[atom.kind](arg)


def _atom_array(atom: _Atom, point: Mapping[str, np.ndarray], cache: dict) -> np.ndarray:
    if atom.kind == "var":
        return np.asarray(point[atom.name], dtype=float)
    arg = _nf_array(atom.arg, point, cache)
    if atom.kind == "recip":
        return 1.0 / arg
    return {"sin": np.sin, "cos": np.cos, "exp": np.exp}[atom.kind](arg)


def _nf_array(nf: NormalForm, point, cache) -> np.ndarray:
    total = 0.0
    for m, c in nf._terms.items():
        value = float(c)
        for a, e in m:
            av = cache.get(a)
            if av is None:
                av = _atom_array(_atoms[a], point, cache)
                cache[a] = av
            value = value * av**e if e > 0 else value / av ** (-e)
        total = total + value
    return np.asarray(total, dtype=float)


def apply_function(fname: str, arg: NormalForm) -> NormalForm:
    """Normal form of ``fname(arg)``; folds the values at zero."""
    if arg.is_zero():
        return NormalForm.constant(0 if fname == "sin" else 1)
    return NormalForm._raw({((_func_atom(fname, arg), 1),): Fraction(1)})


def nf_power(base: NormalForm, n: int) -> NormalForm:
    """``base ** n`` for any integer ``n``; negative powers of multi-term
    polynomials become reciprocal atoms."""
    if n == 0:
        return NormalForm.constant(1)
    if n > 0:
        result = NormalForm.constant(1)
        square = base
        while n:
            if n & 1:
                result = result * square
            n >>= 1
            if n:
                square = square * square
        return result
    if base.is_zero():
        raise PoleError("negative power of zero")
    if len(base) == 1:
        ((m, c),) = base.items()
        out = NormalForm.constant(Fraction(1) / c ** (-n))
        for a, e in m:
            atom = _atoms[a]
            if atom.kind == "recip" and e * n < 0:
                # (1/b)^(-k) = b^k
                out = out * nf_power(atom.arg, -e * n)
            else:
                out = out * NormalForm._raw({((a, e * n),): Fraction(1)})
        return out
    return NormalForm._raw({((_recip_atom(base), -n),): Fraction(1)})


def normalize(e) -> NormalForm:
    """Canonical normal form of an expression."""
    if isinstance(e, NormalForm):
        return e
    if isinstance(e, Constant):
        return NormalForm.constant(e.value)
    if isinstance(e, Variable):
        return NormalForm.variable(e.name)
    if isinstance(e, Sum):
        out = NormalForm._raw({})
        for t in e.terms:
            out = out + normalize(t)
        return out
    if isinstance(e, Product):
        out = NormalForm.constant(1)
        for f in e.factors:
            out = out * normalize(f)
            if out.is_zero():
                break
        return out
    if isinstance(e, Power):
        return nf_power(normalize(e.base), e.exponent)
    if isinstance(e, Apply):
        return apply_function(e.function, normalize(e.argument))
    if isinstance(e, (int, Fraction)) and not isinstance(e, bool):
        return NormalForm.constant(e)
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# Zero testing


@dataclass(frozen=True)
class SampleConfig:
    """How :func:`is_zero` samples: ``points`` uniform draws from the box
    ``[low, high]`` per coordinate (``box`` overrides per name), seeded."""

    points: int = 20
    low: float = -2.0
    high: float = 2.0
    seed: int = 0
    tol: float = 1e-10
    max_retries: int = 100
    box: Mapping[str, tuple[float, float]] | None = None

    def bounds(self, name: str) -> tuple[float, float]:
        if self.box and name in self.box:
            return self.box[name]
        return self.low, self.high


@dataclass(frozen=True)
class ProvedZero:
    status = "proved"
    ok = True
    max_residual = 0.0


@dataclass(frozen=True)
class SampledZero:
    points: int
    max_residual: float
    status = "sampled"
    ok = True


@dataclass(frozen=True)
class NonzeroWitness:
    point: Mapping[str, float]
    value: float
    where: str = ""
    status = "FAIL"
    ok = False

    @property
    def max_residual(self) -> float:
        return abs(self.value)


Verdict = Union[ProvedZero, SampledZero, NonzeroWitness]


def worst(verdicts: Iterable[Verdict]) -> Verdict:
    """Combine verdicts: any witness wins (largest), then sampled, then proved."""
    verdicts = list(verdicts)
    failures = [v for v in verdicts if isinstance(v, NonzeroWitness)]
    if failures:
        return max(failures, key=lambda v: abs(v.value))
    sampled = [v for v in verdicts if isinstance(v, SampledZero)]
    if sampled:
        return SampledZero(max(v.points for v in sampled), max(v.max_residual for v in sampled))
    return ProvedZero()


def sample_points(names: Sequence[str], sampler: SampleConfig, count: int | None = None) -> Iterable[dict[str, float]]:
    """Yield seeded random points; the stream is reproducible per config."""
    rng = np.random.default_rng(sampler.seed)
    names = sorted(names)
    emitted = 0
    total = sampler.points if count is None else count
    draws = 0
    while emitted < total:
        draws += 1
        if draws > total + sampler.max_retries:
            raise EvaluationError("too many sampling retries")
        point = {n: float(rng.uniform(*sampler.bounds(n))) for n in names}
        ok = yield point
        if ok is not False:
            emitted += 1


def is_zero_many(
    nfs: Sequence[NormalForm],
    sampler: SampleConfig,
    labels: Sequence[str] | None = None,
    names: Iterable[str] = (),
) -> Verdict:
    """Zero test of several normal forms at shared sample points.

    ``names`` adds coordinates to every sample point, so that a witness is
    a full point of a chart even when the residual is constant.
    """
    nfs = [normalize(n) for n in nfs]
    live = [(i, n) for i, n in enumerate(nfs) if not n.is_zero()]
    if not live:
        return ProvedZero()
    names = sorted(set(names).union(*(n.variables() for _, n in live)))
    worst_value = 0.0
    gen = sample_points(names, sampler)
    point = next(gen)
    checked = 0
    while True:
        try:
            values = []
            for i, n in live:
                total, scale = n._evaluate_with_scale(point)
                values.append((i, total, scale))
        except (PoleError, OverflowError, ValueError):
            try:
                point = gen.send(False)
            except StopIteration:
                break
            continue
        for i, total, scale in values:
            if abs(total) > sampler.tol * max(1.0, scale):
                return NonzeroWitness(dict(point), total, "" if labels is None else labels[i])
            worst_value = max(worst_value, abs(total))
        checked += 1
        try:
            point = gen.send(True)
        except StopIteration:
            break
    return SampledZero(checked, worst_value)


def is_zero(e, sampler: SampleConfig | None = None) -> Verdict:
    """Two-tier zero test.

    ``ProvedZero`` when the normal form is empty; otherwise ``SampledZero``
    when every sampled value is within ``tol`` (scaled by the magnitude of
    the largest cancelling terms, floored at one), else a ``NonzeroWitness``.
    Points landing on a pole are redrawn.
    """
    return is_zero_many([normalize(e)], sampler or SampleConfig())
