"""Sparse multivariate polynomials with exact rational coefficients.

Coefficients are kept as :class:`fractions.Fraction`; evaluation happens in
float64 and is vectorised over arrays of points.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .exceptions import DimensionError, ParseError

Exponent = tuple  # tuple[int, ...]


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(value)
    return Fraction(value)


@dataclass(frozen=True, eq=False)
class Polynomial:
    """Immutable sparse polynomial in ``ambient_dim`` variables.

    ``terms`` maps exponent tuples to non-zero rational coefficients. Use
    :meth:`from_terms` to build one from arbitrary input; it drops zero
    coefficients and validates exponent lengths.
    """

    ambient_dim: int
    terms: Mapping[Exponent, Fraction]

    @classmethod
    def from_terms(cls, ambient_dim: int, terms: Mapping | Iterable = ()) -> "Polynomial":
        if ambient_dim < 1:
            raise DimensionError("ambient_dim must be positive")
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Exponent, Fraction] = {}
        for exp, coef in items:
            exp = tuple(int(e) for e in exp)
            if len(exp) != ambient_dim:
                raise DimensionError(
                    f"exponent {exp} has length {len(exp)}, expected {ambient_dim}")
            if any(e < 0 for e in exp):
                raise ValueError(f"negative exponent in {exp}")
            acc[exp] = acc.get(exp, Fraction(0)) + _as_fraction(coef)
        clean = {e: c for e, c in sorted(acc.items(), key=_term_order) if c != 0}
        return cls(ambient_dim, clean)

    @classmethod
    def zero(cls, n: int) -> "Polynomial":
        return cls.from_terms(n)

    @classmethod
    def constant(cls, n: int, value) -> "Polynomial":
        return cls.from_terms(n, {(0,) * n: value})

    @classmethod
    def variable(cls, n: int, index: int) -> "Polynomial":
        exp = [0] * n
        exp[index] = 1
        return cls.from_terms(n, {tuple(exp): 1})

    # -- algebra -----------------------------------------------------------
    def _check_same(self, other: "Polynomial"):
        if self.ambient_dim != other.ambient_dim:
            raise DimensionError("polynomials live in different ambient dimensions")

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._check_same(other)
            return other
        return Polynomial.constant(self.ambient_dim, other)

    def __add__(self, other):
        other = self._coerce(other)
        return Polynomial.from_terms(
            self.ambient_dim, list(self.terms.items()) + list(other.terms.items()))

    __radd__ = __add__

    def __neg__(self):
        return Polynomial.from_terms(self.ambient_dim, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        out = []
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                out.append((tuple(a + b for a, b in zip(e1, e2)), c1 * c2))
        return Polynomial.from_terms(self.ambient_dim, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = Polynomial.constant(self.ambient_dim, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.ambient_dim == other.ambient_dim and dict(self.terms) == dict(other.terms)

    def __hash__(self):
        return hash((self.ambient_dim, tuple(self.terms.items())))

    def __repr__(self):
        return f"Polynomial({self.ambient_dim}, {to_string(self)!r})"

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    @property
    def is_affine(self) -> bool:
        return self.degree <= 1

    def derivative(self, index: int) -> "Polynomial":
        out = []
        for exp, coef in self.terms.items():
            k = exp[index]
            if k:
                e = list(exp)
                e[index] = k - 1
                out.append((tuple(e), coef * k))
        return Polynomial.from_terms(self.ambient_dim, out)

    def compose_linear(self, matrix) -> "Polynomial":
        """Return ``x -> p(M x)`` for a square matrix of rationals."""
        n = self.ambient_dim
        m = [[_as_fraction(v) for v in row] for row in matrix]
        if len(m) != n or any(len(row) != n for row in m):
            raise DimensionError("substitution matrix must be n x n")
        images = [Polynomial.from_terms(n, {tuple(int(k == j) for k in range(n)): m[i][j]
                                            for j in range(n)}) for i in range(n)]
        result = Polynomial.zero(n)
        for exp, coef in self.terms.items():
            term = Polynomial.constant(n, coef)
            for i, k in enumerate(exp):
                if k:
                    term = term * images[i] ** k
            result = result + term
        return result

    # -- numerics ----------------------------------------------------------
    @cached_property
    def _exponents(self) -> np.ndarray:
        if not self.terms:
            return np.zeros((0, self.ambient_dim), dtype=np.int64)
        return np.array(list(self.terms), dtype=np.int64)

    @cached_property
    def _coefficients(self) -> np.ndarray:
        return np.array([float(c) for c in self.terms.values()], dtype=float)

    @cached_property
    def _gradient_polys(self) -> tuple:
        return tuple(self.derivative(i) for i in range(self.ambient_dim))

    def _points(self, x) -> tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[1] != self.ambient_dim:
            raise DimensionError(
                f"point has dimension {x.shape[1]}, polynomial expects {self.ambient_dim}")
        return x, single

    def monomials(self, x) -> np.ndarray:
        """Values of the monomials times their coefficients, shape (m, n_terms)."""
        x, _ = self._points(x)
        if not self.terms:
            return np.zeros((x.shape[0], 0))
        mono = np.prod(x[:, None, :] ** self._exponents[None, :, :], axis=2)
        return mono * self._coefficients

    def __call__(self, x):
        x, single = self._points(x)
        vals = self.monomials(x).sum(axis=1)
        return float(vals[0]) if single else vals

    def scale(self, x):
        """Relative-tolerance scale: 1 + magnitude of the largest term at x."""
        x, single = self._points(x)
        terms = np.abs(self.monomials(x))
        vals = 1.0 + (terms.max(axis=1) if terms.shape[1] else np.zeros(x.shape[0]))
        return float(vals[0]) if single else vals

    def gradient(self, x) -> np.ndarray:
        x, single = self._points(x)
        g = np.stack([d(x) if not d.is_zero else np.zeros(x.shape[0])
                      for d in self._gradient_polys], axis=1)
        return g[0] if single else g

    def interval(self, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Natural interval enclosure of the polynomial over boxes ``[lo, hi]`` (shape (B, n))."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        out_lo = np.zeros(lo.shape[0])
        out_hi = np.zeros(lo.shape[0])
        for exp, coef in zip(self._exponents, self._coefficients):
            t_lo = np.ones(lo.shape[0])
            t_hi = np.ones(lo.shape[0])
            for i, k in enumerate(exp):
                if k == 0:
                    continue
                p_lo, p_hi = interval_power(lo[:, i], hi[:, i], int(k))
                t_lo, t_hi = interval_mul(t_lo, t_hi, p_lo, p_hi)
            if coef >= 0:
                out_lo += coef * t_lo
                out_hi += coef * t_hi
            else:
                out_lo += coef * t_hi
                out_hi += coef * t_lo
        return out_lo, out_hi


def _term_order(item):
    exp = item[0]
    return (-sum(exp), tuple(-e for e in exp))


def interval_power(lo, hi, k: int):
    a = lo ** k
    b = hi ** k
    if k % 2:
        return a, b
    low = np.where((lo <= 0) & (hi >= 0), 0.0, np.minimum(a, b))
    return low, np.maximum(a, b)


def interval_mul(a_lo, a_hi, b_lo, b_hi):
    c = np.stack([a_lo * b_lo, a_lo * b_hi, a_hi * b_lo, a_hi * b_hi])
    return c.min(axis=0), c.max(axis=0)


def eval_poly(p: Polynomial, point: Sequence[float]) -> float:
    point = np.asarray(point, dtype=float)
    if point.ndim != 1 or point.shape[0] != p.ambient_dim:
        raise DimensionError(f"expected a point of length {p.ambient_dim}")
    return p(point)


def gradient_poly(p: Polynomial, point: Sequence[float]) -> np.ndarray:
    point = np.asarray(point, dtype=float)
    if point.ndim != 1 or point.shape[0] != p.ambient_dim:
        raise DimensionError(f"expected a point of length {p.ambient_dim}")
    return p.gradient(point)


# -- printing --------------------------------------------------------------
def default_variables(n: int) -> list[str]:
    return [f"x{i + 1}" for i in range(n)]


def _format_coef(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def to_string(p: Polynomial, variables: Sequence[str] | None = None) -> str:
    """Render ``p`` in the syntax accepted by :func:`parse_polynomial`."""
    variables = list(variables) if variables is not None else default_variables(p.ambient_dim)
    if p.is_zero:
        return "0"
    chunks = []
    for exp, coef in p.terms.items():
        factors = []
        for name, k in zip(variables, exp):
            if k == 1:
                factors.append(name)
            elif k > 1:
                factors.append(f"{name}^{k}")
        mag = abs(coef)
        if not factors:
            body = _format_coef(mag)
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = "*".join([_format_coef(mag)] + factors)
        if not chunks:
            chunks.append(("-" if coef < 0 else "") + body)
        else:
            chunks.append(("- " if coef < 0 else "+ ") + body)
    return " ".join(chunks)


# -- parsing ---------------------------------------------------------------
_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?|\.\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>\*\*|[-+*/^()]))")


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "ident", "op", "end"
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        start = m.start(kind)
        value = m.group(kind)
        if kind == "op" and value == "**":
            value = "^"
        tokens.append(Token(kind, value, start))
        pos = m.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class _TokenStream:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def accept(self, op: str) -> bool:
        tok = self.peek
        if tok.kind == "op" and tok.text == op:
            self.i += 1
            return True
        return False

    def expect(self, op: str):
        if not self.accept(op):
            tok = self.peek
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            raise ParseError(f"expected {op!r}, found {found}", tok.pos, self.text)

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.peek
        raise ParseError(message, tok.pos, self.text)


def parse_number(text: str) -> Fraction:
    return Fraction(text)


class _PolyParser:
    """Recursive-descent parser; grammar::

        expr   := term (('+' | '-') term)*
        term   := factor (('*' | '/') factor)*
        factor := ('+' | '-') factor | power
        power  := atom ('^' INT)?
        atom   := NUMBER | NAME | '(' expr ')'
    """

    def __init__(self, text: str, variables: Sequence[str]):
        self.stream = _TokenStream(text)
        self.variables = list(variables)
        if len(set(self.variables)) != len(self.variables):
            raise ValueError("duplicate variable names")
        self.n = len(self.variables)

    def parse(self) -> Polynomial:
        if self.stream.peek.kind == "end":
            self.stream.error("empty expression")
        p = self.expr()
        tok = self.stream.peek
        if tok.kind != "end":
            self.stream.error(f"unexpected token {tok.text!r}")
        return p

    def expr(self) -> Polynomial:
        p = self.term()
        while True:
            if self.stream.accept("+"):
                p = p + self.term()
            elif self.stream.accept("-"):
                p = p - self.term()
            else:
                return p

    def term(self) -> Polynomial:
        p = self.factor()
        while True:
            if self.stream.accept("*"):
                p = p * self.factor()
            elif self.stream.peek.kind == "op" and self.stream.peek.text == "/":
                tok = self.stream.next()
                d = self.factor()
                if d.degree > 0 or d.is_zero:
                    self.stream.error("division is only allowed by a non-zero constant", tok)
                p = p * (1 / d.terms[(0,) * self.n])
            else:
                return p

    def factor(self) -> Polynomial:
        if self.stream.accept("-"):
            return -self.factor()
        if self.stream.accept("+"):
            return self.factor()
        return self.power()

    def power(self) -> Polynomial:
        base = self.atom()
        if self.stream.accept("^"):
            return base ** self.exponent()
        return base

    def exponent(self) -> int:
        tok = self.stream.peek
        if tok.kind == "op" and tok.text == "-":
            self.stream.error("negative exponent", tok)
        if tok.kind == "op" and tok.text == "(":
            self.stream.error("exponent must be a non-negative integer literal", tok)
        if tok.kind != "num":
            self.stream.error("expected an integer exponent", tok)
        self.stream.next()
        if not tok.text.isdigit():
            self.stream.error("fractional exponent", tok)
        after = self.stream.peek
        if after.kind == "op" and after.text == "/":
            self.stream.error("fractional exponent", tok)
        return int(tok.text)

    def atom(self) -> Polynomial:
        tok = self.stream.next()
        if tok.kind == "num":
            return Polynomial.constant(self.n, parse_number(tok.text))
        if tok.kind == "ident":
            if tok.text not in self.variables:
                self.stream.error(f"unknown variable {tok.text!r}", tok)
            return Polynomial.variable(self.n, self.variables.index(tok.text))
        if tok.kind == "op" and tok.text == "(":
            p = self.expr()
            self.stream.expect(")")
            return p
        if tok.kind == "end":
            self.stream.error("unexpected end of input", tok)
        self.stream.error(f"unexpected token {tok.text!r}", tok)


def parse_polynomial(text: str, variables: Sequence[str]) -> Polynomial:
    """Parse ``text`` into a :class:`Polynomial` over the ordered ``variables``.

    >>> to_string(parse_polynomial("z^2 - t^2*x*x", ["t", "x", "z"]), ["t", "x", "z"])
    '-t^2*x^2 + z^2'
    """
    if not variables:
        raise ValueError("at least one variable is required")
    return _PolyParser(text, variables).parse()
