"""Radius functions: evaluable rho with rho(x) ~ |x| near the origin."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exceptions import DimensionError, DocumentError, ParseError, RadiusDomainError
from .polynomial import _TokenStream, default_variables, interval_mul, interval_power, parse_number


class RadiusKind(enum.Enum):
    EUCLIDEAN = "euclidean"
    MAXNORM = "maxnorm"
    COORDINATE = "coordinate"
    COMPOSITE = "composite"


# -- expression tree -----------------------------------------------------------
# Every node implements value(x) -> (m,), grad(x) -> (m, n) and
# interval(lo, hi) -> (lo, hi) for boxes of shape (B, n).

@dataclass(frozen=True)
class Const:
    value: Fraction

    def value_at(self, x):
        return np.full(x.shape[0], float(self.value))

    def grad(self, x):
        return np.zeros_like(x)

    def interval(self, lo, hi):
        v = np.full(lo.shape[0], float(self.value))
        return v, v


@dataclass(frozen=True)
class Coord:
    index: int

    def value_at(self, x):
        return x[:, self.index].copy()

    def grad(self, x):
        g = np.zeros_like(x)
        g[:, self.index] = 1.0
        return g

    def interval(self, lo, hi):
        return lo[:, self.index].copy(), hi[:, self.index].copy()


@dataclass(frozen=True)
class Norm2:
    def value_at(self, x):
        return np.hypot.reduce(x, axis=1)  # no underflow for tiny x

    def grad(self, x):
        nrm = np.hypot.reduce(x, axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(nrm > 0, x / nrm, 0.0)

    def interval(self, lo, hi):
        near = np.where(lo > 0, lo, np.where(hi < 0, -hi, 0.0))
        far = np.maximum(np.abs(lo), np.abs(hi))
        return np.hypot.reduce(near, axis=1), np.hypot.reduce(far, axis=1)


@dataclass(frozen=True)
class NormInf:
    def value_at(self, x):
        return np.abs(x).max(axis=1)

    def grad(self, x):
        idx = np.argmax(np.abs(x), axis=1)
        g = np.zeros_like(x)
        rows = np.arange(x.shape[0])
        g[rows, idx] = np.sign(x[rows, idx])
        return g

    def interval(self, lo, hi):
        near = np.where(lo > 0, lo, np.where(hi < 0, -hi, 0.0))
        far = np.maximum(np.abs(lo), np.abs(hi))
        return near.max(axis=1), far.max(axis=1)


@dataclass(frozen=True)
class Add:
    terms: tuple

    def value_at(self, x):
        return sum(t.value_at(x) for t in self.terms)

    def grad(self, x):
        return sum(t.grad(x) for t in self.terms)

    def interval(self, lo, hi):
        parts = [t.interval(lo, hi) for t in self.terms]
        return sum(p[0] for p in parts), sum(p[1] for p in parts)


@dataclass(frozen=True)
class Mul:
    factors: tuple

    def value_at(self, x):
        out = np.ones(x.shape[0])
        for f in self.factors:
            out = out * f.value_at(x)
        return out

    def grad(self, x):
        vals = [f.value_at(x) for f in self.factors]
        g = np.zeros_like(x)
        for i, f in enumerate(self.factors):
            others = np.ones(x.shape[0])
            for j, v in enumerate(vals):
                if j != i:
                    others = others * v
            g = g + others[:, None] * f.grad(x)
        return g

    def interval(self, lo, hi):
        out_lo = np.ones(lo.shape[0])
        out_hi = np.ones(lo.shape[0])
        for f in self.factors:
            f_lo, f_hi = f.interval(lo, hi)
            out_lo, out_hi = interval_mul(out_lo, out_hi, f_lo, f_hi)
        return out_lo, out_hi


@dataclass(frozen=True)
class Pow:
    """``base ** exponent``; non-integer exponents need a non-negative base."""

    base: object
    exponent: Fraction

    @property
    def integral(self) -> bool:
        return self.exponent.denominator == 1

    def _base_values(self, x):
        b = self.base.value_at(x)
        if not self.integral:
            if np.any(b < -1e-12 * (1.0 + np.abs(b))):
                raise RadiusDomainError(
                    f"rational power {self.exponent} of a negative sub-expression")
            b = np.maximum(b, 0.0)
        return b

    def value_at(self, x):
        b = self._base_values(x)
        if self.integral:
            return b ** int(self.exponent)
        return b ** float(self.exponent)

    def grad(self, x):
        b = self._base_values(x)
        e = float(self.exponent)
        with np.errstate(divide="ignore", invalid="ignore"):
            factor = e * b ** (e - 1.0) if e != 1 else np.ones_like(b)
        return factor[:, None] * self.base.grad(x)

    def interval(self, lo, hi):
        b_lo, b_hi = self.base.interval(lo, hi)
        if self.integral:
            return interval_power(b_lo, b_hi, int(self.exponent))
        e = float(self.exponent)
        return np.maximum(b_lo, 0.0) ** e, np.maximum(b_hi, 0.0) ** e


def _neg(node):
    return Mul((Const(Fraction(-1)), node))


class _RadiusParser:
    """Same grammar as polynomials plus the atoms ``norm``/``norm2`` (Euclidean),
    ``maxnorm``/``norminf`` and rational exponents written ``^(p/q)``."""

    EUCLID = {"norm", "norm2"}
    MAXN = {"maxnorm", "norminf"}

    def __init__(self, text, variables):
        self.stream = _TokenStream(text)
        self.variables = list(variables)

    def parse(self):
        if self.stream.peek.kind == "end":
            self.stream.error("empty expression")
        node = self.expr()
        if self.stream.peek.kind != "end":
            self.stream.error(f"unexpected token {self.stream.peek.text!r}")
        return node

    def expr(self):
        terms = [self.term()]
        while True:
            if self.stream.accept("+"):
                terms.append(self.term())
            elif self.stream.accept("-"):
                terms.append(_neg(self.term()))
            else:
                return terms[0] if len(terms) == 1 else Add(tuple(terms))

    def term(self):
        factors = [self.factor()]
        while True:
            if self.stream.accept("*"):
                factors.append(self.factor())
            elif self.stream.peek.kind == "op" and self.stream.peek.text == "/":
                tok = self.stream.next()
                d = self.factor()
                if not isinstance(d, Const) or d.value == 0:
                    self.stream.error("division is only allowed by a non-zero constant", tok)
                factors.append(Const(1 / d.value))
            else:
                return factors[0] if len(factors) == 1 else Mul(tuple(factors))

    def factor(self):
        if self.stream.accept("-"):
            return _neg(self.factor())
        if self.stream.accept("+"):
            return self.factor()
        base = self.atom()
        if self.stream.accept("^"):
            return Pow(base, self.exponent())
        return base

    def exponent(self) -> Fraction:
        tok = self.stream.peek
        if self.stream.accept("("):
            num = self.stream.next()
            if num.kind != "num":
                self.stream.error("expected a rational exponent", num)
            value = parse_number(num.text)
            if self.stream.accept("/"):
                den = self.stream.next()
                if den.kind != "num" or parse_number(den.text) == 0:
                    self.stream.error("expected a non-zero denominator", den)
                value = value / parse_number(den.text)
            self.stream.expect(")")
        elif tok.kind == "num":
            self.stream.next()
            value = parse_number(tok.text)
        else:
            self.stream.error("expected an exponent", tok)
        if value <= 0:
            self.stream.error("exponent must be positive", tok)
        return value

    def atom(self):
        tok = self.stream.next()
        if tok.kind == "num":
            return Const(parse_number(tok.text))
        if tok.kind == "ident":
            name = tok.text
            if name in self.EUCLID or name in self.MAXN:
                if self.stream.accept("("):
                    self.stream.expect(")")
                return Norm2() if name in self.EUCLID else NormInf()
            if name not in self.variables:
                self.stream.error(f"unknown variable {name!r}", tok)
            return Coord(self.variables.index(name))
        if tok.kind == "op" and tok.text == "(":
            node = self.expr()
            self.stream.expect(")")
            return node
        self.stream.error("unexpected end of input" if tok.kind == "end"
                          else f"unexpected token {tok.text!r}", tok)


def parse_radius_expression(text: str, variables: Sequence[str]):
    return _RadiusParser(text, variables).parse()


# -- RadiusFunction ---------------------------------------------------------------
@dataclass(frozen=True)
class RadiusFunction:
    """A radius function on R^n.

    ``kind`` selects the evaluator; ``index`` is used by COORDINATE and
    ``expr`` (a node tree) by COMPOSITE. ``declared_lipschitz`` records what
    the caller claims; it is never verified symbolically.
    """

    kind: RadiusKind
    ambient_dim: int
    index: int | None = None
    expr: object = None
    declared_lipschitz: bool = True
    text: str = ""

    def __post_init__(self):
        if self.kind is RadiusKind.COORDINATE:
            if self.index is None or not 0 <= self.index < self.ambient_dim:
                raise DimensionError("coordinate radius needs an index inside the ambient dimension")
        if self.kind is RadiusKind.COMPOSITE and self.expr is None:
            raise DocumentError("composite radius needs an expression")

    @classmethod
    def euclidean(cls, n: int) -> "RadiusFunction":
        return cls(RadiusKind.EUCLIDEAN, n, text="norm")

    @classmethod
    def maxnorm(cls, n: int) -> "RadiusFunction":
        return cls(RadiusKind.MAXNORM, n, text="maxnorm")

    @classmethod
    def coordinate(cls, n: int, index: int) -> "RadiusFunction":
        return cls(RadiusKind.COORDINATE, n, index=index, text=f"x{index + 1}")

    @classmethod
    def composite(cls, text: str, variables: Sequence[str], lipschitz: bool = True) -> "RadiusFunction":
        expr = parse_radius_expression(text, variables)
        return cls(RadiusKind.COMPOSITE, len(variables), expr=expr,
                   declared_lipschitz=lipschitz, text=text)

    @property
    def node(self):
        if self.kind is RadiusKind.EUCLIDEAN:
            return Norm2()
        if self.kind is RadiusKind.MAXNORM:
            return NormInf()
        if self.kind is RadiusKind.COORDINATE:
            return Coord(self.index)
        return self.expr

    def _points(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[1] != self.ambient_dim:
            raise DimensionError(
                f"point has dimension {x.shape[1]}, radius function expects {self.ambient_dim}")
        return x, single

    def __call__(self, x):
        x, single = self._points(x)
        v = self.node.value_at(x)
        return float(v[0]) if single else v

    def gradient(self, x):
        x, single = self._points(x)
        g = self.node.grad(x)
        return g[0] if single else g

    def interval(self, lo, hi):
        return self.node.interval(np.asarray(lo, float), np.asarray(hi, float))

    def describe(self) -> str:
        if self.kind is RadiusKind.COORDINATE:
            return f"coordinate({self.index})"
        if self.kind is RadiusKind.COMPOSITE:
            return f"composite({self.text})"
        return self.kind.value


def eval_radius(rho: RadiusFunction, point) -> float:
    """Evaluate rho at one point; a negative COORDINATE value is an error."""
    point = np.asarray(point, dtype=float)
    if point.ndim != 1 or point.shape[0] != rho.ambient_dim:
        raise DimensionError(f"expected a point of length {rho.ambient_dim}")
    value = rho(point)
    if value < 0:
        if rho.kind is RadiusKind.COORDINATE:
            raise RadiusDomainError(
                f"coordinate radius is negative ({value}) at {point.tolist()}; "
                "it is not a radius function on this set")
        raise RadiusDomainError(f"radius function is negative ({value}) at {point.tolist()}")
    return value


def equivalence_constants(rho: RadiusFunction, points) -> tuple[float, float]:
    """Empirical (c1, c2) with c1*|x| <= rho(x) <= c2*|x| over non-zero ``points``.

    Raises RadiusDomainError if rho is negative anywhere or vanishes at a
    non-zero point.
    """
    x, _ = rho._points(points)
    nrm = np.linalg.norm(x, axis=1)
    x, nrm = x[nrm > 0], nrm[nrm > 0]
    if x.shape[0] == 0:
        raise ValueError("need at least one non-zero point")
    vals = rho(x)
    if np.any(vals <= 0):
        bad = x[np.argmin(vals)]
        raise RadiusDomainError(
            f"radius function is not positive at {bad.tolist()} (value {vals.min()})")
    ratio = vals / nrm
    return float(ratio.min()), float(ratio.max())


def parse_radius_document(doc: dict, variables: Sequence[str] | None = None,
                          ambient_dim: int | None = None) -> RadiusFunction:
    """``{"kind": "euclidean|maxnorm|coordinate|composite", ...}``.

    coordinate takes ``"index"`` (0-based) or ``"variable"``; composite takes
    ``"expr"``. Optional ``"lipschitz": false`` marks a non-Lipschitz rho.
    """
    if not isinstance(doc, dict) or "kind" not in doc:
        raise DocumentError("radius document must be an object with a 'kind'")
    if variables is None:
        variables = doc.get("variables")
    if variables is None:
        if ambient_dim is None:
            raise DocumentError("radius document needs variables or an ambient dimension")
        variables = default_variables(ambient_dim)
    variables = list(variables)
    n = len(variables)
    kind = str(doc["kind"]).lower()
    lipschitz = bool(doc.get("lipschitz", True))
    try:
        if kind == "euclidean":
            rho = RadiusFunction.euclidean(n)
        elif kind == "maxnorm":
            rho = RadiusFunction.maxnorm(n)
        elif kind == "coordinate":
            if "variable" in doc:
                if doc["variable"] not in variables:
                    raise DocumentError(f"unknown variable {doc['variable']!r}")
                idx = variables.index(doc["variable"])
            else:
                idx = int(doc["index"])
            rho = RadiusFunction(RadiusKind.COORDINATE, n, index=idx, text=variables[idx])
        elif kind == "composite":
            return RadiusFunction.composite(str(doc["expr"]), variables, lipschitz)
        else:
            raise DocumentError(f"unknown radius kind {kind!r}")
    except (KeyError, ValueError, TypeError) as exc:
        if isinstance(exc, (DocumentError, ParseError)):
            raise
        raise DocumentError(f"invalid radius document: {exc}") from exc
    if not lipschitz:
        rho = RadiusFunction(rho.kind, rho.ambient_dim, rho.index, rho.expr, False, rho.text)
    return rho


def radius_to_document(rho: RadiusFunction, variables: Sequence[str] | None = None) -> dict:
    variables = list(variables) if variables else default_variables(rho.ambient_dim)
    doc: dict = {"kind": rho.kind.value}
    if rho.kind is RadiusKind.COORDINATE:
        doc["variable"] = variables[rho.index]
    elif rho.kind is RadiusKind.COMPOSITE:
        doc["expr"] = rho.text
    if not rho.declared_lipschitz:
        doc["lipschitz"] = False
    return doc


def load_radius(path, variables=None, ambient_dim=None) -> RadiusFunction:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DocumentError(f"{path}: invalid JSON: {exc}") from exc
    return parse_radius_document(doc, variables, ambient_dim)
