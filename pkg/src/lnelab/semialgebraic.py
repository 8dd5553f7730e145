"""Sign-condition descriptions of semialgebraic sets and membership tests."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .exceptions import DimensionError, DocumentError, ParseError
from .polynomial import Polynomial, default_variables, parse_polynomial, to_string


class Relation(enum.Enum):
    EQ0 = "=0"
    GE0 = ">=0"
    GT0 = ">0"
    LE0 = "<=0"
    LT0 = "<0"

    @classmethod
    def from_text(cls, text: str) -> "Relation":
        aliases = {"==0": "=0", "≥0": ">=0", "≤0": "<=0"}
        text = aliases.get(text.replace(" ", ""), text.replace(" ", ""))
        for rel in cls:
            if rel.value == text:
                return rel
        raise DocumentError(f"unknown relation {text!r}; expected one of "
                            + ", ".join(r.value for r in cls))

    @property
    def is_equality(self) -> bool:
        return self is Relation.EQ0


@dataclass(frozen=True)
class SignCondition:
    poly: Polynomial
    relation: Relation

    def violation(self, x) -> np.ndarray:
        """Non-negative amount by which the condition fails at each point."""
        v = self.poly(np.atleast_2d(x))
        if self.relation is Relation.EQ0:
            return np.abs(v)
        if self.relation in (Relation.GE0, Relation.GT0):
            return np.maximum(-v, 0.0)
        return np.maximum(v, 0.0)

    def as_ge(self) -> Polynomial:
        """Polynomial g with the (closed) condition equivalent to g >= 0."""
        if self.relation in (Relation.LE0, Relation.LT0):
            return -self.poly
        return self.poly


Region = tuple  # tuple[SignCondition, ...]


class Membership(NamedTuple):
    status: str  # "inside" | "boundary_band" | "outside"
    margin: float
    region: int


@dataclass(frozen=True)
class SemialgebraicSet:
    """Finite union over ``regions`` of conjunctions of sign conditions."""

    ambient_dim: int
    regions: tuple
    variables: tuple = field(default=())

    def __post_init__(self):
        if self.ambient_dim < 1:
            raise DimensionError("ambient_dim must be positive")
        if not self.regions:
            raise DocumentError("a set needs at least one region")
        regions = tuple(tuple(r) for r in self.regions)
        for region in regions:
            if not region:
                raise DocumentError("regions must contain at least one condition")
            for cond in region:
                if cond.poly.ambient_dim != self.ambient_dim:
                    raise DimensionError("condition polynomial has the wrong ambient dimension")
        object.__setattr__(self, "regions", regions)
        if not self.variables:
            object.__setattr__(self, "variables", tuple(default_variables(self.ambient_dim)))
        elif len(self.variables) != self.ambient_dim:
            raise DimensionError("variables must have length ambient_dim")

    def equalities(self, region: int) -> list[Polynomial]:
        return [c.poly for c in self.regions[region] if c.relation.is_equality]

    def inequalities(self, region: int) -> list[SignCondition]:
        return [c for c in self.regions[region] if not c.relation.is_equality]

    def with_condition(self, cond: SignCondition) -> "SemialgebraicSet":
        return SemialgebraicSet(self.ambient_dim, tuple(r + (cond,) for r in self.regions),
                                self.variables)

    def compose_linear(self, matrix) -> "SemialgebraicSet":
        """Preimage of the set under ``x -> M x``."""
        regions = tuple(tuple(SignCondition(c.poly.compose_linear(matrix), c.relation) for c in r)
                        for r in self.regions)
        return SemialgebraicSet(self.ambient_dim, regions, self.variables)

    # -- vectorised membership -------------------------------------------
    def _check(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.ambient_dim:
            raise DimensionError(f"points have dimension {x.shape[1]}, set lives in "
                                 f"dimension {self.ambient_dim}")
        return x

    def region_residuals(self, x) -> np.ndarray:
        """Worst scaled violation per region, shape (m, n_regions)."""
        x = self._check(x)
        out = np.zeros((x.shape[0], len(self.regions)))
        for k, region in enumerate(self.regions):
            for cond in region:
                res = cond.violation(x) / cond.poly.scale(x)
                np.maximum(out[:, k], res, out=out[:, k])
        return out

    def region_distances(self, x) -> np.ndarray:
        """First-order distance estimate |violation| / |grad| per region, shape (m, n_regions).

        Conditions satisfied exactly contribute 0; violated conditions at a
        critical point of their polynomial contribute +inf.
        """
        x = self._check(x)
        out = np.zeros((x.shape[0], len(self.regions)))
        for k, region in enumerate(self.regions):
            for cond in region:
                viol = cond.violation(x)
                g = np.linalg.norm(cond.poly.gradient(x), axis=1)
                with np.errstate(divide="ignore", invalid="ignore"):
                    d = np.where(viol > 0, viol / g, 0.0)
                d = np.where((viol > 0) & (g == 0), np.inf, d)
                np.maximum(out[:, k], d, out=out[:, k])
        return out

    def region_mask(self, x, tol: float) -> np.ndarray:
        return self.region_residuals(x) <= tol

    def contains(self, x, tol: float, band: float | None = None) -> np.ndarray:
        """Vectorised membership: True where a point is inside or within the band."""
        inside = self.region_mask(x, tol)
        if band is not None:
            inside = inside | (self.region_distances(x) <= band)
        return inside.any(axis=1)

    def membership(self, point, tol: float, band: float | None = None) -> Membership:
        return membership(self, point, tol, band)


def membership(s: SemialgebraicSet, point, tol: float, band: float | None = None) -> Membership:
    """Classify a single point.

    A region passes when every condition's violation is at most ``tol`` times
    the polynomial's scale at the point (``inside``). When ``band`` is given,
    a point failing that test is ``boundary_band`` if the first-order
    distance to every violated condition is at most ``band``. ``margin`` is
    ``tol`` minus the worst scaled violation in the best region.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    point = np.asarray(point, dtype=float)
    if point.ndim != 1 or point.shape[0] != s.ambient_dim:
        raise DimensionError(f"expected a point of length {s.ambient_dim}")
    res = s.region_residuals(point)[0]
    best = int(np.argmin(res))
    margin = float(tol - res[best])
    if res[best] <= tol:
        return Membership("inside", margin, best)
    if band is not None:
        dist = s.region_distances(point)[0]
        ok = (res <= tol) | (dist <= band)
        if ok.any():
            return Membership("boundary_band", margin, int(np.flatnonzero(ok)[0]))
    return Membership("outside", margin, best)


# -- JSON documents ------------------------------------------------------------
def parse_set_document(doc: dict) -> SemialgebraicSet:
    """Build a set from ``{"ambient_dim", "variables", "regions": [{"conjuncts": [...]}]}``."""
    if not isinstance(doc, dict):
        raise DocumentError("set document must be a JSON object")
    try:
        n = int(doc["ambient_dim"])
        regions_doc = doc["regions"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentError(f"set document is missing a field: {exc}") from exc
    variables = doc.get("variables") or default_variables(n)
    if len(variables) != n:
        raise DocumentError(f"{len(variables)} variables given for ambient_dim {n}")
    if not isinstance(regions_doc, list) or not regions_doc:
        raise DocumentError("'regions' must be a non-empty list")
    regions = []
    for i, region in enumerate(regions_doc):
        conjuncts = region.get("conjuncts") if isinstance(region, dict) else region
        if not isinstance(conjuncts, list) or not conjuncts:
            raise DocumentError(f"region {i} has no conjuncts")
        conds = []
        for j, c in enumerate(conjuncts):
            if not isinstance(c, dict) or "poly" not in c or "rel" not in c:
                raise DocumentError(f"region {i} conjunct {j} needs 'poly' and 'rel'")
            try:
                poly = parse_polynomial(str(c["poly"]), variables)
            except ParseError as exc:
                raise ParseError(f"region {i} conjunct {j}: {exc.args[0]}") from exc
            conds.append(SignCondition(poly, Relation.from_text(str(c["rel"]))))
        regions.append(tuple(conds))
    return SemialgebraicSet(n, tuple(regions), tuple(variables))


def set_to_document(s: SemialgebraicSet) -> dict:
    return {
        "ambient_dim": s.ambient_dim,
        "variables": list(s.variables),
        "regions": [{"conjuncts": [{"poly": to_string(c.poly, s.variables), "rel": c.relation.value}
                                   for c in region]} for region in s.regions],
    }


def load_set(path) -> SemialgebraicSet:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DocumentError(f"{path}: invalid JSON: {exc}") from exc
    return parse_set_document(doc)


def make_set(variables: Sequence[str], regions: Sequence[Sequence[tuple[str, str]]]) -> SemialgebraicSet:
    """Shorthand: ``make_set(["x", "y"], [[("y", "=0"), ("x", ">=0")]])``."""
    return parse_set_document({
        "ambient_dim": len(variables),
        "variables": list(variables),
        "regions": [{"conjuncts": [{"poly": p, "rel": r} for p, r in region]} for region in regions],
    })
