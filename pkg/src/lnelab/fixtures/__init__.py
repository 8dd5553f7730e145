"""Shipped example sets with annotated expected values."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from ..exceptions import DocumentError, UnknownFixtureError
from ..radius import RadiusFunction, parse_radius_document
from ..semialgebraic import SemialgebraicSet, parse_set_document

PROVENANCE_TAGS = ("PAPER", "TRIVIAL", "DERIVED")


@dataclass(frozen=True)
class Expectation:
    quantity: str
    value: object
    tolerance: dict
    provenance: str
    conditions: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.provenance not in PROVENANCE_TAGS:
            raise DocumentError(f"bad provenance tag {self.provenance!r}")
        if not self.tolerance or not set(self.tolerance) <= {"abs", "rel"}:
            raise DocumentError(f"expectation {self.quantity!r} needs an abs or rel tolerance")

    def allowed(self) -> float:
        if "abs" in self.tolerance:
            return float(self.tolerance["abs"])
        return float(self.tolerance["rel"]) * abs(float(self.value))

    def check(self, measured) -> bool:
        if isinstance(self.value, str):
            return str(measured) == self.value
        return abs(float(measured) - float(self.value)) <= self.allowed()


@dataclass(frozen=True, eq=False)
class Fixture:
    name: str
    description: str
    set: SemialgebraicSet
    rho: RadiusFunction
    expectations: tuple
    control_rho: RadiusFunction | None = None
    flow: dict | None = None
    variant: str | None = None
    set_document: dict = field(default_factory=dict)
    rho_document: dict = field(default_factory=dict)

    def expect(self, quantity: str, **conditions) -> Expectation:
        for e in self.expectations:
            if e.quantity == quantity and all(e.conditions.get(k) == v for k, v in conditions.items()):
                return e
        raise KeyError(f"{self.name} has no expectation {quantity!r} {conditions or ''}")

    @property
    def lipschitz_rho(self) -> RadiusFunction:
        """rho itself when Lipschitz, else the control radius shipped with the fixture."""
        if self.rho.declared_lipschitz or self.control_rho is None:
            return self.rho
        return self.control_rho

    @property
    def flow_rho(self) -> RadiusFunction | None:
        if self.flow is None:
            return None
        doc = self.flow.get("rho")
        return self.rho if doc is None else parse_radius_document(doc, self.set.variables)


def _data():
    return resources.files(__name__).joinpath("data")


def list_fixtures() -> list[str]:
    return sorted(p.name[:-5] for p in _data().iterdir()
                  if p.name.endswith(".json") and not p.name.endswith(".expectations.json"))


def load_fixture(name: str, variant: str | None = None) -> Fixture:
    """Parse a shipped fixture. ``variant`` picks an alternative defining
    polynomial where the fixture offers several (e.g. exponents of parusinski_t)."""
    if name not in list_fixtures():
        raise UnknownFixtureError(f"unknown fixture {name!r}; available: {', '.join(list_fixtures())}")
    doc = json.loads(_data().joinpath(f"{name}.json").read_text())
    side = json.loads(_data().joinpath(f"{name}.expectations.json").read_text())
    set_doc = doc["set"]
    if variant is not None:
        variants = doc.get("variants", {})
        if variant not in variants:
            raise UnknownFixtureError(f"{name} has no variant {variant!r}; available: "
                                      f"{', '.join(variants) or 'none'}")
        set_doc = json.loads(json.dumps(set_doc))
        set_doc["regions"][0]["conjuncts"][0]["poly"] = variants[variant]
    s = parse_set_document(set_doc)
    rho = parse_radius_document(doc["rho"], s.variables)
    control = doc.get("control_rho")
    exps = []
    for e in side["expectations"]:
        e = dict(e)
        exps.append(Expectation(e.pop("quantity"), e.pop("value"), e.pop("tolerance"),
                                e.pop("provenance"), e))
    return Fixture(name, doc.get("description", ""), s, rho, tuple(exps),
                   None if control is None else parse_radius_document(control, s.variables),
                   doc.get("flow"), variant, set_doc, doc["rho"])
