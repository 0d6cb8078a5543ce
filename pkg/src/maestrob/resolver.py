"""Semantic resolution: turn a PDDLS domain/problem pair plus ontology and
scene into runnable plain PDDL.

Constraint predicates that perception cannot observe directly (e.g. whether
a peg fits a hole) are derived from ontology properties by data-driven
rules and materialized as static init facts.  Every derived fact keeps the
numeric checks that produced it so the decision can be audited.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .errors import MissingProperty, ParseError, ResolveError, UncoveredPredicate, UnknownSymbol
from .ontology import BASE, Ontology, Value, expand_uri
from .pddl import ROOT_TYPE, Atom, Domain, Predicate, Problem
from .scene import SceneState, kind_triples

DEFAULT_CLEARANCE = 0.0005


@dataclass(frozen=True)
class Check:
    """One recorded comparison ``lhs <op> rhs``."""

    label: str
    lhs: float | str
    op: str
    rhs: float | str

    def holds(self) -> bool:
        if self.op == "<=":
            return self.lhs <= self.rhs
        if self.op == "==":
            return self.lhs == self.rhs
        raise ValueError(f"unknown comparison {self.op}")

    def __str__(self) -> str:
        return f"{self.label}: {self.lhs!r} {self.op} {self.rhs!r}"


@dataclass(frozen=True)
class ConstraintRule:
    name: str
    param_kinds: tuple[str, ...]
    guard: str
    params: Mapping[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class Provenance:
    rule: str
    guard: str
    uris: tuple[str, ...]
    checks: tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return all(c.holds() for c in self.checks)


@dataclass(frozen=True)
class Evaluation:
    fact: Atom
    provenance: Provenance


@dataclass(frozen=True)
class ResolvedPair:
    domain: Domain
    problem: Problem
    provenance: Mapping[Atom, Provenance]

    def report(self) -> str:
        lines = []
        for fact in sorted(self.provenance):
            prov = self.provenance[fact]
            lines.append(f"{fact} <- {prov.rule}[{prov.guard}] {' '.join(prov.uris)}")
            lines.extend(f"  {check}" for check in prov.checks)
        return "".join(line + "\n" for line in lines)


INSERTABLE = ConstraintRule(
    "insertable", (BASE + "peg", BASE + "hole"), "fits-in-cavity", {"clearance": DEFAULT_CLEARANCE}
)


# ---------------------------------------------------------------------------
# Guards
# ---------------------------------------------------------------------------


def _value(o: Ontology, uri: str, name: str) -> Value:
    pred = BASE + name
    values = [v for v in o.property(uri, pred) if isinstance(v, Value)]
    if not values:
        raise MissingProperty(uri, pred)
    return values[0]


def _number(o: Ontology, uri: str, name: str) -> float:
    v = _value(o, uri, name).value
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise MissingProperty(uri, BASE + name)
    return float(v)


def fits_in_cavity(o: Ontology, uris: Sequence[str], params: Mapping) -> list[Check]:
    """Cross-section test for inserting the first object into the second's cavity."""
    peg, hole = uris
    c = float(params.get("clearance", DEFAULT_CLEARANCE))
    peg_shape = _value(o, peg, "shape").value
    hole_shape = _value(o, hole, "cavity-shape").value
    if peg_shape == "cylinder":
        d = _number(o, peg, "diameter")
        if hole_shape == "cylinder":
            return [Check("diameter <= cavity-diameter - clearance", d, "<=", _number(o, hole, "cavity-diameter") - c)]
        return [
            Check("diameter <= cavity-dx - clearance", d, "<=", _number(o, hole, "cavity-dx") - c),
            Check("diameter <= cavity-dy - clearance", d, "<=", _number(o, hole, "cavity-dy") - c),
        ]
    if peg_shape == "cuboid":
        dx, dy = _number(o, peg, "dx"), _number(o, peg, "dy")
        if hole_shape == "cylinder":
            return [Check("diagonal <= cavity-diameter - clearance", math.hypot(dx, dy), "<=",
                          _number(o, hole, "cavity-diameter") - c)]
        small, large = sorted((dx, dy))
        csmall, clarge = sorted((_number(o, hole, "cavity-dx"), _number(o, hole, "cavity-dy")))
        return [
            Check("short side <= cavity short side - clearance", small, "<=", csmall - c),
            Check("long side <= cavity long side - clearance", large, "<=", clarge - c),
        ]
    raise MissingProperty(peg, BASE + "shape")


def same_property(o: Ontology, uris: Sequence[str], params: Mapping) -> list[Check]:
    name = str(params["property"]).removeprefix(BASE)
    a, b = (_value(o, u, name).value for u in uris)
    return [Check(f"{name} equal", a, "==", b)]


GUARDS: dict[str, Callable[[Ontology, Sequence[str], Mapping], list[Check]]] = {
    "fits-in-cavity": fits_in_cavity,
    "same-property": same_property,
}


def load_rules(text: str) -> list[ConstraintRule]:
    try:
        doc = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ParseError(f"rules: {exc.msg}", exc.lineno) from None
    rules = []
    for entry in doc.get("rules", []):
        try:
            guard = dict(entry["guard"])
            gid = guard.pop("id")
            rule = ConstraintRule(str(entry["name"]), tuple(expand_uri(k) for k in entry["paramKinds"]), gid, guard)
        except (KeyError, TypeError) as exc:
            raise ParseError(f"rule entry missing field {exc}") from None
        if gid not in GUARDS:
            raise ParseError(f"rule {rule.name}: unknown guard {gid!r}")
        rules.append(rule)
    return rules


# ---------------------------------------------------------------------------
# Derivation
# ---------------------------------------------------------------------------


def evaluate_rules(
    objects: Sequence[tuple[str, str]], ontology: Ontology, rules: Iterable[ConstraintRule]
) -> list[Evaluation]:
    """Run every rule on every eligible tuple of distinct objects, passing or not."""
    results = []
    for rule in rules:
        guard = GUARDS[rule.guard]
        pools = [[(s, u) for s, u in objects if ontology.isa(u, kind)] for kind in rule.param_kinds]
        for combo in itertools.product(*pools):
            syms = tuple(s for s, _ in combo)
            if len(set(syms)) != len(syms):
                continue
            uris = tuple(ontology.canonical(u) for _, u in combo)
            checks = tuple(guard(ontology, uris, rule.params))
            results.append(Evaluation(Atom(rule.name, syms), Provenance(rule.name, rule.guard, uris, checks)))
    return results


def derive_facts(
    objects: Sequence[tuple[str, str]], ontology: Ontology, rules: Iterable[ConstraintRule] = (INSERTABLE,)
) -> dict[Atom, Provenance]:
    return {e.fact: e.provenance for e in evaluate_rules(objects, ontology, rules) if e.provenance.passed}


# ---------------------------------------------------------------------------
# Resolution
# ---------------------------------------------------------------------------


def _type_uris(domain: Domain, ontology: Ontology) -> dict[str, str]:
    names = {t.name for t in domain.types} | {ROOT_TYPE}
    return {sym: ontology.canonical(uri) for sym, uri in domain.context.items() if sym in names}


def _scene_type(uri: str, domain: Domain, type_uris: Mapping[str, str], ontology: Ontology) -> str:
    matches = [t for t, tu in type_uris.items() if ontology.isa(uri, tu)]
    # most specific: a match that is a subtype of every other match
    for t in sorted(matches):
        if all(domain.is_subtype(t, other) for other in matches):
            return t
    return ROOT_TYPE


def resolve(
    domain: Domain,
    problem: Problem,
    ontology: Ontology,
    scene: SceneState,
    rules: Sequence[ConstraintRule] = (INSERTABLE,),
) -> ResolvedPair:
    if problem.domain_name != domain.name:
        raise ResolveError(f"problem targets domain {problem.domain_name}, not {domain.name}")
    onto = ontology.merged(kind_triples(scene.kinds.values()))
    for sym, uri in (*domain.context.items(), *problem.context.items()):
        if not onto.knows(uri):
            raise UnknownSymbol(sym, uri)

    type_uris = _type_uris(domain, onto)
    objects = dict(problem.objects)
    for inst in scene.instances:
        if inst.id not in objects:
            objects[inst.id] = _scene_type(scene.kinds[inst.kind].uri, domain, type_uris, onto)

    annotated = []
    for sym in sorted(objects):
        uri = problem.context.get(sym) or scene.uri_of(sym)
        if uri is not None:
            annotated.append((sym, uri))
    provenance = derive_facts(annotated, onto, rules)

    predicates = {p.name: p for p in domain.predicates}
    derived_names = {f.predicate for f in provenance}
    for rule in rules:
        if rule.name not in predicates and rule.name in derived_names:
            params = []
            for i, kind in enumerate(rule.param_kinds):
                typ = next((t for t, tu in sorted(type_uris.items()) if tu == onto.canonical(kind)), ROOT_TYPE)
                params.append((f"?x{i}", typ))
            predicates[rule.name] = Predicate(rule.name, tuple(params))

    visible = {
        f for f in scene.facts
        if f.predicate in predicates
        and predicates[f.predicate].arity == len(f.args)
        and all(a in objects for a in f.args)
    }
    init = set(problem.init) | visible | set(provenance)

    derived_names = {r.name for r in rules}
    fluents = domain.fluent_predicates()
    initialized = {f.predicate for f in init}
    for act in domain.actions:
        for lit in act.precondition:
            p = lit.atom.predicate
            if lit.positive and p not in derived_names | fluents | initialized:
                raise UncoveredPredicate(p, act.name)

    out_domain = Domain(domain.name, domain.requirements, domain.types, tuple(predicates.values()), domain.actions)
    out_problem = Problem(problem.name, problem.domain_name, tuple(objects.items()), frozenset(init), problem.goal)
    out_domain.validate()
    out_problem.validate()
    return ResolvedPair(out_domain, out_problem, provenance)
