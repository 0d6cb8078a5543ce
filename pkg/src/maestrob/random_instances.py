"""Seeded generators for planning instances, tabletop scenes and taxonomies.

Every generator takes a ``random.Random`` so callers control reproducibility.
Planning instances are solvable by construction: the goal is sampled from a
state reached by a random walk over the ground actions.
"""

from __future__ import annotations

import math
import random
from itertools import product

from .ontology import EQUALS_TO, IS_A, Ontology, Triple, expand_uri
from .pddl import ROOT_TYPE, ActionSchema, Atom, Domain, Literal, Predicate, Problem
from .planner import ground
from .scene import Cuboid, Cylinder, ObjectInstance, ObjectKind, Pose


def random_domain(rng: random.Random, max_schemas: int = 4, name: str = "rand") -> Domain:
    predicates = [Predicate(f"p{i}", tuple((f"?a{j}", ROOT_TYPE) for j in range(rng.randint(0, 2))))
                  for i in range(rng.randint(2, 4))]
    actions = []
    for k in range(rng.randint(1, max_schemas)):
        params = tuple((f"?x{j}", ROOT_TYPE) for j in range(rng.randint(1, 2)))
        variables = [p for p, _ in params]

        def lit(positive: bool = True) -> Literal:
            pred = rng.choice(predicates)
            return Literal(Atom(pred.name, tuple(rng.choice(variables) for _ in range(pred.arity))), positive)

        pre = {lit(rng.random() > 0.2) for _ in range(rng.randint(1, 2))}
        add = {lit().atom for _ in range(rng.randint(1, 2))}
        delete = {lit().atom for _ in range(rng.randint(0, 2))} - add
        pre = {p for p in pre if p.positive or p.atom not in add}
        actions.append(ActionSchema(f"act{k}", params, tuple(pre), tuple(add), tuple(delete)))
    return Domain(name, (":negative-preconditions", ":strips"), (), tuple(predicates), tuple(actions))


def _random_init(rng: random.Random, domain: Domain, objects: list[str]) -> frozenset[Atom]:
    facts = set()
    for pred in domain.predicates:
        for args in product(objects, repeat=pred.arity):
            if rng.random() < 0.25:
                facts.add(Atom(pred.name, args))
    return frozenset(facts)


def random_problem(
    rng: random.Random,
    domain: Domain,
    max_objects: int = 6,
    walk: int = 8,
    attempts: int = 50,
    shallow: float = 0.8,
) -> Problem | None:
    """A solvable problem whose goal differs from its initial state, or None.

    ``shallow`` is the rejection rate for goals one action away.
    """
    objects = [f"o{i}" for i in range(rng.randint(2, max_objects))]
    for _ in range(attempts):
        init = _random_init(rng, domain, objects)
        probe = Problem("probe", domain.name, tuple((o, ROOT_TYPE) for o in objects), init, ())
        actions = ground(domain, probe)
        state = init
        for _ in range(rng.randint(2, walk)):
            enabled = [a for a in actions if a.applicable(state)]
            if not enabled:
                break
            state = rng.choice(enabled).apply(state)
        changed = sorted((state - init) | (init - state))
        if not changed:
            continue
        picks = rng.sample(changed, min(len(changed), rng.randint(2, 4)))
        goal = tuple(Literal(a, a in state) for a in picks)
        one_step = any(all(g.holds_in(a.apply(init)) for g in goal) for a in actions if a.applicable(init))
        if one_step and rng.random() < shallow:
            continue
        return Problem("rand-task", domain.name, probe.objects, init, goal)
    return None


def random_instance(rng: random.Random, max_objects: int = 6, max_schemas: int = 4) -> tuple[Domain, Problem]:
    while True:
        domain = random_domain(rng, max_schemas)
        problem = random_problem(rng, domain, max_objects)
        if problem is not None:
            return domain, problem


# ---------------------------------------------------------------------------
# Tabletop scenes
# ---------------------------------------------------------------------------


def random_kind(rng: random.Random, ident: str, holder: bool = False) -> ObjectKind:
    if holder:
        body = Cuboid(rng.uniform(0.06, 0.12), rng.uniform(0.06, 0.12), rng.uniform(0.02, 0.05))
        if rng.random() < 0.5:
            cavity = Cylinder(rng.uniform(0.02, min(body.dx, body.dy) * 0.9), body.height * rng.uniform(0.3, 0.9))
        else:
            cavity = Cuboid(body.dx * rng.uniform(0.3, 0.9), body.dy * rng.uniform(0.3, 0.9), body.height * rng.uniform(0.3, 0.9))
        return ObjectKind(ident, expand_uri(ident), body, cavity)
    if rng.random() < 0.5:
        return ObjectKind(ident, expand_uri(ident), Cylinder(rng.uniform(0.01, 0.05), rng.uniform(0.02, 0.08)))
    return ObjectKind(ident, expand_uri(ident), Cuboid(rng.uniform(0.01, 0.05), rng.uniform(0.01, 0.05), rng.uniform(0.02, 0.08)))


def _yaw_quaternion(yaw: float) -> tuple[float, float, float, float]:
    return (math.cos(yaw / 2), 0.0, 0.0, math.sin(yaw / 2))


def random_scene(rng: random.Random, max_objects: int = 5) -> tuple[list[ObjectInstance], dict[str, ObjectKind]]:
    """Objects on a 0.5 m table; some are stacked and some dropped into cavities."""
    kinds: dict[str, ObjectKind] = {}
    instances: list[ObjectInstance] = []
    for i in range(rng.randint(0, max_objects)):
        kind = random_kind(rng, f"kind{i}", holder=rng.random() < 0.3)
        kinds[kind.id] = kind
        yaw = rng.choice([0.0, rng.uniform(-math.pi, math.pi)])
        half = kind.shape.height / 2
        x, y, z = rng.uniform(0, 0.5), rng.uniform(0, 0.5), half
        base = rng.choice(instances) if instances and rng.random() < 0.4 else None
        if base is not None:
            bk = kinds[base.kind]
            bx, by, bz = base.pose.position
            top = bz + bk.shape.height / 2
            if bk.cavity is not None and rng.random() < 0.6:
                x, y, z = bx + rng.uniform(-0.003, 0.003), by + rng.uniform(-0.003, 0.003), top - bk.cavity.height + half
            else:
                x, y, z = bx + rng.uniform(-0.01, 0.01), by + rng.uniform(-0.01, 0.01), top + half
        instances.append(ObjectInstance(f"obj{i}", kind.id, Pose((x, y, z), _yaw_quaternion(yaw))))
    return instances, kinds


def jitter(instances: list[ObjectInstance], rng: random.Random, amount: float) -> list[ObjectInstance]:
    out = []
    for inst in instances:
        pos = tuple(c + rng.uniform(-amount, amount) for c in inst.pose.position)
        out.append(ObjectInstance(inst.id, inst.kind, Pose(pos, inst.pose.orientation)))
    return out


# ---------------------------------------------------------------------------
# Taxonomies
# ---------------------------------------------------------------------------


def random_dag(rng: random.Random, max_nodes: int = 20, density: float = 0.15) -> tuple[list[str], set[tuple[str, str]]]:
    """Edges (child, parent) that only point from higher to lower index, so the graph is acyclic."""
    nodes = [f"n{i:02d}" for i in range(rng.randint(2, max_nodes))]
    edges = {(nodes[i], nodes[j]) for i in range(len(nodes)) for j in range(i) if rng.random() < density}
    return nodes, edges


def dag_ontology(nodes: list[str], edges: set[tuple[str, str]]) -> Ontology:
    return Ontology(Triple(expand_uri(c), IS_A, expand_uri(p)) for c, p in sorted(edges))


def random_equalities(rng: random.Random, max_nodes: int = 20) -> tuple[list[str], list[tuple[str, str]]]:
    nodes = [f"e{i:02d}" for i in range(rng.randint(2, max_nodes))]
    pairs = [tuple(rng.sample(nodes, 2)) for _ in range(rng.randint(0, len(nodes)))]
    return nodes, pairs


def equality_ontology(pairs: list[tuple[str, str]]) -> Ontology:
    return Ontology(Triple(expand_uri(a), EQUALS_TO, expand_uri(b)) for a, b in pairs)
