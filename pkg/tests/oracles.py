"""Reference implementations used to cross-check the package.

Each oracle is written from the problem statement alone, deliberately naive,
and shares no code with the module it checks beyond plain data types.
"""

from __future__ import annotations

import math
from collections import deque
from fractions import Fraction
from itertools import permutations, product

from maestrob.pddl import Domain, Problem


# -- planning ----------------------------------------------------------------


def _subst(atom, binding):
    return (atom.predicate, *(binding.get(a, a) for a in atom.args))


def _successors(domain: Domain, objects, state):
    """Every applicable ground action, with no static pruning and no types."""
    for schema in domain.actions:
        for combo in product(objects, repeat=len(schema.params)):
            binding = {v: o for (v, _), o in zip(schema.params, combo)}
            ok = all((_subst(l.atom, binding) in state) == l.positive for l in schema.precondition)
            if not ok:
                continue
            add = {_subst(a, binding) for a in schema.add}
            delete = {_subst(a, binding) for a in schema.delete}
            yield (schema.name, combo), frozenset((state - delete) | add)


def shortest_plan_length(domain: Domain, problem: Problem, limit: int = 200_000) -> int | None:
    """Exhaustive breadth-first search over states; ``None`` when unreachable."""
    objects = [o for o, _ in problem.objects]
    init = frozenset((a.predicate, *a.args) for a in problem.init)
    goal = [((l.atom.predicate, *l.atom.args), l.positive) for l in problem.goal]

    def done(s):
        return all((a in s) == pos for a, pos in goal)

    depth = {init: 0}
    queue = deque([init])
    while queue:
        s = queue.popleft()
        if done(s):
            return depth[s]
        for _, t in _successors(domain, objects, s):
            if t not in depth:
                depth[t] = depth[s] + 1
                if len(depth) > limit:
                    raise RuntimeError("oracle state limit")
                queue.append(t)
    return None


def replay(domain: Domain, problem: Problem, steps) -> bool:
    """Apply ``(name, args)`` steps with full precondition checks; True when the goal holds at the end."""
    objects = [o for o, _ in problem.objects]
    state = frozenset((a.predicate, *a.args) for a in problem.init)
    for name, args in steps:
        nxt = dict(_successors(domain, objects, state)).get((name, tuple(args)))
        if nxt is None:
            return False
        state = nxt
    return all(((l.atom.predicate, *l.atom.args) in state) == l.positive for l in problem.goal)


# -- ontology ----------------------------------------------------------------


def reachable(edges, a: str, b: str) -> bool:
    """Reflexive-transitive reachability by depth-first search."""
    seen, todo = {a}, [a]
    while todo:
        x = todo.pop()
        if x == b:
            return True
        for c, p in edges:
            if c == x and p not in seen:
                seen.add(p)
                todo.append(p)
    return a == b


def union_find_canonical(nodes, pairs) -> dict[str, str]:
    """Map every node to the smallest member of its equivalence class."""
    classes = [{n} for n in nodes]
    for a, b in pairs:
        ca = next(c for c in classes if a in c)
        cb = next(c for c in classes if b in c)
        if ca is not cb:
            ca |= cb
            classes.remove(cb)
    return {n: min(c) for c in classes for n in c}


# -- resolver ----------------------------------------------------------------


def fits(peg_shape, hole_cavity, clearance: float) -> bool:
    """Does the peg's cross-section fit the cavity with the given radial slack?

    Cylinders use their diameter; a cuboid must pass through a round cavity
    by its diagonal, and two rectangles may be aligned either way round.
    """
    peg_kind = type(peg_shape).__name__
    cav_kind = type(hole_cavity).__name__
    if peg_kind == "Cylinder" and cav_kind == "Cylinder":
        return peg_shape.diameter + clearance <= hole_cavity.diameter
    if peg_kind == "Cylinder":
        return peg_shape.diameter + clearance <= min(hole_cavity.dx, hole_cavity.dy)
    if cav_kind == "Cylinder":
        return math.sqrt(peg_shape.dx ** 2 + peg_shape.dy ** 2) + clearance <= hole_cavity.diameter
    return any(
        p1 + clearance <= hole_cavity.dx and p2 + clearance <= hole_cavity.dy
        for p1, p2 in ((peg_shape.dx, peg_shape.dy), (peg_shape.dy, peg_shape.dx))
    )


# -- grounding ---------------------------------------------------------------


def jaccard_with_wildcards(utterance: list[str], phrase: list[str]) -> Fraction:
    """Best Jaccard score over every way of assigning wildcards to utterance tokens."""
    u = set(utterance)
    fixed = {t for t in phrase if not t.startswith("?")}
    slots = sorted({t for t in phrase if t.startswith("?")})
    spare = sorted(u - fixed)
    best = Fraction(0)
    options = spare + [None] * len(slots)
    for chosen in set(permutations(options, len(slots))):
        filled = fixed | {c for c in chosen if c is not None}
        unfilled = sum(1 for c in chosen if c is None)
        union = len(u | filled) + unfilled
        if union:
            best = max(best, Fraction(len(u & filled), union))
    return best
