"""Grounding and forward state-space search over STRIPS tasks.

The default search is breadth-first with duplicate detection, so returned
plans are shortest.  Successors are generated in lexicographic
``(action name, binding)`` order, which fixes ties and makes plans
reproducible.  A greedy goal-count mode is available for larger toys; it is
not optimal.
"""

from __future__ import annotations

import heapq
import itertools
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import ResourceLimit
from .pddl import Atom, Domain, Literal, Problem

DEFAULT_MAX_NODES = 1_000_000
DEFAULT_MAX_SECONDS = 30.0


@dataclass(frozen=True, order=True)
class GroundAction:
    name: str
    binding: tuple[str, ...]
    pre_pos: frozenset[Atom] = field(compare=False, default=frozenset())
    pre_neg: frozenset[Atom] = field(compare=False, default=frozenset())
    add: frozenset[Atom] = field(compare=False, default=frozenset())
    delete: frozenset[Atom] = field(compare=False, default=frozenset())

    def applicable(self, state: frozenset[Atom]) -> bool:
        return self.pre_pos <= state and not (self.pre_neg & state)

    def apply(self, state: frozenset[Atom]) -> frozenset[Atom]:
        return (state - self.delete) | self.add

    def __str__(self) -> str:
        return "(" + " ".join((self.name, *self.binding)) + ")"


@dataclass
class SearchStats:
    expanded: int = 0
    generated: int = 0
    seconds: float = 0.0


@dataclass
class PlanResult:
    steps: list[GroundAction]
    stats: SearchStats

    def __len__(self) -> int:
        return len(self.steps)

    def serialize(self) -> str:
        return serialize_plan(self.steps)


@dataclass
class NoPlan:
    """The reachable state space holds no goal state."""

    stats: SearchStats

    def __bool__(self) -> bool:
        return False


def serialize_plan(steps: Iterable[GroundAction]) -> str:
    return "".join(f"{i}: {step}\n" for i, step in enumerate(steps))


def ground(domain: Domain, problem: Problem) -> list[GroundAction]:
    """All type-respecting instantiations, minus those whose positive
    precondition needs a static fact missing from init."""
    by_type: dict[str, list[str]] = {}
    objects = problem.objects

    def candidates(typ: str) -> list[str]:
        if typ not in by_type:
            by_type[typ] = sorted(o for o, t in objects if domain.is_subtype(t, typ))
        return by_type[typ]

    fluents = domain.fluent_predicates()
    init = problem.init
    actions: list[GroundAction] = []
    for schema in domain.actions:
        variables = [v for v, _ in schema.params]
        pools = [candidates(t) for _, t in schema.params]
        for combo in itertools.product(*pools):
            binding = dict(zip(variables, combo))
            pre = [lit.substitute(binding) for lit in schema.precondition]
            pos = frozenset(l.atom for l in pre if l.positive)
            if any(a.predicate not in fluents and a not in init for a in pos):
                continue
            neg = frozenset(l.atom for l in pre if not l.positive)
            add = frozenset(a.substitute(binding) for a in schema.add)
            # delete-then-add semantics when a binding makes both lists collide
            delete = frozenset(a.substitute(binding) for a in schema.delete) - add
            actions.append(GroundAction(schema.name, tuple(combo), pos, neg, add, delete))
    actions.sort()
    return actions


def goal_satisfied(state: frozenset[Atom], goal: Iterable[Literal]) -> bool:
    return all(lit.holds_in(state) for lit in goal)


def _extract(parents: dict, state: frozenset[Atom]) -> list[GroundAction]:
    steps = []
    while parents[state] is not None:
        state, action = parents[state]
        steps.append(action)
    steps.reverse()
    return steps


def plan(
    init: Iterable[Atom],
    goal: Sequence[Literal],
    actions: Sequence[GroundAction],
    *,
    max_nodes: int = DEFAULT_MAX_NODES,
    max_seconds: float = DEFAULT_MAX_SECONDS,
    mode: str = "bfs",
) -> PlanResult | NoPlan:
    if mode not in ("bfs", "greedy"):
        raise ValueError(f"unknown search mode {mode!r}")
    start = frozenset(init)
    actions = sorted(actions)
    stats = SearchStats()
    t0 = time.perf_counter()

    def done(result):
        stats.seconds = time.perf_counter() - t0
        return result

    parents: dict[frozenset[Atom], tuple | None] = {start: None}
    if goal_satisfied(start, goal):
        return done(PlanResult([], stats))

    if mode == "bfs":
        frontier: deque = deque([start])
        pop = frontier.popleft
        push = frontier.append
    else:
        heap: list = []
        counter = itertools.count()

        def push(s):
            unmet = sum(not lit.holds_in(s) for lit in goal)
            heapq.heappush(heap, (unmet, next(counter), s))

        def pop():
            return heapq.heappop(heap)[2]

        frontier = heap
        push(start)

    while frontier:
        if stats.expanded >= max_nodes:
            raise ResourceLimit("nodes", max_nodes, stats.expanded)
        if time.perf_counter() - t0 > max_seconds:
            raise ResourceLimit("time", max_seconds, stats.expanded)
        state = pop()
        stats.expanded += 1
        for action in actions:
            if not action.applicable(state):
                continue
            nxt = action.apply(state)
            if nxt in parents:
                continue
            parents[nxt] = (state, action)
            stats.generated += 1
            if goal_satisfied(nxt, goal):
                return done(PlanResult(_extract(parents, nxt), stats))
            push(nxt)
    return done(NoPlan(stats))


@dataclass(frozen=True)
class Validation:
    ok: bool
    step: int | None = None
    literal: Literal | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def validate(init: Iterable[Atom], steps: Sequence[GroundAction], goal: Sequence[Literal]) -> Validation:
    """Replay ``steps`` from ``init``; report the first broken precondition or goal literal."""
    state = frozenset(init)
    for i, step in enumerate(steps):
        for atom in sorted(step.pre_pos):
            if atom not in state:
                return Validation(False, i, Literal(atom), f"step {i} {step}: {atom} does not hold")
        for atom in sorted(step.pre_neg):
            if atom in state:
                return Validation(False, i, Literal(atom, False), f"step {i} {step}: {atom} must not hold")
        state = step.apply(state)
    for lit in goal:
        if not lit.holds_in(state):
            return Validation(False, None, lit, f"goal literal {lit} fails in final state")
    return Validation(True)


def solve(domain: Domain, problem: Problem, **kwargs) -> PlanResult | NoPlan:
    return plan(problem.init, problem.goal, ground(domain, problem), **kwargs)
