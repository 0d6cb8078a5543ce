"""Plan execution loop with failure feedback, replanning and escalation.

Each round re-extracts the world state, resolves the PDDLS inputs against
it, plans, and executes skills one by one.  A failed skill sends the loop
back to planning from the freshly observed state.  When the planner finds
no plan the runtime asks for human assistance over the blackboard and, if a
response arrives, applies it and tries again.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from .blackboard import Blackboard, Message
from .errors import MaestrobError
from .ontology import Ontology
from .pddl import ROOT_TYPE, Atom, Domain, Literal, Problem
from .planner import DEFAULT_MAX_NODES, DEFAULT_MAX_SECONDS, NoPlan, ground, plan
from .resolver import INSERTABLE, ConstraintRule, resolve
from .skills import SimWorld, Skill, bound_skills, execute_skill

SUCCEEDED = "Succeeded"
REPLANNED = "ReplannedThenSucceeded"
ASSISTANCE = "AssistanceRequested"


def digest(facts: Iterable[Atom]) -> str:
    text = "\n".join(sorted(a.to_pddl() for a in facts))
    return hashlib.sha256(text.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class ReplanPolicy:
    max_replans: int = 5
    max_assistance: int = 3
    search_mode: str = "bfs"
    max_nodes: int = DEFAULT_MAX_NODES
    max_seconds: float = DEFAULT_MAX_SECONDS


@dataclass(frozen=True)
class TraceEvent:
    step: int
    skill: str
    outcome: str
    digest: str
    timestamp: float
    reason: str = ""

    def line(self) -> str:
        return f"{self.step} {self.skill} {self.outcome} {self.digest}"


@dataclass
class ExecutionTrace:
    events: list[TraceEvent] = field(default_factory=list)
    terminal: str = ""
    replans: int = 0
    reason: str = ""
    plans: list[list[str]] = field(default_factory=list)
    world: SimWorld | None = None

    @property
    def label(self) -> str:
        if self.terminal == REPLANNED:
            return f"{REPLANNED}({self.replans})"
        if self.terminal == ASSISTANCE:
            return f"{ASSISTANCE}({self.reason})"
        return self.terminal

    @property
    def succeeded(self) -> bool:
        return self.terminal in (SUCCEEDED, REPLANNED)

    def log(self) -> str:
        lines = [e.line() for e in self.events] + [f"terminal {self.label}"]
        return "".join(line + "\n" for line in lines)


@dataclass(frozen=True)
class PlanningInputs:
    """Everything the runtime needs to (re)plan from an observed state."""

    domain: Domain
    ontology: Ontology
    skills: Sequence[Skill]
    problem: Problem | None = None
    rules: Sequence[ConstraintRule] = (INSERTABLE,)


class ScriptedHuman:
    """Answers assistance requests with pre-recorded world fixes, in order."""

    def __init__(self, bus: Blackboard, responses: Sequence[dict[str, Any]]):
        self.bus = bus
        self.pending = list(responses)
        bus.subscribe("runtime/assistance-request", self.on_request, agent="human")

    def on_request(self, msg: Message) -> None:
        if self.pending:
            self.bus.publish("human/assistance-response", self.pending.pop(0), origin="human")


def load_assistance_script(text: str) -> list[dict[str, Any]]:
    doc = json.loads(text) if text.strip() else {}
    return list(doc.get("responses", [])) if isinstance(doc, dict) else list(doc)


def _fact_list(facts: Iterable[Atom]) -> list[str]:
    return [str(a) for a in sorted(facts)]


def _task_problem(inputs: PlanningInputs, goal: Sequence[Literal], world: SimWorld) -> Problem:
    """The planning query over what is currently perceived: declared objects
    missing from the world are dropped unless the goal names them."""
    base = inputs.problem or Problem("task", inputs.domain.name)
    named = {arg for lit in goal for arg in lit.atom.args}
    keep = set(world.instances) | named
    objects = {o: t for o, t in base.objects if o in keep}
    for arg in sorted(named):
        if arg not in objects and arg not in world.instances:
            objects[arg] = ROOT_TYPE
    init = frozenset(a for a in base.init if all(x in objects for x in a.args))
    context = {s: u for s, u in base.context.items() if s in objects or s not in dict(base.objects)}
    return dataclasses.replace(
        base, objects=tuple(objects.items()), init=init, goal=tuple(goal), context=context
    )


def run_plan(
    goal: Sequence[Literal],
    inputs: PlanningInputs,
    world: SimWorld,
    policy: ReplanPolicy = ReplanPolicy(),
    bus: Blackboard | None = None,
) -> ExecutionTrace:
    bus = bus or Blackboard()
    world = world.copy()
    inbox: list[dict] = []
    sub = bus.subscribe("human/assistance-response", lambda m: inbox.append(m.payload), agent="runtime")

    bindings = bound_skills(inputs.skills)
    library = list(inputs.skills)
    domain = dataclasses.replace(
        inputs.domain, actions=tuple(a for a in inputs.domain.actions if a.name in bindings)
    )
    initial_facts = world.state().facts
    trace = ExecutionTrace()
    assistance = 0

    def finish(terminal: str, reason: str = "") -> ExecutionTrace:
        trace.terminal, trace.reason, trace.world = terminal, reason, world
        bus.publish("runtime/trace", {"terminal": trace.label}, origin="runtime")
        bus.unsubscribe(sub)
        return trace

    while True:
        state = world.state()
        bus.publish("perception/state", {"facts": _fact_list(state.facts)}, origin="perception")
        try:
            pair = resolve(domain, _task_problem(inputs, goal, world), inputs.ontology, state, inputs.rules)
            result = plan(
                pair.problem.init, pair.problem.goal, ground(pair.domain, pair.problem),
                mode=policy.search_mode, max_nodes=policy.max_nodes, max_seconds=policy.max_seconds,
            )
        except MaestrobError as exc:
            result, why = NoPlan(None), f"{type(exc).__name__}: {exc}"
        else:
            why = "no-plan"

        if isinstance(result, NoPlan):
            bus.publish("planner/plan", {"status": "no-plan"}, origin="planner")
            missing = sorted(set(world.initial) - set(world.instances))
            request = {
                "missing": missing,
                "reason": why,
                "removed": _fact_list(initial_facts - state.facts),
            }
            inbox.clear()
            bus.publish("runtime/assistance-request", request, origin="runtime")
            if not inbox or assistance >= policy.max_assistance:
                return finish(ASSISTANCE, "no-plan")
            assistance += 1
            for op in inbox.pop(0).get("actions", []):
                world.mutate(op)
            continue

        steps = [str(s) for s in result.steps]
        trace.plans.append(steps)
        bus.publish("planner/plan", {"status": "ok", "steps": steps}, origin="planner")

        failed = False
        for step in result.steps:
            skill = bindings[step.name]
            outcome, world = execute_skill(skill, step.binding, world, library, step)
            event = TraceEvent(
                world.step - 1,
                f"{step.name}({','.join(step.binding)})",
                outcome.label,
                digest(world.state().facts),
                world.clock,
                outcome.reason,
            )
            trace.events.append(event)
            bus.publish("runtime/trace", dataclasses.asdict(event), origin="runtime")
            if not outcome.success:
                failed = True
                break

        if not failed:
            if all(lit.holds_in(world.state().facts) for lit in goal):
                return finish(SUCCEEDED if trace.replans == 0 else REPLANNED)
            # every effect held yet the goal did not: observe and plan again
        trace.replans += 1
        if trace.replans > policy.max_replans:
            trace.replans -= 1
            bus.publish("runtime/assistance-request", {"reason": "replan-limit"}, origin="runtime")
            return finish(ASSISTANCE, "replan-limit")
