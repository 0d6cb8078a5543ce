"""Skill database and the simulated execution platform.

Skills come in three forms: composites (sequential or parallel lists of
gestures and other skills), rule sets (``if condition then gestures``) and
external stubs standing in for learned skills.  Parallel composites run in
declaration order in simulation.

The simulated arm understands a fixed gesture set and moves object poses
accordingly; world facts are always re-extracted from poses, never edited.
"""

from __future__ import annotations

import copy
import json
import random
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence, Union

from .errors import CyclicComposite, DuplicateBinding, ParseError, SkillConflict, UnboundSkill, UnknownGesture
from .pddl import Atom, Literal, parse_literal
from .planner import GroundAction
from .scene import SCENE_PREDICATES, ObjectInstance, ObjectKind, Pose, RelationParams, SceneState, cross_section_fits, extract_state

DEFAULT_TIMEOUT = 10.0
APPROACH_HEIGHT = 0.05
LIFT_HEIGHT = 0.10
GRASP_TOLERANCE = 1e-3

# logical seconds per gesture on the simulated arm
GESTURE_DURATIONS = {
    "move-above": 2.0,
    "move-down": 1.0,
    "move-up": 1.0,
    "close-gripper": 1.0,
    "open-gripper": 1.0,
    "insert": 3.0,
    "stop": 0.0,
    "say": 1.0,
}


@dataclass(frozen=True)
class Invocation:
    kind: str  # "gesture" | "skill"
    name: str
    args: tuple[str, ...] = ()

    def bind(self, binding: Mapping[str, str]) -> tuple[str, ...]:
        return tuple(binding.get(a, a) for a in self.args)


@dataclass(frozen=True)
class Composite:
    steps: tuple[Invocation, ...] = ()
    mode: str = "sequential"


@dataclass(frozen=True)
class RuleClause:
    condition: tuple[Literal, ...]
    then: tuple[Invocation, ...]


@dataclass(frozen=True)
class Rule:
    clauses: tuple[RuleClause, ...]


@dataclass(frozen=True)
class ExternalStub:
    id: str
    simulate: tuple[Invocation, ...] = ()


Body = Union[Composite, Rule, ExternalStub]


@dataclass(frozen=True)
class Skill:
    name: str
    params: tuple[tuple[str, str], ...]
    body: Body
    binds: str | None = None
    timeout: float = DEFAULT_TIMEOUT

    def invocations(self) -> Iterable[Invocation]:
        if isinstance(self.body, Composite):
            yield from self.body.steps
        elif isinstance(self.body, Rule):
            for clause in self.body.clauses:
                yield from clause.then
        else:
            yield from self.body.simulate


# ---------------------------------------------------------------------------
# Loading, validation, sharing
# ---------------------------------------------------------------------------


def _invocation(doc: Mapping) -> Invocation:
    if "gesture" in doc:
        return Invocation("gesture", str(doc["gesture"]), tuple(doc.get("args", ())))
    if "skill" in doc:
        return Invocation("skill", str(doc["skill"]), tuple(doc.get("args", ())))
    raise ParseError(f"invocation needs 'gesture' or 'skill': {dict(doc)!r}")


def _body(doc: Mapping) -> Body:
    kind = doc.get("type")
    if kind == "composite":
        mode = doc.get("mode", "sequential")
        if mode not in ("sequential", "parallel"):
            raise ParseError(f"unknown composite mode {mode!r}")
        return Composite(tuple(_invocation(s) for s in doc.get("steps", ())), mode)
    if kind == "rule":
        clauses = []
        for r in doc.get("rules", ()):
            cond = tuple(parse_literal(c, allow_vars=True) for c in r.get("if", ()))
            then = r["then"]
            then = then if isinstance(then, list) else [then]
            clauses.append(RuleClause(cond, tuple(_invocation(t) for t in then)))
        return Rule(tuple(clauses))
    if kind == "external":
        return ExternalStub(str(doc["id"]), tuple(_invocation(s) for s in doc.get("simulate", ())))
    raise ParseError(f"unknown skill body type {kind!r}")


def parse_skill(doc: Mapping) -> Skill:
    try:
        return Skill(
            str(doc["name"]),
            tuple(tuple(p) for p in doc.get("params", ())),
            _body(doc["body"]),
            doc.get("binds"),
            float(doc.get("timeout", DEFAULT_TIMEOUT)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad skill entry: {exc}") from None


def skill_to_doc(skill: Skill) -> dict[str, Any]:
    def inv(i: Invocation) -> dict:
        return {i.kind: i.name, "args": list(i.args)}

    body = skill.body
    if isinstance(body, Composite):
        bdoc = {"type": "composite", "mode": body.mode, "steps": [inv(s) for s in body.steps]}
    elif isinstance(body, Rule):
        bdoc = {
            "type": "rule",
            "rules": [
                {"if": [lit.to_pddl() for lit in c.condition], "then": [inv(t) for t in c.then]}
                for c in body.clauses
            ],
        }
    else:
        bdoc = {"type": "external", "id": body.id, "simulate": [inv(s) for s in body.simulate]}
    return {
        "name": skill.name,
        "params": [list(p) for p in skill.params],
        "binds": skill.binds,
        "timeout": skill.timeout,
        "body": bdoc,
    }


def dump_skill_db(skills: Iterable[Skill]) -> str:
    docs = [skill_to_doc(s) for s in sorted(skills, key=lambda s: s.name)]
    return json.dumps({"skills": docs}, indent=2) + "\n"


def validate_skills(skills: Sequence[Skill]) -> None:
    by_name: dict[str, Skill] = {}
    for s in skills:
        if s.name in by_name and by_name[s.name] != s:
            raise SkillConflict(s.name)
        by_name[s.name] = s
    for s in by_name.values():
        for inv in s.invocations():
            if inv.kind == "skill" and inv.name not in by_name:
                raise UnboundSkill(inv.name)
    binders: dict[str, list[str]] = {}
    for s in by_name.values():
        if s.binds:
            binders.setdefault(s.binds, []).append(s.name)
    for action, names in sorted(binders.items()):
        if len(names) > 1:
            raise DuplicateBinding(action, sorted(names))
    _check_acyclic(by_name)


def _check_acyclic(by_name: Mapping[str, Skill]) -> None:
    state: dict[str, int] = {}

    def visit(name: str, path: list[str]) -> None:
        state[name] = 1
        for inv in by_name[name].invocations():
            if inv.kind != "skill":
                continue
            if state.get(inv.name) == 1:
                raise CyclicComposite(path[path.index(inv.name):] + [inv.name])
            if not state.get(inv.name):
                visit(inv.name, path + [inv.name])
        state[name] = 2

    for name in sorted(by_name):
        if not state.get(name):
            visit(name, [name])


def load_skill_db(text: str) -> list[Skill]:
    try:
        doc = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ParseError(f"skills: {exc.msg}", exc.lineno) from None
    skills = [parse_skill(entry) for entry in doc.get("skills", ())]
    names = [s.name for s in skills]
    if len(set(names)) != len(names):
        dup = next(n for n in names if names.count(n) > 1)
        raise SkillConflict(dup)
    validate_skills(skills)
    return skills


def share_skills(source: Sequence[Skill], target: Sequence[Skill]) -> list[Skill]:
    """Union of two skill databases keyed by name."""
    merged = {s.name: s for s in target}
    for s in source:
        if s.name in merged and merged[s.name] != s:
            raise SkillConflict(s.name)
        merged[s.name] = s
    out = sorted(merged.values(), key=lambda s: s.name)
    validate_skills(out)
    return out


def bound_skills(skills: Iterable[Skill]) -> dict[str, Skill]:
    return {s.binds: s for s in skills if s.binds}


# ---------------------------------------------------------------------------
# Simulated world
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScriptedFailure:
    step: int
    kind: str
    perturbation: Mapping[str, Any] | None = None


def load_failure_script(text: str) -> list[ScriptedFailure]:
    try:
        doc = json.loads(text) if text.strip() else []
    except json.JSONDecodeError as exc:
        raise ParseError(f"failure script: {exc.msg}", exc.lineno) from None
    entries = doc.get("failures", []) if isinstance(doc, dict) else doc
    try:
        return [ScriptedFailure(int(e["step"]), str(e.get("kind", "failure")), e.get("perturbation")) for e in entries]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad failure entry: {exc}") from None


@dataclass
class SimWorld:
    instances: dict[str, ObjectInstance]
    kinds: dict[str, ObjectKind]
    params: RelationParams = RelationParams()
    failure_script: list[ScriptedFailure] = field(default_factory=list)
    seed: int = 0
    failure_rate: float = 0.0
    safety_zone: tuple[tuple[float, float, float], tuple[float, float, float]] | None = None
    clock: float = 0.0
    step: int = 0
    ee: tuple[float, float, float] = (0.0, 0.0, 0.3)
    holding: str | None = None
    target: str | None = None
    halted: bool = False
    initial: dict[str, ObjectInstance] = field(default_factory=dict)
    log: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.initial:
            self.initial = dict(self.instances)
        self.rng = random.Random(self.seed)

    @classmethod
    def from_scene(cls, instances: Iterable[ObjectInstance], kinds: Iterable[ObjectKind] | Mapping[str, ObjectKind], **kw) -> SimWorld:
        if not isinstance(kinds, Mapping):
            kinds = {k.id: k for k in kinds}
        return cls({i.id: i for i in instances}, dict(kinds), **kw)

    def copy(self) -> SimWorld:
        return copy.deepcopy(self)

    def state(self) -> SceneState:
        return extract_state(list(self.instances.values()), self.kinds, self.params)

    def status_facts(self) -> set[Atom]:
        facts = {Atom("holding", (self.holding,)) if self.holding else Atom("gripper-empty")}
        if self.safety_zone is not None:
            lo, hi = self.safety_zone
            if not all(l <= v <= h for l, v, h in zip(lo, self.ee, hi)):
                facts.add(Atom("ee-outside-zone"))
        if self.halted:
            facts.add(Atom("halted"))
        return facts

    # -- geometry helpers ---------------------------------------------------------

    def _height(self, ident: str) -> float:
        return self.kinds[self.instances[ident].kind].shape.height

    def _top(self, ident: str) -> float:
        return self.instances[ident].pose.position[2] + self._height(ident) / 2

    def _place(self, ident: str, position: Sequence[float]) -> None:
        inst = self.instances[ident]
        self.instances[ident] = ObjectInstance(inst.id, inst.kind, inst.pose.moved(position))

    def _move_ee(self, position: tuple[float, float, float]) -> None:
        self.ee = position
        if self.holding:
            x, y, z = position
            self._place(self.holding, (x, y, z - self._height(self.holding) / 2))

    # -- mutations shared by failure perturbations and human assistance -----------

    def mutate(self, op: Mapping[str, Any]) -> None:
        kind = op.get("op")
        ident = op.get("instance")
        if kind == "remove":
            self.instances.pop(ident, None)
            if self.holding == ident:
                self.holding = None
        elif kind == "restore":
            if ident in self.initial:
                self.instances[ident] = self.initial[ident]
        elif kind == "move":
            self._place(ident, tuple(op["position"]))
        elif kind == "add":
            doc = op["object"]
            inst = ObjectInstance(doc["id"], doc["kind"], Pose(tuple(doc["position"]), tuple(doc.get("orientation", (1, 0, 0, 0)))))
            self.instances[inst.id] = inst
        else:
            raise ValueError(f"unknown world mutation {kind!r}")
        self.log.append(f"mutate {json.dumps(dict(op), sort_keys=True)}")

    # -- gestures -----------------------------------------------------------------

    def gesture(self, name: str, args: Sequence[str]) -> bool:
        if name not in GESTURE_DURATIONS:
            raise UnknownGesture(name, "sim-arm")
        self.clock += GESTURE_DURATIONS[name]
        if self.halted and name != "say":
            return False
        handler = getattr(self, "_g_" + name.replace("-", "_"))
        ok = handler(*args)
        self.log.append(f"{name}({','.join(args)}) -> {'ok' if ok else 'fail'}")
        return ok

    def _g_move_above(self, obj: str) -> bool:
        if obj not in self.instances:
            return False
        x, y, _ = self.instances[obj].pose.position
        carried = self._height(self.holding) if self.holding else 0.0
        self.target = obj
        self._move_ee((x, y, self._top(obj) + APPROACH_HEIGHT + carried))
        return True

    def _g_move_down(self) -> bool:
        if self.target not in self.instances:
            return False
        x, y, _ = self.ee
        carried = self._height(self.holding) if self.holding else 0.0
        self._move_ee((x, y, self._top(self.target) + carried))
        return True

    def _g_move_up(self) -> bool:
        x, y, z = self.ee
        self._move_ee((x, y, z + LIFT_HEIGHT))
        return True

    def _g_close_gripper(self) -> bool:
        obj = self.target
        if self.holding or obj not in self.instances:
            return False
        x, y, z = self.instances[obj].pose.position
        ex, ey, ez = self.ee
        if max(abs(ex - x), abs(ey - y), abs(ez - self._top(obj))) > GRASP_TOLERANCE:
            return False
        self.holding = obj
        return True

    def _g_open_gripper(self) -> bool:
        self.holding = None
        return True

    def _g_insert(self, peg: str, hole: str) -> bool:
        if self.holding != peg or hole not in self.instances:
            return False
        cavity = self.kinds[self.instances[hole].kind].cavity
        if cavity is None or not cross_section_fits(self.kinds[self.instances[peg].kind].shape, cavity):
            return False
        hx, hy, _ = self.instances[hole].pose.position
        bottom = self._top(hole) - cavity.height
        half = self._height(peg) / 2
        self._place(peg, (hx, hy, bottom + half))
        self.ee = (hx, hy, bottom + 2 * half)
        return True

    def _g_stop(self) -> bool:
        self.halted = True
        return True

    def _g_say(self, *words: str) -> bool:
        return True


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Outcome:
    success: bool
    reason: str = ""
    elapsed: float = 0.0

    @property
    def label(self) -> str:
        return "success" if self.success else "failure"


def _run(skill: Skill, args: Sequence[str], world: SimWorld, library: Mapping[str, Skill]) -> bool:
    binding = {var: arg for (var, _), arg in zip(skill.params, args)}
    start = world.clock
    body = skill.body
    if isinstance(body, (Composite, ExternalStub)):
        steps = body.steps if isinstance(body, Composite) else body.simulate
        ok = True
        for inv in steps:
            if not _invoke(inv, binding, world, library):
                ok = False
                break
    else:
        facts = world.state().facts | world.status_facts()
        ok = True
        for clause in body.clauses:
            if all(lit.substitute(binding).holds_in(facts) for lit in clause.condition):
                for inv in clause.then:
                    ok = _invoke(inv, binding, world, library) and ok
    return ok and world.clock - start <= skill.timeout


def _invoke(inv: Invocation, binding: Mapping[str, str], world: SimWorld, library: Mapping[str, Skill]) -> bool:
    args = inv.bind(binding)
    if inv.kind == "gesture":
        return world.gesture(inv.name, args)
    child = library.get(inv.name)
    if child is None:
        raise UnboundSkill(inv.name)
    return _run(child, args, world, library)


def execute_skill(
    skill: Skill,
    args: Sequence[str],
    world: SimWorld,
    library: Iterable[Skill] = (),
    action: GroundAction | None = None,
) -> tuple[Outcome, SimWorld]:
    """Run one top-level skill on a copy of ``world``.

    Scripted failures keyed on the world's step counter fire before the body
    runs.  On success the bound action's effects are checked against the
    facts re-extracted from the new poses; a disagreement counts as failure.
    """
    w = world.copy()
    step = w.step
    w.step += 1
    start = w.clock
    lib = {s.name: s for s in library}
    lib.setdefault(skill.name, skill)

    for failure in w.failure_script:
        if failure.step == step:
            if failure.perturbation:
                w.mutate(failure.perturbation)
            return Outcome(False, failure.kind, 0.0), w
    if w.failure_rate and w.rng.random() < w.failure_rate:
        return Outcome(False, "random-failure", 0.0), w

    if not _run(skill, args, w, lib):
        reason = "timeout" if w.clock - start > skill.timeout else "gesture-failed"
        return Outcome(False, reason, w.clock - start), w
    if action is not None:
        facts = w.state().facts
        missing = [a for a in action.add if a.predicate in SCENE_PREDICATES and a not in facts]
        lingering = [a for a in action.delete if a.predicate in SCENE_PREDICATES and a in facts]
        if missing or lingering:
            return Outcome(False, "effect-mismatch", w.clock - start), w
    return Outcome(True, "", w.clock - start), w
