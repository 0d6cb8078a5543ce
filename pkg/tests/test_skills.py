import json

import pytest

from maestrob.errors import CyclicComposite, DuplicateBinding, ParseError, SkillConflict, UnboundSkill, UnknownGesture
from maestrob.pddl import Atom
from maestrob.planner import GroundAction
from maestrob.skills import (
    Composite,
    ExternalStub,
    Rule,
    ScriptedFailure,
    SimWorld,
    Skill,
    bound_skills,
    dump_skill_db,
    execute_skill,
    load_failure_script,
    load_skill_db,
    parse_skill,
    share_skills,
)

from conftest import DEMO, read

UR5 = load_skill_db(read(DEMO / "ur5_skills.json"))
PEPPER = load_skill_db(read(DEMO / "pepper_skills.json"))
LIB = {s.name: s for s in UR5}
INSERT = GroundAction(
    "pick-n-insert", ("cyl-peg", "hole1"),
    add=frozenset({Atom("in", ("cyl-peg", "hole1")), Atom("filled", ("hole1",))}),
    delete=frozenset({Atom("empty", ("hole1",))}),
)


def db(*skills):
    return json.dumps({"skills": list(skills)})


@pytest.fixture
def world(demo):
    return SimWorld.from_scene(demo["initial"], demo["kinds"])


def test_pick_is_a_three_gesture_composite():
    [pick] = load_skill_db(db({
        "name": "pick", "params": [["?o", "object"]],
        "body": {"type": "composite", "steps": [
            {"gesture": "move-above", "args": ["?o"]}, {"gesture": "move-down"}, {"gesture": "close-gripper"}]},
    }))
    assert isinstance(pick.body, Composite)
    assert [s.name for s in pick.body.steps] == ["move-above", "move-down", "close-gripper"]


def test_safety_rule_form():
    body = LIB["safety-stop"].body
    assert isinstance(body, Rule)
    [clause] = body.clauses
    assert [str(c) for c in clause.condition] == ["ee-outside-zone()"]
    assert clause.then[0].name == "stop"


def test_external_stub_keeps_its_id():
    assert isinstance(LIB["place-in"].body, ExternalStub) and LIB["place-in"].body.id == "rl-insertion"


def test_cyclic_composite():
    a = {"name": "a", "body": {"type": "composite", "steps": [{"skill": "b"}]}}
    b = {"name": "b", "body": {"type": "composite", "steps": [{"skill": "a"}]}}
    with pytest.raises(CyclicComposite) as info:
        load_skill_db(db(a, b))
    assert info.value.cycle[0] == info.value.cycle[-1]


def test_duplicate_binding_and_unbound_reference():
    x = {"name": "x", "binds": "go", "body": {"type": "composite", "steps": []}}
    y = {"name": "y", "binds": "go", "body": {"type": "composite", "steps": []}}
    with pytest.raises(DuplicateBinding):
        load_skill_db(db(x, y))
    with pytest.raises(UnboundSkill):
        load_skill_db(db({"name": "z", "body": {"type": "composite", "steps": [{"skill": "ghost"}]}}))
    with pytest.raises(ParseError):
        load_skill_db(db({"name": "w", "body": {"type": "teleport"}}))


def test_share_skills():
    merged = share_skills(UR5, PEPPER)
    assert len(merged) == len(UR5) + len(PEPPER) - 1  # safety-stop is shared verbatim
    assert share_skills(UR5, UR5) == sorted(UR5, key=lambda s: s.name)
    clash = parse_skill({"name": "pick", "body": {"type": "composite", "steps": []}})
    with pytest.raises(SkillConflict):
        share_skills([clash], UR5)


def test_dump_round_trip():
    assert load_skill_db(dump_skill_db(UR5)) == sorted(UR5, key=lambda s: s.name)


def test_bindings():
    assert set(bound_skills(UR5)) == {"pick-n-insert"}


def test_pick_n_insert_fills_the_hole(world):
    outcome, after = execute_skill(LIB["pick-n-insert"], ("cyl-peg", "hole1"), world, UR5, INSERT)
    assert outcome.success and outcome.elapsed > 0
    assert {Atom("in", ("cyl-peg", "hole1")), Atom("filled", ("hole1",))} <= after.state().facts
    assert after.holding is None
    # the input world is untouched
    assert Atom("empty", ("hole1",)) in world.state().facts


def test_scripted_removal(world):
    world.failure_script = [ScriptedFailure(0, "object-missing", {"op": "remove", "instance": "cyl-peg"})]
    outcome, after = execute_skill(LIB["pick-n-insert"], ("cyl-peg", "hole1"), world, UR5, INSERT)
    assert not outcome.success and outcome.reason == "object-missing"
    assert "cyl-peg" not in after.instances
    after.mutate({"op": "restore", "instance": "cyl-peg"})
    assert after.instances["cyl-peg"] == world.instances["cyl-peg"]


def test_failure_script_file():
    [f] = load_failure_script(read(DEMO / "failure_missing_peg.json"))
    assert (f.step, f.perturbation) == (0, {"op": "remove", "instance": "cyl-peg"})


def test_empty_composite_is_a_no_op(world):
    noop = Skill("noop", (), Composite(()))
    outcome, after = execute_skill(noop, (), world)
    assert outcome.success and after.state().facts == world.state().facts


def test_unknown_gesture(world):
    bad = Skill("wave", (), Composite((parse_skill({"name": "t", "body": {"type": "composite", "steps": [
        {"gesture": "wave"}]}}).body.steps[0],)))
    with pytest.raises(UnknownGesture):
        execute_skill(bad, (), world)


def test_cuboid_peg_does_not_fit(world):
    action = GroundAction("pick-n-insert", ("cuboid-peg", "hole1"),
                          add=frozenset({Atom("in", ("cuboid-peg", "hole1"))}))
    outcome, _ = execute_skill(LIB["pick-n-insert"], ("cuboid-peg", "hole1"), world, UR5, action)
    assert not outcome.success and outcome.reason == "gesture-failed"


def test_timeout(world):
    slow = Skill("slow", LIB["pick-n-insert"].params, LIB["pick-n-insert"].body, None, 1.0)
    outcome, _ = execute_skill(slow, ("cyl-peg", "hole1"), world, UR5)
    assert not outcome.success and outcome.reason == "timeout"


def test_safety_rule_stops_outside_zone(world):
    world.safety_zone = ((0, 0, 0), (1, 1, 0.2))
    outcome, after = execute_skill(LIB["safety-stop"], (), world, UR5)
    assert outcome.success and after.halted  # default end-effector height 0.3 is outside
    world.safety_zone = ((0, 0, 0), (1, 1, 1))
    _, calm = execute_skill(LIB["safety-stop"], (), world, UR5)
    assert not calm.halted


def test_seeded_random_failures_are_reproducible(demo):
    def outcomes(seed):
        w = SimWorld.from_scene(demo["initial"], demo["kinds"], seed=seed, failure_rate=0.5)
        out = []
        for _ in range(20):
            o, w = execute_skill(LIB["pick"], ("cyl-peg",), w, UR5)
            out.append(o.success)
            w.mutate({"op": "restore", "instance": "cyl-peg"})
            w.holding = None
        return out

    assert outcomes(3) == outcomes(3)
    assert not all(outcomes(3))
