import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from maestrob.errors import DimensionError, ParseError, UnknownKind
from maestrob.pddl import Atom
from maestrob.random_instances import jitter, random_scene
from maestrob.scene import (
    Cuboid,
    Cylinder,
    ObjectInstance,
    ObjectKind,
    Pose,
    RelationParams,
    diff_states,
    dump_scene,
    extract_relations,
    extract_state,
    kind_triples,
    load_object_db,
    load_scene,
    relation_margins,
)

from conftest import DEMO, read

BLOCK = ObjectKind("block", "maestrob:block", Cuboid(0.04, 0.04, 0.04))
PLATE = ObjectKind("plate", "maestrob:plate", Cuboid(0.1, 0.1, 0.03), Cylinder(0.032, 0.025))
KINDS = {k.id: k for k in (BLOCK, PLATE)}


def at(ident, kind, x, y, z, yaw=0.0):
    return ObjectInstance(ident, kind, Pose((x, y, z), (math.cos(yaw / 2), 0, 0, math.sin(yaw / 2))))


def test_demo_db_has_three_kinds(demo):
    assert sorted(demo["kinds"]) == ["cub-peg-40", "cyl-peg-30", "plate-32"]
    assert demo["kinds"]["plate-32"].cavity == Cylinder(0.032, 0.025)


@pytest.mark.parametrize(
    "shape, cavity",
    [
        ('{"type": "cylinder", "diameter": 0, "height": 0.1}', None),
        ('{"type": "cuboid", "dx": 0.1, "dy": -1, "dz": 0.1}', None),
        ('{"type": "cuboid", "dx": 0.1, "dy": 0.1, "dz": 0.02}', '{"type": "cylinder", "diameter": 0.05, "depth": 0.03}'),
        ('{"type": "cuboid", "dx": 0.1, "dy": 0.1, "dz": 0.05}', '{"type": "cylinder", "diameter": 0.2, "depth": 0.01}'),
    ],
)
def test_bad_dimensions(shape, cavity):
    entry = f'{{"id": "k", "uri": "x:k", "shape": {shape}' + (f', "cavity": {cavity}' if cavity else "") + "}"
    with pytest.raises(DimensionError):
        load_object_db(f'{{"kinds": [{entry}]}}')


def test_empty_db_and_scene():
    assert load_object_db("") == [] and load_object_db('{"kinds": []}') == []
    assert extract_state([], {}).facts == frozenset()


@pytest.mark.parametrize(
    "text",
    ["{bad", '{"objects": [{"id": "a"}]}', '{"objects": [{"id": "Bad Id", "kind": "k", "position": [0, 0, 0]}]}'],
)
def test_bad_scene_files(text):
    with pytest.raises(ParseError):
        load_scene(text)


def test_pose_quaternion_must_be_unit():
    with pytest.raises(ValueError):
        Pose((0, 0, 0), (1, 1, 0, 0))
    with pytest.raises(ParseError):
        load_scene('{"objects": [{"id": "a", "kind": "k", "position": [0, 0, 0], "orientation": [1, 1, 0, 0]}]}')


def test_scene_dump_round_trip(demo):
    assert load_scene(dump_scene(demo["initial"])) == sorted(demo["initial"], key=lambda i: i.id)


def test_on_when_stacked():
    facts = extract_relations([at("a", "block", 0, 0, 0.06), at("b", "block", 0, 0, 0.02)], KINDS)
    assert facts == {Atom("on", ("a", "b"))}


def test_on_needs_contact_and_overlap():
    gap = extract_relations([at("a", "block", 0, 0, 0.07), at("b", "block", 0, 0, 0.02)], KINDS)
    assert Atom("on", ("a", "b")) not in gap
    # 40 mm blocks offset by 30 mm overlap 25%, below the 50% default
    slid = extract_relations([at("a", "block", 0.0, 0.03, 0.06), at("b", "block", 0, 0, 0.02)], KINDS)
    assert Atom("on", ("a", "b")) not in slid


def test_left_right():
    facts = extract_relations([at("a", "block", 0.10, 0, 0.02), at("b", "block", 0.30, 0, 0.02)], KINDS)
    assert facts == {Atom("left", ("a", "b")), Atom("right", ("b", "a"))}


def test_front_back_and_lateral_limit():
    facts = extract_relations([at("a", "block", 0, 0.1, 0.02), at("b", "block", 0, 0.3, 0.02)], KINDS)
    assert facts == {Atom("front", ("a", "b")), Atom("back", ("b", "a"))}
    far = extract_relations([at("a", "block", 0, 0, 0.02), at("b", "block", 0.2, 0.2, 0.02)], KINDS)
    assert far == set()


def test_in_and_filled():
    peg = ObjectKind("peg", "maestrob:peg", Cylinder(0.03, 0.04))
    kinds = {**KINDS, "peg": peg}
    inside = extract_relations([at("p", "peg", 0.2, 0.2, 0.025), at("h", "plate", 0.2, 0.2, 0.015)], kinds)
    assert inside == {Atom("in", ("p", "h")), Atom("filled", ("h",))}
    apart = extract_relations([at("p", "peg", 0.2, 0.4, 0.02), at("h", "plate", 0.2, 0.2, 0.015)], kinds)
    assert Atom("empty", ("h",)) in apart


def test_rotated_cuboid_footprint():
    # a 45 degree yaw widens the 40 mm block's footprint to about 56.6 mm
    stick = ObjectKind("stick", "maestrob:stick", Cuboid(0.1, 0.01, 0.01))
    hx, hy = stick.shape.half_extents(math.pi / 2)
    assert hx == pytest.approx(0.005) and hy == pytest.approx(0.05)
    hx, _ = BLOCK.shape.half_extents(math.pi / 4)
    assert hx == pytest.approx(0.02 * math.sqrt(2))


def test_unknown_kind():
    with pytest.raises(UnknownKind):
        extract_relations([at("a", "nope", 0, 0, 0)], KINDS)


def test_demo_states(demo):
    initial = extract_state(demo["initial"], demo["kinds"])
    assert Atom("empty", ("hole1",)) in initial.facts
    assert not any(f.predicate in ("in", "filled") for f in initial.facts)
    final = extract_state(demo["final"], demo["kinds"])
    added, removed = diff_states(initial, final)
    assert {Atom("in", ("cyl-peg", "hole1")), Atom("filled", ("hole1",))} <= added
    assert Atom("empty", ("hole1",)) in removed
    assert diff_states(initial, initial) == (frozenset(), frozenset())


def test_kind_triples_expose_dimensions(demo):
    triples = {(t.subject, t.predicate): t.object for t in kind_triples(demo["kinds"].values())}
    assert triples[("maestrob:plate-32", "maestrob:cavity-diameter")].value == 0.032
    assert triples[("maestrob:cyl-peg-30", "maestrob:shape")].value == "cylinder"


# -- properties ------------------------------------------------------------------


def check_invariants(facts):
    for f in facts:
        if f.predicate in ("left", "right", "front", "back"):
            a, b = f.args
            opposite = {"left": "right", "right": "left", "front": "back", "back": "front"}[f.predicate]
            assert Atom(opposite, (b, a)) in facts
            assert Atom(f.predicate, (b, a)) not in facts
        if f.predicate == "in":
            assert Atom("on", f.args) not in facts
    holders = {f.args[1] for f in facts if f.predicate == "in"}
    for f in facts:
        if f.predicate == "filled":
            assert f.args[0] in holders
        if f.predicate == "empty":
            assert f.args[0] not in holders
    assert holders <= {f.args[0] for f in facts if f.predicate == "filled"}


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_relation_invariants(seed):
    instances, kinds = random_scene(random.Random(seed))
    check_invariants(extract_relations(instances, kinds))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_robust_to_tiny_jitter(seed):
    rng = random.Random(seed)
    instances, kinds = random_scene(rng)
    if relation_margins(instances, kinds) <= 1e-6:
        return
    moved = jitter(instances, rng, 1e-9)
    assert extract_relations(moved, kinds) == extract_relations(instances, kinds)


@settings(max_examples=100, deadline=None)
@given(st.frozensets(st.sampled_from([Atom("p", (c,)) for c in "abcdef"])),
       st.frozensets(st.sampled_from([Atom("p", (c,)) for c in "abcdef"])))
def test_diff_is_set_difference(a, b):
    from maestrob.scene import SceneState

    added, removed = diff_states(SceneState((), {}, a), SceneState((), {}, b))
    assert added == {x for x in b if x not in a}
    assert removed == {x for x in a if x not in b}


def test_relation_params_widen_directional_band():
    scene = [at("a", "block", 0, 0, 0.02), at("b", "block", 0.2, 0.2, 0.02)]
    assert extract_relations(scene, KINDS, RelationParams(lateral=0.3)) >= {Atom("left", ("a", "b"))}
