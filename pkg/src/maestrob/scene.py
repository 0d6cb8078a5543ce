"""Object database, world poses and the initial-state extractor.

Positions are body centroids in the world frame (meters).  Relations are
computed from axis-aligned footprints: a cylinder's footprint is the square
circumscribing its base and a cuboid's is the bounding box of its base
rectangle after yaw.  Roll and pitch are ignored (upright tabletop world).

Directional relations are world-relative: ``left``/``right`` along -x/+x and
``front``/``back`` along -y/+y.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

from .errors import DimensionError, ParseError, UnknownKind
from .ontology import BASE, Triple, Value
from .pddl import Atom, is_symbol

DIRECTIONAL = ("left", "right", "front", "back")
SCENE_PREDICATES = frozenset({"in", "on", *DIRECTIONAL, "filled", "empty", "is"})


@dataclass(frozen=True)
class Pose:
    position: tuple[float, float, float]
    orientation: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        object.__setattr__(self, "orientation", tuple(float(v) for v in self.orientation))
        if len(self.position) != 3 or len(self.orientation) != 4:
            raise ValueError("pose needs 3 position and 4 quaternion components")
        norm = math.sqrt(sum(q * q for q in self.orientation))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"orientation quaternion has norm {norm}, expected 1")

    @property
    def yaw(self) -> float:
        w, x, y, z = self.orientation
        return math.atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))

    def moved(self, position: Sequence[float]) -> Pose:
        return Pose(tuple(position), self.orientation)


@dataclass(frozen=True)
class Cylinder:
    diameter: float
    height: float

    def dims(self) -> tuple[float, ...]:
        return (self.diameter, self.height)

    def half_extents(self, yaw: float) -> tuple[float, float]:
        r = self.diameter / 2
        return r, r


@dataclass(frozen=True)
class Cuboid:
    dx: float
    dy: float
    dz: float

    @property
    def height(self) -> float:
        return self.dz

    def dims(self) -> tuple[float, ...]:
        return (self.dx, self.dy, self.dz)

    def half_extents(self, yaw: float) -> tuple[float, float]:
        c, s = abs(math.cos(yaw)), abs(math.sin(yaw))
        return (c * self.dx + s * self.dy) / 2, (s * self.dx + c * self.dy) / 2


Shape = Union[Cylinder, Cuboid]


@dataclass(frozen=True)
class ObjectKind:
    """A class of objects; for a cavity, ``height`` of the shape is its depth."""

    id: str
    uri: str
    shape: Shape
    cavity: Shape | None = None

    def validate(self) -> None:
        if not is_symbol(self.id):
            raise ParseError(f"kind id {self.id!r} is not a symbol")
        if ":" not in self.uri:
            raise ParseError(f"kind {self.id}: URI {self.uri!r} is not absolute")
        for part in (self.shape, self.cavity):
            if part is not None and not all(d > 0 for d in part.dims()):
                raise DimensionError(f"kind {self.id}: dimensions must be strictly positive")
        if self.cavity is None:
            return
        if self.cavity.height > self.shape.height:
            raise DimensionError(f"kind {self.id}: cavity deeper than the body")
        if not cross_section_fits(self.cavity, self.shape):
            raise DimensionError(f"kind {self.id}: cavity cross-section exceeds the body footprint")


@dataclass(frozen=True)
class ObjectInstance:
    id: str
    kind: str
    pose: Pose


@dataclass(frozen=True)
class RelationParams:
    eps_z: float = 0.005
    delta: float = 0.01
    lateral: float = 0.15
    min_overlap: float = 0.5


@dataclass(frozen=True)
class SceneState:
    instances: tuple[ObjectInstance, ...]
    kinds: Mapping[str, ObjectKind]
    facts: frozenset[Atom] = field(default_factory=frozenset)

    def instance(self, ident: str) -> ObjectInstance | None:
        for inst in self.instances:
            if inst.id == ident:
                return inst
        return None

    def uri_of(self, ident: str) -> str | None:
        inst = self.instance(ident)
        return self.kinds[inst.kind].uri if inst else None


def cross_section_fits(inner: Shape, outer: Shape) -> bool:
    if isinstance(outer, Cylinder):
        if isinstance(inner, Cylinder):
            return inner.diameter <= outer.diameter
        return math.hypot(inner.dx, inner.dy) <= outer.diameter
    if isinstance(inner, Cylinder):
        return inner.diameter <= min(outer.dx, outer.dy)
    return inner.dx <= outer.dx and inner.dy <= outer.dy


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def _load_json(text: str, what: str):
    try:
        return json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ParseError(f"{what}: {exc.msg}", exc.lineno) from None


def _shape(doc: Mapping, cavity: bool) -> Shape:
    height_key = "depth" if cavity else "height"
    try:
        kind = doc["type"]
        if kind == "cylinder":
            return Cylinder(float(doc["diameter"]), float(doc[height_key]))
        if kind == "cuboid":
            return Cuboid(float(doc["dx"]), float(doc["dy"]), float(doc["depth" if cavity else "dz"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad shape {dict(doc)!r}: {exc}") from None
    raise ParseError(f"unknown shape type {kind!r}")


def load_object_db(text: str) -> list[ObjectKind]:
    doc = _load_json(text, "object db")
    kinds: list[ObjectKind] = []
    seen: set[str] = set()
    for entry in doc.get("kinds", []):
        try:
            kind = ObjectKind(
                str(entry["id"]),
                str(entry["uri"]),
                _shape(entry["shape"], cavity=False),
                _shape(entry["cavity"], cavity=True) if entry.get("cavity") else None,
            )
        except (KeyError, TypeError) as exc:
            raise ParseError(f"object db entry missing field {exc}") from None
        kind.validate()
        if kind.id in seen:
            raise ParseError(f"duplicate kind id {kind.id}")
        seen.add(kind.id)
        kinds.append(kind)
    return kinds


def load_scene(text: str) -> list[ObjectInstance]:
    doc = _load_json(text, "scene")
    instances: list[ObjectInstance] = []
    seen: set[str] = set()
    for entry in doc.get("objects", []):
        try:
            pose = Pose(tuple(entry["position"]), tuple(entry.get("orientation", (1, 0, 0, 0))))
            inst = ObjectInstance(str(entry["id"]), str(entry["kind"]), pose)
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad scene object {entry!r}: {exc}") from None
        if not is_symbol(inst.id):
            raise ParseError(f"instance id {inst.id!r} is not a symbol")
        if inst.id in seen:
            raise ParseError(f"duplicate instance id {inst.id}")
        seen.add(inst.id)
        instances.append(inst)
    return instances


def dump_scene(instances: Iterable[ObjectInstance]) -> str:
    objects = [
        {
            "id": inst.id,
            "kind": inst.kind,
            "position": list(inst.pose.position),
            "orientation": list(inst.pose.orientation),
        }
        for inst in sorted(instances, key=lambda i: i.id)
    ]
    return json.dumps({"objects": objects}, indent=2) + "\n"


def kind_triples(kinds: Iterable[ObjectKind]) -> list[Triple]:
    """Expose shapes and sizes as runtime object properties for the resolver."""
    triples = []
    for kind in kinds:
        def prop(name: str, value, unit: str | None = "m") -> None:
            triples.append(Triple(kind.uri, BASE + name, Value(value, unit)))

        for prefix, part in (("", kind.shape), ("cavity-", kind.cavity)):
            if part is None:
                continue
            depth = "depth" if prefix else "height"
            if isinstance(part, Cylinder):
                prop(prefix + "shape", "cylinder", None)
                prop(prefix + "diameter", part.diameter)
                prop(prefix + depth, part.height)
            else:
                prop(prefix + "shape", "cuboid", None)
                prop(prefix + "dx", part.dx)
                prop(prefix + "dy", part.dy)
                prop(prefix + depth, part.dz)
    return triples


# ---------------------------------------------------------------------------
# Relation extraction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Geom:
    x: float
    y: float
    z: float
    bottom: float
    top: float
    yaw: float
    hx: float
    hy: float
    cavity: Shape | None

    @property
    def area(self) -> float:
        return 4 * self.hx * self.hy


def _geometry(inst: ObjectInstance, kinds: Mapping[str, ObjectKind]) -> _Geom:
    kind = kinds.get(inst.kind)
    if kind is None:
        raise UnknownKind(inst.id, inst.kind)
    x, y, z = inst.pose.position
    yaw = inst.pose.yaw
    hx, hy = kind.shape.half_extents(yaw)
    half = kind.shape.height / 2
    return _Geom(x, y, z, z - half, z + half, yaw, hx, hy, kind.cavity)


def _overlap(a: _Geom, b: _Geom) -> float:
    wx = min(a.x + a.hx, b.x + b.hx) - max(a.x - a.hx, b.x - b.hx)
    wy = min(a.y + a.hy, b.y + b.hy) - max(a.y - a.hy, b.y - b.hy)
    return max(wx, 0.0) * max(wy, 0.0)


def _cavity_offsets(a: _Geom, b: _Geom) -> tuple[float, float]:
    dx, dy = a.x - b.x, a.y - b.y
    c, s = math.cos(b.yaw), math.sin(b.yaw)
    return c * dx + s * dy, -s * dx + c * dy


def _inside_cavity(a: _Geom, b: _Geom) -> bool:
    cav = b.cavity
    if cav is None:
        return False
    u, v = _cavity_offsets(a, b)
    if isinstance(cav, Cylinder):
        across = math.hypot(u, v) <= cav.diameter / 2
    else:
        across = abs(u) <= cav.dx / 2 and abs(v) <= cav.dy / 2
    return across and b.top - cav.height <= a.z <= b.top and a.bottom < b.top


def _on(a: _Geom, b: _Geom, params: RelationParams) -> bool:
    return abs(a.bottom - b.top) <= params.eps_z and _overlap(a, b) >= params.min_overlap * a.area


def _pair_relations(a: _Geom, b: _Geom, params: RelationParams) -> list[str]:
    rels = []
    if _inside_cavity(a, b):
        rels.append("in")
    elif _on(a, b, params):
        rels.append("on")
    if b.x - a.x >= params.delta and abs(a.y - b.y) < params.lateral:
        rels.append("left")
    if a.x - b.x >= params.delta and abs(a.y - b.y) < params.lateral:
        rels.append("right")
    if b.y - a.y >= params.delta and abs(a.x - b.x) < params.lateral:
        rels.append("front")
    if a.y - b.y >= params.delta and abs(a.x - b.x) < params.lateral:
        rels.append("back")
    return rels


def extract_relations(
    instances: Sequence[ObjectInstance],
    kinds: Mapping[str, ObjectKind],
    params: RelationParams = RelationParams(),
) -> set[Atom]:
    geoms = {inst.id: _geometry(inst, kinds) for inst in instances}
    facts: set[Atom] = set()
    for a_id, a in geoms.items():
        for b_id, b in geoms.items():
            if a_id != b_id:
                facts.update(Atom(rel, (a_id, b_id)) for rel in _pair_relations(a, b, params))
    holders = {f.args[1] for f in facts if f.predicate == "in"}
    for b_id, b in geoms.items():
        if b.cavity is not None:
            facts.add(Atom("filled" if b_id in holders else "empty", (b_id,)))
    return facts


def relation_margins(
    instances: Sequence[ObjectInstance],
    kinds: Mapping[str, ObjectKind],
    params: RelationParams = RelationParams(),
) -> float:
    """Smallest distance from any threshold comparison made by
    :func:`extract_relations`; fact sets are stable under perturbations
    well below this value."""
    geoms = [_geometry(inst, kinds) for inst in instances]
    slack = [math.inf]
    for i, a in enumerate(geoms):
        for j, b in enumerate(geoms):
            if i == j:
                continue
            slack.append(abs(abs(a.bottom - b.top) - params.eps_z))
            if a.area > 0:
                slack.append(abs(_overlap(a, b) / a.area - params.min_overlap))
            dx, dy = b.x - a.x, b.y - a.y
            slack += [abs(dx - params.delta), abs(-dx - params.delta), abs(abs(dy) - params.lateral)]
            slack += [abs(dy - params.delta), abs(-dy - params.delta), abs(abs(dx) - params.lateral)]
            cav = b.cavity
            if cav is not None:
                u, v = _cavity_offsets(a, b)
                if isinstance(cav, Cylinder):
                    slack.append(abs(math.hypot(u, v) - cav.diameter / 2))
                else:
                    slack += [abs(abs(u) - cav.dx / 2), abs(abs(v) - cav.dy / 2)]
                slack += [abs(a.z - (b.top - cav.height)), abs(b.top - a.z), abs(b.top - a.bottom)]
    return min(slack)


def extract_state(
    instances: Sequence[ObjectInstance],
    kinds: Mapping[str, ObjectKind] | Iterable[ObjectKind],
    params: RelationParams = RelationParams(),
) -> SceneState:
    """Symbolic state of the scene: spatial relations plus ``(is <instance> <kind>)``."""
    if not isinstance(kinds, Mapping):
        kinds = {k.id: k for k in kinds}
    facts = extract_relations(instances, kinds, params)
    facts.update(Atom("is", (inst.id, inst.kind)) for inst in instances)
    ordered = tuple(sorted(instances, key=lambda i: i.id))
    return SceneState(ordered, dict(kinds), frozenset(facts))


def diff_states(a: SceneState, b: SceneState) -> tuple[frozenset[Atom], frozenset[Atom]]:
    """Facts added and removed going from ``a`` to ``b``."""
    return b.facts - a.facts, a.facts - b.facts
