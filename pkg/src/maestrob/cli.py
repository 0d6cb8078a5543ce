"""``maestrob`` command line: one subcommand per pipeline stage plus ``run``.

Exit codes::

    0  success (run: Succeeded or ReplannedThenSucceeded)
    1  internal fault
    2  unreadable or invalid input file
    3  semantic resolution failed (missing property, unknown symbol, ...)
    4  no plan (search space exhausted or resource limit hit)
    5  run ended with a human-assistance request
    6  goal grounding failed (no match, ambiguity, empty demonstration)
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import ontology as onto
from .blackboard import Blackboard, bridge_export
from .errors import GroundingError, MaestrobError, ResolveError, ResourceLimit, InheritanceAmbiguity
from .grounding import DEFAULT_THRESHOLD, goal_from_demo, load_templates, match
from .pddl import Literal, parse_domain, parse_problem, print_domain, print_problem
from .planner import DEFAULT_MAX_NODES, DEFAULT_MAX_SECONDS, NoPlan, ground, plan
from .resolver import DEFAULT_CLEARANCE, INSERTABLE, ConstraintRule, load_rules, resolve
from .runtime import PlanningInputs, ReplanPolicy, ScriptedHuman, load_assistance_script, run_plan
from .scene import RelationParams, extract_state, load_object_db, load_scene
from .skills import SimWorld, dump_skill_db, load_failure_script, load_skill_db, share_skills

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_RESOLVE, EXIT_NOPLAN, EXIT_ASSIST, EXIT_GROUND = range(7)


class CliExit(Exception):
    def __init__(self, code: int, message: str = ""):
        self.code = code
        super().__init__(message)


@dataclass
class RunConfig:
    object_db: Path
    scene: Path
    ontology: Path
    domain: Path
    skills: list[Path]
    rules: Path | None = None
    problem: Path | None = None
    templates: Path | None = None
    utterance: str | None = None
    demo_initial: Path | None = None
    demo_final: Path | None = None
    failure_script: Path | None = None
    assistance_script: Path | None = None
    bus_log: Path | None = None
    relations: RelationParams = field(default_factory=RelationParams)
    clearance: float = DEFAULT_CLEARANCE
    threshold: float = DEFAULT_THRESHOLD
    policy: ReplanPolicy = field(default_factory=ReplanPolicy)
    seed: int = 0
    failure_rate: float = 0.0

    def goal_source(self) -> str:
        sources = [
            name
            for name, given in (
                ("problem", self.problem is not None),
                ("utterance", self.utterance is not None),
                ("demo", self.demo_initial is not None or self.demo_final is not None),
            )
            if given
        ]
        if len(sources) != 1:
            raise CliExit(EXIT_INPUT, "exactly one goal source required: --problem, --utterance, or --demo-initial/--demo-final")
        if sources[0] == "utterance" and self.templates is None:
            raise CliExit(EXIT_INPUT, "--utterance needs --templates")
        if sources[0] == "demo" and (self.demo_initial is None or self.demo_final is None):
            raise CliExit(EXIT_INPUT, "a demonstration needs both --demo-initial and --demo-final")
        return sources[0]


def _read(path: Path | str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliExit(EXIT_INPUT, f"cannot read {path}: {exc.strerror}") from None


def _relation_params(args) -> RelationParams:
    return RelationParams(eps_z=args.eps_z, delta=args.delta, lateral=args.lateral)


def _kinds(path) -> dict:
    return {k.id: k for k in load_object_db(_read(path))}


def _scene_state(scene_path, kinds, params):
    instances = load_scene(_read(scene_path)) if scene_path else []
    return extract_state(instances, kinds, params)


def _rules(path, clearance: float) -> list[ConstraintRule]:
    if path is None:
        return [ConstraintRule(INSERTABLE.name, INSERTABLE.param_kinds, INSERTABLE.guard, {"clearance": clearance})]
    return load_rules(_read(path))


def _emit(args, lines: Sequence[str], key: str) -> None:
    if args.format == "doc":
        print(json.dumps({key: list(lines)}, indent=2))
    else:
        for line in lines:
            print(line)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_extract(args) -> int:
    kinds = _kinds(args.object_db)
    state = _scene_state(args.scene, kinds, _relation_params(args))
    _emit(args, [str(f) for f in sorted(state.facts)], "facts")
    return EXIT_OK


def cmd_resolve(args) -> int:
    domain = parse_domain(_read(args.domain))
    problem = parse_problem(_read(args.problem))
    kinds = _kinds(args.object_db) if args.object_db else {}
    state = _scene_state(args.scene, kinds, _relation_params(args))
    ontology = onto.load(_read(args.ontology)) if args.ontology else onto.Ontology()
    pair = resolve(domain, problem, ontology, state, _rules(args.rules, args.clearance))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "domain.pddl").write_text(print_domain(pair.domain, emit_context=False), encoding="utf-8")
    (out / "problem.pddl").write_text(print_problem(pair.problem, emit_context=False), encoding="utf-8")
    written = [str(out / "domain.pddl"), str(out / "problem.pddl")]
    if args.provenance:
        Path(args.provenance).write_text(pair.report(), encoding="utf-8")
        written.append(str(args.provenance))
    _emit(args, written, "written")
    return EXIT_OK


def cmd_plan(args) -> int:
    domain = parse_domain(_read(args.domain))
    problem = parse_problem(_read(args.problem))
    result = plan(
        problem.init, problem.goal, ground(domain, problem),
        mode=args.mode, max_nodes=args.max_nodes, max_seconds=args.max_time,
    )
    if isinstance(result, NoPlan):
        print(f"no plan ({result.stats.expanded} states expanded)", file=sys.stderr)
        return EXIT_NOPLAN
    _emit(args, [f"{i}: {s}" for i, s in enumerate(result.steps)], "plan")
    return EXIT_OK


def _goal(cfg_source: str, args, state, ontology, domain=None) -> list[Literal]:
    if cfg_source == "utterance":
        grounded = match(args.utterance, load_templates(_read(args.templates)), state, ontology, args.threshold)
        return list(grounded.goal)
    kinds = state.kinds
    params = state_params = _relation_params(args)
    initial = extract_state(load_scene(_read(args.demo_initial)), kinds, state_params)
    final = extract_state(load_scene(_read(args.demo_final)), kinds, params)
    goal = goal_from_demo(initial, final)
    if domain is not None:
        vocabulary = {p.name for p in domain.predicates}
        goal = tuple(lit for lit in goal if lit.atom.predicate in vocabulary)
    return list(goal)


def cmd_ground(args) -> int:
    if (args.utterance is None) == (args.demo_initial is None):
        raise CliExit(EXIT_INPUT, "give either --utterance or --demo-initial/--demo-final")
    kinds = _kinds(args.object_db)
    state = _scene_state(args.scene, kinds, _relation_params(args))
    ontology = onto.load(_read(args.ontology)) if args.ontology else onto.Ontology()
    domain = parse_domain(_read(args.domain)) if args.domain else None
    if args.utterance is not None:
        if args.templates is None:
            raise CliExit(EXIT_INPUT, "--utterance needs --templates")
        goal = _goal("utterance", args, state, ontology)
    else:
        if args.demo_final is None:
            raise CliExit(EXIT_INPUT, "--demo-initial needs --demo-final")
        goal = _goal("demo", args, state, ontology, domain)
    _emit(args, [str(lit) for lit in goal], "goal")
    return EXIT_OK


def run_config(args) -> RunConfig:
    return RunConfig(
        object_db=Path(args.object_db),
        scene=Path(args.scene),
        ontology=Path(args.ontology),
        domain=Path(args.domain),
        skills=[Path(p) for p in args.skills],
        rules=Path(args.rules) if args.rules else None,
        problem=Path(args.problem) if args.problem else None,
        templates=Path(args.templates) if args.templates else None,
        utterance=args.utterance,
        demo_initial=Path(args.demo_initial) if args.demo_initial else None,
        demo_final=Path(args.demo_final) if args.demo_final else None,
        failure_script=Path(args.failure_script) if args.failure_script else None,
        assistance_script=Path(args.assistance_script) if args.assistance_script else None,
        bus_log=Path(args.bus_log) if args.bus_log else None,
        relations=_relation_params(args),
        clearance=args.clearance,
        threshold=args.threshold,
        policy=ReplanPolicy(max_replans=args.max_replans, search_mode=args.mode,
                            max_nodes=args.max_nodes, max_seconds=args.max_time),
        seed=args.seed,
        failure_rate=args.failure_rate,
    )


def cmd_run(args) -> int:
    cfg = run_config(args)
    source = cfg.goal_source()
    kinds = _kinds(cfg.object_db)
    instances = load_scene(_read(cfg.scene))
    ontology = onto.load(_read(cfg.ontology))
    domain = parse_domain(_read(cfg.domain))
    problem = parse_problem(_read(cfg.problem)) if cfg.problem else None
    skills: list = []
    for path in cfg.skills:
        skills = share_skills(load_skill_db(_read(path)), skills)
    failures = load_failure_script(_read(cfg.failure_script)) if cfg.failure_script else []
    responses = load_assistance_script(_read(cfg.assistance_script)) if cfg.assistance_script else []

    bus = Blackboard()
    sink = open(cfg.bus_log, "w", encoding="utf-8") if cfg.bus_log else None
    try:
        if sink:
            bridge_export(bus, "*", sink)
        ScriptedHuman(bus, responses)
        world = SimWorld.from_scene(instances, kinds, params=cfg.relations, failure_script=failures,
                                    seed=cfg.seed, failure_rate=cfg.failure_rate)
        state = world.state()
        if source == "problem":
            goal = list(problem.goal)
        else:
            goal = _goal(source, args, state, ontology, domain)
            bus.publish("grounding/goal", {"goal": [str(g) for g in goal], "source": source}, origin="grounding")
        inputs = PlanningInputs(domain, ontology, skills, problem, _rules(cfg.rules, cfg.clearance))
        trace = run_plan(goal, inputs, world, cfg.policy, bus)
    finally:
        bus.close()
        if sink:
            sink.close()
    sys.stdout.write(trace.log())
    return EXIT_OK if trace.succeeded else EXIT_ASSIST


def cmd_skills_merge(args) -> int:
    merged: list = []
    for path in args.dbs:
        merged = share_skills(load_skill_db(_read(path)), merged)
    text = dump_skill_db(merged)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_relation_flags(p: argparse.ArgumentParser) -> None:
    d = RelationParams()
    p.add_argument("--eps-z", type=float, default=d.eps_z, help="vertical contact tolerance for 'on' (m)")
    p.add_argument("--delta", type=float, default=d.delta, help="minimum offset for directional relations (m)")
    p.add_argument("--lateral", type=float, default=d.lateral, help="maximum cross-axis offset (m)")


def _add_planner_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=("bfs", "greedy"), default="bfs")
    p.add_argument("--max-nodes", type=int, default=DEFAULT_MAX_NODES)
    p.add_argument("--max-time", type=float, default=DEFAULT_MAX_SECONDS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maestrob", description="Semantic task planning and execution pipeline.")
    parser.add_argument("--format", choices=("lines", "doc"), default="lines")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="print the symbolic state of a scene")
    p.add_argument("--scene", required=True)
    p.add_argument("--object-db", required=True)
    _add_relation_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("resolve", help="compile PDDLS into a runnable PDDL pair")
    p.add_argument("--domain", required=True)
    p.add_argument("--problem", required=True)
    p.add_argument("--ontology")
    p.add_argument("--scene")
    p.add_argument("--object-db")
    p.add_argument("--rules")
    p.add_argument("--clearance", type=float, default=DEFAULT_CLEARANCE)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--provenance", help="write the derived-fact provenance report here")
    _add_relation_flags(p)
    p.set_defaults(func=cmd_resolve)

    p = sub.add_parser("plan", help="plan for a plain PDDL pair")
    p.add_argument("--domain", required=True)
    p.add_argument("--problem", required=True)
    _add_planner_flags(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("ground", help="derive a goal from an utterance or demo frames")
    p.add_argument("--scene", required=True)
    p.add_argument("--object-db", required=True)
    p.add_argument("--ontology")
    p.add_argument("--templates")
    p.add_argument("--utterance")
    p.add_argument("--demo-initial")
    p.add_argument("--demo-final")
    p.add_argument("--domain", help="restrict a demonstrated goal to this domain's predicates")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    _add_relation_flags(p)
    p.set_defaults(func=cmd_ground)

    p = sub.add_parser("run", help="plan and execute in simulation with replanning")
    p.add_argument("--object-db", required=True)
    p.add_argument("--scene", required=True)
    p.add_argument("--ontology", required=True)
    p.add_argument("--domain", required=True)
    p.add_argument("--skills", action="append", required=True, help="skill db; repeat to merge several")
    p.add_argument("--rules")
    p.add_argument("--problem")
    p.add_argument("--templates")
    p.add_argument("--utterance")
    p.add_argument("--demo-initial")
    p.add_argument("--demo-final")
    p.add_argument("--failure-script")
    p.add_argument("--assistance-script")
    p.add_argument("--bus-log", help="export every blackboard message to this file")
    p.add_argument("--clearance", type=float, default=DEFAULT_CLEARANCE)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--max-replans", type=int, default=ReplanPolicy().max_replans)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--failure-rate", type=float, default=0.0, help="seeded random skill failure probability")
    _add_relation_flags(p)
    _add_planner_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("skills", help="skill database tools")
    skills_sub = p.add_subparsers(dest="skills_command", required=True)
    m = skills_sub.add_parser("merge", help="share skill databases")
    m.add_argument("dbs", nargs="+")
    m.add_argument("--out")
    m.set_defaults(func=cmd_skills_merge)
    return parser


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, CliExit):
        return exc.code
    if isinstance(exc, GroundingError):
        return EXIT_GROUND
    if isinstance(exc, (ResolveError, InheritanceAmbiguity)):
        return EXIT_RESOLVE
    if isinstance(exc, ResourceLimit):
        return EXIT_NOPLAN
    if isinstance(exc, MaestrobError):
        return EXIT_INPUT
    return EXIT_INTERNAL


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (MaestrobError, CliExit) as exc:
        print(f"maestrob {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code(exc)
    except Exception as exc:  # noqa: BLE001
        print(f"maestrob {args.command}: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
