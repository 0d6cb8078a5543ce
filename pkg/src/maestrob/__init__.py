"""Semantic task planning for robot manipulation.

Scenes are turned into symbolic facts, PDDL domains annotated with ontology
URIs are resolved into plain PDDL, a forward-search planner orders skills,
and a simulated runtime executes them with replanning over a blackboard.
"""

from .errors import MaestrobError
from .ontology import Ontology
from .pddl import Atom, Domain, Literal, Problem, parse_domain, parse_problem, print_domain, print_problem
from .planner import NoPlan, PlanResult, ground, plan, solve
from .resolver import resolve
from .scene import RelationParams, extract_state, load_object_db, load_scene

__all__ = [
    "Atom", "Domain", "Literal", "MaestrobError", "NoPlan", "Ontology", "PlanResult", "Problem",
    "RelationParams", "extract_state", "ground", "load_object_db", "load_scene", "parse_domain",
    "parse_problem", "plan", "print_domain", "print_problem", "resolve", "solve",
]
