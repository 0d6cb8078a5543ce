"""Exception hierarchy shared by every stage of the pipeline.

The CLI maps these onto its exit codes, so each class carries the
structured detail a caller needs without re-parsing the message.
"""

from __future__ import annotations


class MaestrobError(Exception):
    """Base class for all domain errors raised by this package."""


# -- parsing / validation -----------------------------------------------------


class ParseError(MaestrobError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class PddlSyntaxError(ParseError):
    """Malformed s-expression source; ``line``/``column`` are 1-based."""

    def __init__(self, line: int, column: int, expected: str, found: str = ""):
        self.column = column
        self.expected = expected
        self.found = found
        detail = f"expected {expected}"
        if found:
            detail += f", found {found!r}"
        super().__init__(f"column {column}: {detail}", line)


class ValidationError(MaestrobError):
    pass


class DimensionError(ValidationError):
    pass


# -- ontology -------------------------------------------------------------------


class CycleError(MaestrobError):
    def __init__(self, cycle: list[str]):
        self.cycle = cycle
        super().__init__("is-a cycle: " + " -> ".join(cycle))


class InheritanceAmbiguity(MaestrobError):
    def __init__(self, subject: str, predicate: str, candidates: dict[str, list]):
        self.subject = subject
        self.predicate = predicate
        self.candidates = candidates
        super().__init__(
            f"{subject} inherits conflicting {predicate} values from "
            + ", ".join(sorted(candidates))
        )


# -- scene ---------------------------------------------------------------------


class UnknownKind(MaestrobError):
    def __init__(self, instance: str, kind: str):
        self.instance = instance
        self.kind = kind
        super().__init__(f"instance {instance} refers to unknown kind {kind}")


# -- resolver ------------------------------------------------------------------


class ResolveError(MaestrobError):
    pass


class MissingProperty(ResolveError):
    def __init__(self, uri: str, predicate: str):
        self.uri = uri
        self.predicate = predicate
        super().__init__(f"{uri} has no {predicate} property")


class UnknownSymbol(ResolveError):
    def __init__(self, symbol: str, uri: str):
        self.symbol = symbol
        self.uri = uri
        super().__init__(f"context symbol {symbol} maps to {uri}, which the ontology does not know")


class UncoveredPredicate(ResolveError):
    def __init__(self, predicate: str, action: str):
        self.predicate = predicate
        self.action = action
        super().__init__(
            f"precondition {predicate} of {action} is neither initialized, an effect, nor rule-derived"
        )


# -- planner -------------------------------------------------------------------


class ResourceLimit(MaestrobError):
    def __init__(self, kind: str, limit: float, expanded: int):
        self.kind = kind
        self.limit = limit
        self.expanded = expanded
        super().__init__(f"search exceeded {kind} limit {limit} after {expanded} expansions")


# -- language grounding --------------------------------------------------------


class GroundingError(MaestrobError):
    pass


class NoMatch(GroundingError):
    def __init__(self, best_score: float):
        self.best_score = best_score
        super().__init__(f"no template reached the threshold (best score {best_score:.3f})")


class AmbiguousMatch(GroundingError):
    def __init__(self, templates: list[str], score: float):
        self.templates = templates
        self.score = score
        super().__init__(f"templates tied at {score:.3f}: {', '.join(templates)}; clarification needed")


class AmbiguousBinding(GroundingError):
    def __init__(self, slot: str, candidates: list[str]):
        self.slot = slot
        self.candidates = candidates
        what = ", ".join(candidates) if candidates else "no object"
        super().__init__(f"slot {slot} cannot be bound uniquely ({what})")


class EmptyDemoDiff(GroundingError):
    def __init__(self):
        super().__init__("demonstration frames are symbolically identical")


# -- skills --------------------------------------------------------------------


class SkillError(MaestrobError):
    pass


class CyclicComposite(SkillError):
    def __init__(self, cycle: list[str]):
        self.cycle = cycle
        super().__init__("composite skill cycle: " + " -> ".join(cycle))


class DuplicateBinding(SkillError):
    def __init__(self, action: str, skills: list[str]):
        self.action = action
        self.skills = skills
        super().__init__(f"action {action} is bound by several skills: {', '.join(skills)}")


class SkillConflict(SkillError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"skill {name} defined differently in both databases")


class UnknownGesture(SkillError):
    def __init__(self, gesture: str, platform: str):
        self.gesture = gesture
        self.platform = platform
        super().__init__(f"platform {platform} has no gesture {gesture}")


class UnboundSkill(SkillError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"no skill named or bound to {name}")


# -- blackboard ----------------------------------------------------------------


class BusError(MaestrobError):
    pass


class BusClosed(BusError):
    pass


class InvalidPattern(BusError):
    pass
