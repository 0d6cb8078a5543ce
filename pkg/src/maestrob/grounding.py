"""Map command utterances or demonstration frames to ground goal states.

Matching is deliberately symbolic: every template is scored by the best
Jaccard overlap between the utterance's token set and one of its example
phrases, where ``?slot`` tokens in a phrase act as one-token wildcards.
Scores are computed as exact fractions so ties are real ties.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import AmbiguousBinding, AmbiguousMatch, EmptyDemoDiff, NoMatch, ParseError, ValidationError
from .ontology import Ontology, expand_uri
from .pddl import Literal, parse_literal
from .scene import SceneState, diff_states

DEFAULT_THRESHOLD = 0.5

_WORD_RE = re.compile(r"\?[a-z0-9_-]+|[a-z0-9]+(?:[-'][a-z0-9]+)*")


@dataclass(frozen=True)
class GoalTemplate:
    id: str
    phrases: tuple[str, ...]
    goal: tuple[Literal, ...]
    slots: Mapping[str, str]

    def validate(self) -> None:
        if not self.phrases:
            raise ValidationError(f"template {self.id} has no phrases")
        used = {a for lit in self.goal for a in lit.atom.args if a.startswith("?")}
        missing = sorted(used - set(self.slots))
        if missing:
            raise ValidationError(f"template {self.id}: goal slot(s) {', '.join(missing)} not declared")


@dataclass(frozen=True)
class GroundedGoal:
    template: str
    bindings: Mapping[str, str]
    goal: tuple[Literal, ...]
    score: float


def tokenize(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


def load_templates(text: str) -> list[GoalTemplate]:
    try:
        doc = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ParseError(f"templates: {exc.msg}", exc.lineno) from None
    templates = []
    for entry in doc.get("templates", []):
        try:
            tpl = GoalTemplate(
                str(entry["id"]),
                tuple(entry["phrases"]),
                tuple(parse_literal(g) for g in entry["goal"]),
                {k: expand_uri(v) for k, v in entry.get("slots", {}).items()},
            )
        except (KeyError, TypeError) as exc:
            raise ParseError(f"template entry missing field {exc}") from None
        tpl.validate()
        templates.append(tpl)
    return templates


def phrase_score(utterance: Sequence[str], phrase: Sequence[str]) -> Fraction:
    """Jaccard similarity with each ``?slot`` phrase token matching one spare utterance token."""
    u = set(utterance)
    fixed = {t for t in phrase if not t.startswith("?")}
    wildcards = len({t for t in phrase if t.startswith("?")})
    absorbed = min(wildcards, len(u - fixed))
    inter = len(u & fixed) + absorbed
    union = len(u | fixed) + wildcards - absorbed
    return Fraction(inter, union) if union else Fraction(0)


def score_templates(utterance: str, templates: Sequence[GoalTemplate]) -> dict[str, Fraction]:
    tokens = tokenize(utterance)
    return {
        tpl.id: max(phrase_score(tokens, tokenize(p)) for p in tpl.phrases)
        for tpl in templates
    }


def classify(utterance: str, templates: Sequence[GoalTemplate], threshold: float = DEFAULT_THRESHOLD) -> tuple[GoalTemplate, Fraction]:
    if not templates:
        raise ValueError("no templates to match against")
    scores = score_templates(utterance, templates)
    best = max(scores.values())
    if best == 0 or best < threshold:
        raise NoMatch(float(best))
    winners = sorted(tid for tid, s in scores.items() if s == best)
    if len(winners) > 1:
        raise AmbiguousMatch(winners, float(best))
    return next(t for t in templates if t.id == winners[0]), best


def bind_slots(template: GoalTemplate, scene: SceneState, ontology: Ontology) -> dict[str, str]:
    bindings = {}
    for slot, kind_uri in sorted(template.slots.items()):
        candidates = sorted(
            inst.id for inst in scene.instances if ontology.isa(scene.kinds[inst.kind].uri, kind_uri)
        )
        if len(candidates) != 1:
            raise AmbiguousBinding(slot, candidates)
        bindings[slot] = candidates[0]
    return bindings


def match(
    utterance: str,
    templates: Sequence[GoalTemplate],
    scene: SceneState,
    ontology: Ontology,
    threshold: float = DEFAULT_THRESHOLD,
) -> GroundedGoal:
    template, score = classify(utterance, templates, threshold)
    bindings = bind_slots(template, scene, ontology)
    goal = tuple(sorted(lit.substitute(bindings) for lit in template.goal))
    return GroundedGoal(template.id, bindings, goal, float(score))


def goal_from_demo(initial: SceneState, final: SceneState) -> tuple[Literal, ...]:
    """Goal = the facts the demonstration's final frame adds to its initial frame."""
    added, _ = diff_states(initial, final)
    if not added:
        raise EmptyDemoDiff()
    return tuple(Literal(a) for a in sorted(added))
