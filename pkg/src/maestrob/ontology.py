"""A small URI triple store with the two closures the resolver needs:
``equals-to`` equivalence classes and the reflexive-transitive ``is-a``
order, plus literal-valued properties inherited along ``is-a``.

File format, one triple per line::

    <subject> <predicate> <object>

``object`` is a URI, a double-quoted string, ``true``/``false`` or a number
with an optional ``m`` (meters) suffix.  Tokens without a scheme separator
are expanded into the local ``maestrob:`` namespace, so ``peg is-a part``
is shorthand for ``maestrob:peg maestrob:is-a maestrob:part``.  Lines
starting with ``#`` are comments.
"""

from __future__ import annotations

import re
from collections import defaultdict, deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Union

from .errors import CycleError, InheritanceAmbiguity, ParseError

BASE = "maestrob:"
IS_A = BASE + "is-a"
EQUALS_TO = BASE + "equals-to"

_TOKEN_RE = re.compile(r'"(?:[^"\\]|\\.)*"|\S+')
_NUMBER_RE = re.compile(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?(m)?\Z")


@dataclass(frozen=True)
class Value:
    """A literal triple object; ``unit`` is ``"m"`` for lengths in meters."""

    value: Union[str, float, bool]
    unit: str | None = None

    def __str__(self) -> str:
        if isinstance(self.value, bool):
            return "true" if self.value else "false"
        if isinstance(self.value, str):
            escaped = self.value.replace("\\", "\\\\").replace('"', '\\"')
            return f'"{escaped}"'
        return f"{self.value!r}{self.unit or ''}"


Object = Union[str, Value]


@dataclass(frozen=True)
class Triple:
    subject: str
    predicate: str
    object: Object

    def __str__(self) -> str:
        return f"{self.subject} {self.predicate} {self.object}"


def expand_uri(token: str) -> str:
    return token if ":" in token else BASE + token


def _sort_key(obj: Object) -> tuple:
    if isinstance(obj, Value):
        return (1, type(obj.value).__name__, str(obj))
    return (0, "", obj)


def _parse_object(token: str, line: int) -> Object:
    if token.startswith('"'):
        if len(token) < 2 or not token.endswith('"'):
            raise ParseError(f"unterminated string {token!r}", line)
        return Value(re.sub(r"\\(.)", r"\1", token[1:-1]))
    if token in ("true", "false"):
        return Value(token == "true")
    m = _NUMBER_RE.match(token)
    if m:
        number = token[:-1] if m.group(1) else token
        return Value(float(number), "m" if m.group(1) else None)
    return expand_uri(token)


def parse_triples(text: str) -> list[Triple]:
    triples = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = _TOKEN_RE.findall(line)
        if len(tokens) != 3:
            raise ParseError(f"expected 3 fields, got {len(tokens)}", lineno)
        subj, pred, obj = tokens
        if subj.startswith('"') or pred.startswith('"'):
            raise ParseError("subject and predicate must be URIs", lineno)
        triples.append(Triple(expand_uri(subj), expand_uri(pred), _parse_object(obj, lineno)))
    return triples


class Ontology:
    """Immutable after construction; every query is read-only."""

    def __init__(self, triples: Iterable[Triple] = ()):
        self.triples = frozenset(triples)
        self._canon = self._equivalence_classes()
        self._parents: dict[str, set[str]] = defaultdict(set)
        self._props: dict[str, dict[str, list[Object]]] = defaultdict(lambda: defaultdict(list))
        self._known: set[str] = set()
        for t in self.triples:
            s, p = self.canonical(t.subject), self.canonical(t.predicate)
            o = self.canonical(t.object) if isinstance(t.object, str) else t.object
            self._known.update((s, p))
            if isinstance(o, str):
                self._known.add(o)
            if p == IS_A:
                if isinstance(o, Value):
                    raise ParseError(f"is-a object must be a URI: {t}")
                if o != s:
                    self._parents[s].add(o)
            elif p != EQUALS_TO:
                self._props[s][p].append(o)
        for values in (v for by_pred in self._props.values() for v in by_pred.values()):
            values.sort(key=_sort_key)
        self._check_acyclic()
        self._ancestors = lru_cache(maxsize=None)(self._ancestor_set)

    # -- construction helpers -------------------------------------------------

    def _equivalence_classes(self) -> dict[str, str]:
        parent: dict[str, str] = {}

        def find(x: str) -> str:
            parent.setdefault(x, x)
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for t in self.triples:
            if t.predicate == EQUALS_TO and isinstance(t.object, str):
                a, b = find(t.subject), find(t.object)
                if a != b:
                    lo, hi = sorted((a, b))
                    parent[hi] = lo
        return {x: find(x) for x in parent}

    def _check_acyclic(self) -> None:
        state: dict[str, int] = {}
        for root in sorted(self._parents):
            if state.get(root):
                continue
            stack = [(root, iter(sorted(self._parents[root])))]
            path = [root]
            state[root] = 1
            while stack:
                node, children = stack[-1]
                child = next(children, None)
                if child is None:
                    state[node] = 2
                    stack.pop()
                    path.pop()
                    continue
                if state.get(child) == 1:
                    raise CycleError(path[path.index(child):] + [child])
                if not state.get(child):
                    state[child] = 1
                    path.append(child)
                    stack.append((child, iter(sorted(self._parents.get(child, ())))))

    def _ancestor_set(self, uri: str) -> frozenset[str]:
        seen = {uri}
        todo = [uri]
        while todo:
            for parent in self._parents.get(todo.pop(), ()):
                if parent not in seen:
                    seen.add(parent)
                    todo.append(parent)
        return frozenset(seen)

    # -- queries ----------------------------------------------------------------

    def canonical(self, uri: str) -> str:
        """Representative of ``uri``'s equals-to class (its lexicographic minimum)."""
        return self._canon.get(uri, uri)

    def isa(self, sub: str, sup: str) -> bool:
        return self.canonical(sup) in self._ancestors(self.canonical(sub))

    def knows(self, uri: str) -> bool:
        return self.canonical(uri) in self._known

    def parents(self, uri: str) -> set[str]:
        return set(self._parents.get(self.canonical(uri), ()))

    def property(self, subject: str, predicate: str) -> list[Object]:
        """Values of ``predicate`` on ``subject``, inherited from the nearest
        is-a ancestors when the subject asserts none itself."""
        pred = self.canonical(predicate)
        level = [self.canonical(subject)]
        seen = set(level)
        while level:
            found = {u: self._props[u][pred] for u in level if pred in self._props.get(u, {})}
            if found:
                distinct = {tuple(map(_sort_key, v)) for v in found.values()}
                if len(distinct) > 1:
                    raise InheritanceAmbiguity(self.canonical(subject), pred, found)
                return list(next(iter(found.values())))
            nxt = []
            for u in level:
                for parent in sorted(self._parents.get(u, ())):
                    if parent not in seen:
                        seen.add(parent)
                        nxt.append(parent)
            level = nxt
        return []

    def merged(self, triples: Iterable[Triple]) -> Ontology:
        return Ontology(self.triples | set(triples))

    def dump(self) -> str:
        lines = sorted(str(t) for t in self.triples)
        return "".join(line + "\n" for line in lines)

    def __len__(self) -> int:
        return len(self.triples)

    def __eq__(self, other) -> bool:
        return isinstance(other, Ontology) and self.triples == other.triples

    __hash__ = None


def load(text: str) -> Ontology:
    return Ontology(parse_triples(text))


def isa_chains(o: Ontology) -> list[list[str]]:
    """Maximal is-a chains (root-to-leaf paths, leaf first); used for reporting."""
    children = defaultdict(set)
    for child, parents in o._parents.items():
        for p in parents:
            children[p].add(child)
    leaves = sorted(u for u in o._parents if not children.get(u))
    chains = []
    for leaf in leaves:
        queue = deque([[leaf]])
        while queue:
            path = queue.popleft()
            parents = sorted(o._parents.get(path[-1], ()))
            if not parents:
                chains.append(path)
            queue.extend(path + [p] for p in parents)
    return chains
