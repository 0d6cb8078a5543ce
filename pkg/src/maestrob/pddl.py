"""PDDLS front end: tokenizer, s-expression reader, domain/problem model,
validation and canonical printer.

The dialect is STRIPS with ``:typing`` and negative preconditions/goals,
plus an optional ``(:context (sym "URI") ...)`` block in both domains and
problems that binds planning symbols to ontology URIs.  A file without a
context block is plain PDDL and parses unchanged.

All values are normalised on construction (sections sorted by name,
literal sets sorted), so two values are equal iff their canonical
printouts are byte-identical.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import PddlSyntaxError, ValidationError

ROOT_TYPE = "object"
SUPPORTED_REQUIREMENTS = frozenset({":strips", ":typing", ":negative-preconditions", ":equality"})

_SYMBOL_RE = re.compile(r"[a-z][a-z0-9_-]*\Z")
_VARIABLE_RE = re.compile(r"\?[a-z][a-z0-9_-]*\Z")
_KEYWORD_RE = re.compile(r":[a-z][a-z0-9_-]*\Z")


def is_symbol(text: str) -> bool:
    return bool(_SYMBOL_RE.match(text))


def is_variable(text: str) -> bool:
    return bool(_VARIABLE_RE.match(text))


# ---------------------------------------------------------------------------
# Data model
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Atom:
    """``predicate(args...)``; ground atoms are the planner's facts."""

    predicate: str
    args: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))

    @property
    def is_ground(self) -> bool:
        return not any(a.startswith("?") for a in self.args)

    def substitute(self, binding: Mapping[str, str]) -> Atom:
        return Atom(self.predicate, tuple(binding.get(a, a) for a in self.args))

    def to_pddl(self) -> str:
        return "(" + " ".join((self.predicate, *self.args)) + ")"

    def __str__(self) -> str:
        return f"{self.predicate}({','.join(self.args)})"


Fact = Atom


@dataclass(frozen=True, order=True)
class Literal:
    atom: Atom
    positive: bool = True

    def substitute(self, binding: Mapping[str, str]) -> Literal:
        return Literal(self.atom.substitute(binding), self.positive)

    def holds_in(self, facts: frozenset[Atom] | set[Atom]) -> bool:
        return (self.atom in facts) == self.positive

    def to_pddl(self) -> str:
        text = self.atom.to_pddl()
        return text if self.positive else f"(not {text})"

    def __str__(self) -> str:
        return str(self.atom) if self.positive else f"not {self.atom}"


@dataclass(frozen=True, order=True)
class TypeDecl:
    name: str
    parent: str = ROOT_TYPE


@dataclass(frozen=True, order=True)
class Predicate:
    name: str
    params: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(tuple(p) for p in self.params))

    @property
    def arity(self) -> int:
        return len(self.params)


def _sorted_unique(items: Iterable) -> tuple:
    return tuple(sorted(set(items)))


@dataclass(frozen=True)
class ActionSchema:
    name: str
    params: tuple[tuple[str, str], ...] = ()
    precondition: tuple[Literal, ...] = ()
    add: tuple[Atom, ...] = ()
    delete: tuple[Atom, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(tuple(p) for p in self.params))
        object.__setattr__(self, "precondition", _sorted_unique(self.precondition))
        object.__setattr__(self, "add", _sorted_unique(self.add))
        object.__setattr__(self, "delete", _sorted_unique(self.delete))

    def atoms(self) -> Iterator[Atom]:
        yield from (lit.atom for lit in self.precondition)
        yield from self.add
        yield from self.delete


@dataclass(frozen=True)
class Domain:
    name: str
    requirements: tuple[str, ...] = ()
    types: tuple[TypeDecl, ...] = ()
    predicates: tuple[Predicate, ...] = ()
    actions: tuple[ActionSchema, ...] = ()
    context: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "requirements", _sorted_unique(self.requirements))
        object.__setattr__(self, "types", tuple(sorted(self.types)))
        object.__setattr__(self, "predicates", tuple(sorted(self.predicates)))
        object.__setattr__(self, "actions", tuple(sorted(self.actions, key=lambda a: a.name)))
        object.__setattr__(self, "context", dict(sorted(self.context.items())))

    def predicate(self, name: str) -> Predicate | None:
        for pred in self.predicates:
            if pred.name == name:
                return pred
        return None

    def action(self, name: str) -> ActionSchema | None:
        for act in self.actions:
            if act.name == name:
                return act
        return None

    def type_parents(self) -> dict[str, str]:
        return {t.name: t.parent for t in self.types}

    def is_subtype(self, sub: str, sup: str) -> bool:
        parents = self.type_parents()
        seen = set()
        while sub not in seen:
            if sub == sup:
                return True
            seen.add(sub)
            if sub == ROOT_TYPE:
                return False
            sub = parents.get(sub, ROOT_TYPE)
        return False

    def fluent_predicates(self) -> set[str]:
        return {a.predicate for act in self.actions for a in (*act.add, *act.delete)}

    def validate(self) -> None:
        _validate_domain(self)


@dataclass(frozen=True)
class Problem:
    name: str
    domain_name: str
    objects: tuple[tuple[str, str], ...] = ()
    init: frozenset[Atom] = frozenset()
    goal: tuple[Literal, ...] = ()
    context: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(sorted(tuple(o) for o in self.objects)))
        object.__setattr__(self, "init", frozenset(self.init))
        object.__setattr__(self, "goal", _sorted_unique(self.goal))
        object.__setattr__(self, "context", dict(sorted(self.context.items())))

    def object_types(self) -> dict[str, str]:
        return dict(self.objects)

    def validate(self) -> None:
        _validate_problem(self)


# ---------------------------------------------------------------------------
# Tokenizer and s-expression reader
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Token:
    kind: str  # "(", ")", "atom", "string"
    value: str
    line: int
    column: int


@dataclass
class SList:
    items: list
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col, i, n = 1, 1, 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line, col, i = line + 1, 1, i + 1
            continue
        if ch.isspace():
            i, col = i + 1, col + 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in "()":
            tokens.append(Token(ch, ch, line, col))
            i, col = i + 1, col + 1
            continue
        if ch == '"':
            j = i + 1
            while j < n and text[j] not in '"\n':
                j += 1
            if j >= n or text[j] != '"':
                raise PddlSyntaxError(line, col, "closing quote")
            tokens.append(Token("string", text[i + 1 : j], line, col))
            col += j + 1 - i
            i = j + 1
            continue
        j = i
        while j < n and not text[j].isspace() and text[j] not in '();"':
            j += 1
        tokens.append(Token("atom", text[i:j].lower(), line, col))
        col += j - i
        i = j
    tokens.append(Token("eof", "", line, col))
    return tokens


def read_sexpr(text: str) -> SList:
    """Read exactly one top-level list from ``text``."""
    tokens = tokenize(text)
    pos = 0

    def read() -> SList | Token:
        nonlocal pos
        tok = tokens[pos]
        if tok.kind == "(":
            pos += 1
            items = []
            while tokens[pos].kind != ")":
                if tokens[pos].kind == "eof":
                    t = tokens[pos]
                    raise PddlSyntaxError(t.line, t.column, "')'", "end of input")
                items.append(read())
            pos += 1
            return SList(items, tok.line, tok.column)
        if tok.kind == ")":
            raise PddlSyntaxError(tok.line, tok.column, "'(' or atom", ")")
        if tok.kind == "eof":
            raise PddlSyntaxError(tok.line, tok.column, "'('", "end of input")
        pos += 1
        return tok

    first = tokens[0]
    if first.kind != "(":
        raise PddlSyntaxError(first.line, first.column, "'('", first.value or "end of input")
    tree = read()
    rest = tokens[pos]
    if rest.kind != "eof":
        raise PddlSyntaxError(rest.line, rest.column, "end of input", rest.value)
    return tree


# ---------------------------------------------------------------------------
# Tree interpretation helpers
# ---------------------------------------------------------------------------


def _where(node) -> tuple[int, int]:
    return node.line, node.column


def _fail(node, expected: str) -> PddlSyntaxError:
    found = node.value if isinstance(node, Token) else "(...)"
    return PddlSyntaxError(*_where(node), expected, found)


def _atom(node, expected: str = "symbol", pattern=_SYMBOL_RE) -> str:
    if not isinstance(node, Token) or node.kind != "atom" or not pattern.match(node.value):
        raise _fail(node, expected)
    return node.value


def _list(node, expected: str) -> SList:
    if not isinstance(node, SList):
        raise _fail(node, expected)
    return node


def _head(node: SList) -> str | None:
    if node.items and isinstance(node.items[0], Token) and node.items[0].kind == "atom":
        return node.items[0].value
    return None


def _typed_list(items: Sequence, name_pattern=_SYMBOL_RE, what: str = "symbol") -> list[tuple[str, str]]:
    out: list[tuple[str, str]] = []
    pending: list[str] = []
    i = 0
    while i < len(items):
        node = items[i]
        if isinstance(node, Token) and node.value == "-":
            if not pending or i + 1 >= len(items):
                raise _fail(node, f"{what} before '-' and a type after it")
            typ = _atom(items[i + 1], "type name")
            out.extend((p, typ) for p in pending)
            pending = []
            i += 2
            continue
        pending.append(_atom(node, what, name_pattern))
        i += 1
    out.extend((p, ROOT_TYPE) for p in pending)
    return out


def _parse_atom(node, allow_vars: bool) -> Atom:
    lst = _list(node, "atomic formula")
    if not lst.items:
        raise _fail(lst, "predicate name")
    name = _atom(lst.items[0], "predicate name")
    args = []
    for arg in lst.items[1:]:
        if allow_vars and isinstance(arg, Token) and arg.value.startswith("?"):
            args.append(_atom(arg, "variable", _VARIABLE_RE))
        else:
            args.append(_atom(arg, "object name"))
    return Atom(name, tuple(args))


def _parse_literal(node, allow_vars: bool) -> Literal:
    lst = _list(node, "literal")
    if _head(lst) == "not":
        if len(lst.items) != 2:
            raise _fail(lst, "(not <atom>)")
        return Literal(_parse_atom(lst.items[1], allow_vars), False)
    return Literal(_parse_atom(lst, allow_vars), True)


def _parse_conjunction(node, allow_vars: bool) -> list[Literal]:
    lst = _list(node, "conjunction")
    if not lst.items:
        return []
    if _head(lst) == "and":
        return [_parse_literal(item, allow_vars) for item in lst.items[1:]]
    return [_parse_literal(lst, allow_vars)]


def _parse_context(node: SList) -> dict[str, str]:
    entries: dict[str, str] = {}
    for entry in node.items[1:]:
        lst = _list(entry, '(symbol "URI")')
        if len(lst.items) != 2:
            raise _fail(lst, '(symbol "URI")')
        sym = _atom(lst.items[0], "context symbol")
        uri_tok = lst.items[1]
        if not isinstance(uri_tok, Token) or uri_tok.kind != "string":
            raise _fail(uri_tok, "quoted URI")
        if sym in entries:
            raise ValidationError(f"line {lst.line}: symbol {sym} annotated twice in :context")
        if ":" not in uri_tok.value:
            raise ValidationError(f"line {uri_tok.line}: URI {uri_tok.value!r} is not absolute")
        entries[sym] = uri_tok.value
    return entries


def _parse_header(tree: SList, kind: str) -> str:
    if _head(tree) != "define":
        raise _fail(tree.items[0] if tree.items else tree, "'define'")
    if len(tree.items) < 2:
        raise _fail(tree, f"({kind} <name>)")
    header = _list(tree.items[1], f"({kind} <name>)")
    if _head(header) != kind or len(header.items) != 2:
        raise _fail(header, f"({kind} <name>)")
    return _atom(header.items[1], f"{kind} name")


def _sections(tree: SList) -> Iterator[tuple[str, SList]]:
    for node in tree.items[2:]:
        sec = _list(node, "section")
        head = _head(sec)
        if head is None or not _KEYWORD_RE.match(head):
            raise _fail(sec.items[0] if sec.items else sec, "section keyword")
        yield head, sec


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _parse_action(sec: SList) -> ActionSchema:
    items = sec.items
    if len(items) < 2:
        raise _fail(sec, "action name")
    name = _atom(items[1], "action name")
    params: list[tuple[str, str]] = []
    pre: list[Literal] = []
    add: list[Atom] = []
    delete: list[Atom] = []
    i = 2
    while i < len(items):
        key = items[i]
        if not isinstance(key, Token) or i + 1 >= len(items):
            raise _fail(key, ":parameters, :precondition or :effect followed by a value")
        value = items[i + 1]
        if key.value == ":parameters":
            params = _typed_list(_list(value, "parameter list").items, _VARIABLE_RE, "variable")
        elif key.value == ":precondition":
            pre = _parse_conjunction(value, allow_vars=True)
        elif key.value == ":effect":
            for lit in _parse_conjunction(value, allow_vars=True):
                (add if lit.positive else delete).append(lit.atom)
        else:
            raise _fail(key, ":parameters, :precondition or :effect")
        i += 2
    return ActionSchema(name, tuple(params), tuple(pre), tuple(add), tuple(delete))


def parse_domain(text: str) -> Domain:
    """Parse and validate a PDDLS (or plain PDDL) domain."""
    tree = read_sexpr(text)
    name = _parse_header(tree, "domain")
    requirements: list[str] = []
    types: list[TypeDecl] = []
    predicates: list[Predicate] = []
    actions: list[ActionSchema] = []
    context: dict[str, str] = {}
    seen_actions: set[str] = set()
    for head, sec in _sections(tree):
        if head == ":requirements":
            requirements.extend(_atom(r, "requirement", _KEYWORD_RE) for r in sec.items[1:])
        elif head == ":types":
            types.extend(TypeDecl(n, p) for n, p in _typed_list(sec.items[1:], what="type name"))
        elif head == ":predicates":
            for node in sec.items[1:]:
                lst = _list(node, "predicate declaration")
                if not lst.items:
                    raise _fail(lst, "predicate name")
                pname = _atom(lst.items[0], "predicate name")
                params = _typed_list(lst.items[1:], _VARIABLE_RE, "variable")
                if len({v for v, _ in params}) != len(params):
                    raise ValidationError(f"line {lst.line}: repeated variable in predicate {pname}")
                predicates.append(Predicate(pname, tuple(params)))
        elif head == ":action":
            act = _parse_action(sec)
            if act.name in seen_actions:
                raise ValidationError(f"line {sec.line}: duplicate action {act.name}")
            seen_actions.add(act.name)
            actions.append(act)
        elif head == ":context":
            if context:
                raise ValidationError(f"line {sec.line}: more than one :context block")
            context = _parse_context(sec)
        else:
            raise _fail(sec.items[0], "domain section")
    domain = Domain(name, tuple(requirements), tuple(types), tuple(predicates), tuple(actions), context)
    domain.validate()
    return domain


def parse_problem(text: str) -> Problem:
    """Parse and validate a PDDLS (or plain PDDL) problem."""
    tree = read_sexpr(text)
    name = _parse_header(tree, "problem")
    domain_name = None
    objects: list[tuple[str, str]] = []
    init: list[Literal] = []
    goal: list[Literal] = []
    context: dict[str, str] = {}
    for head, sec in _sections(tree):
        if head == ":domain":
            if len(sec.items) != 2:
                raise _fail(sec, "(:domain <name>)")
            domain_name = _atom(sec.items[1], "domain name")
        elif head == ":objects":
            objects.extend(_typed_list(sec.items[1:], what="object name"))
        elif head == ":init":
            init.extend(_parse_literal(node, allow_vars=False) for node in sec.items[1:])
        elif head == ":goal":
            if len(sec.items) != 2:
                raise _fail(sec, "(:goal <conjunction>)")
            goal = _parse_conjunction(sec.items[1], allow_vars=False)
        elif head == ":context":
            if context:
                raise ValidationError(f"line {sec.line}: more than one :context block")
            context = _parse_context(sec)
        else:
            raise _fail(sec.items[0], "problem section")
    if domain_name is None:
        raise _fail(tree, "(:domain <name>) section")
    negative = [lit for lit in init if not lit.positive]
    if negative:
        raise ValidationError(f"negative literal in :init: {negative[0].to_pddl()}")
    names = [o for o, _ in objects]
    if len(set(names)) != len(names):
        raise ValidationError("duplicate object declaration")
    problem = Problem(name, domain_name, tuple(objects), frozenset(l.atom for l in init), tuple(goal), context)
    problem.validate()
    return problem


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _validate_domain(d: Domain) -> None:
    unsupported = sorted(set(d.requirements) - SUPPORTED_REQUIREMENTS)
    if unsupported:
        raise ValidationError(f"unsupported requirement(s): {' '.join(unsupported)}")
    parents: dict[str, str] = {}
    for t in d.types:
        if t.name == ROOT_TYPE:
            raise ValidationError("type 'object' cannot be redeclared")
        if t.name in parents and parents[t.name] != t.parent:
            raise ValidationError(f"type {t.name} declared with two parents")
        parents[t.name] = t.parent
    known_types = set(parents) | {ROOT_TYPE}
    for t in d.types:
        if t.parent not in known_types:
            raise ValidationError(f"type {t.name} has undeclared parent {t.parent}")
    for start in parents:
        seen = [start]
        cur = parents[start]
        while cur != ROOT_TYPE:
            if cur in seen:
                raise ValidationError("type cycle: " + " -> ".join(seen + [cur]))
            seen.append(cur)
            cur = parents[cur]

    preds: dict[str, Predicate] = {}
    for p in d.predicates:
        if p.name in preds:
            raise ValidationError(f"predicate {p.name} declared twice")
        preds[p.name] = p
        for _, typ in p.params:
            if typ not in known_types:
                raise ValidationError(f"predicate {p.name} uses undeclared type {typ}")

    names = [a.name for a in d.actions]
    if len(set(names)) != len(names):
        raise ValidationError("duplicate action name")
    for act in d.actions:
        variables = [v for v, _ in act.params]
        if len(set(variables)) != len(variables):
            raise ValidationError(f"action {act.name} repeats a parameter")
        for _, typ in act.params:
            if typ not in known_types:
                raise ValidationError(f"action {act.name} uses undeclared type {typ}")
        for atom in act.atoms():
            decl = preds.get(atom.predicate)
            if decl is None:
                raise ValidationError(f"action {act.name} uses undeclared predicate {atom.predicate}")
            if decl.arity != len(atom.args):
                raise ValidationError(
                    f"action {act.name}: {atom.predicate} takes {decl.arity} arguments, got {len(atom.args)}"
                )
            for arg in atom.args:
                if arg.startswith("?") and arg not in variables:
                    raise ValidationError(f"action {act.name}: free variable {arg}")
        both = set(act.add) & set(act.delete)
        if both:
            raise ValidationError(f"action {act.name} adds and deletes {min(both).to_pddl()}")


def _validate_problem(p: Problem) -> None:
    declared = set(p.object_types())
    for atom in p.init:
        if not atom.is_ground:
            raise ValidationError(f"non-ground init fact {atom.to_pddl()}")
        for arg in atom.args:
            if arg not in declared:
                raise ValidationError(f"init fact {atom.to_pddl()} uses undeclared object {arg}")
    for lit in p.goal:
        for arg in lit.atom.args:
            if arg not in declared:
                raise ValidationError(f"goal {lit.to_pddl()} uses undeclared object {arg}")


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------


def _typed(params: Iterable[tuple[str, str]]) -> str:
    return " ".join(f"{n} - {t}" for n, t in params)


def _conj(literals: Iterable[Literal]) -> str:
    return "(and" + "".join(" " + lit.to_pddl() for lit in literals) + ")"


def _block(head: str, lines: list[str]) -> list[str]:
    return [f"  ({head}", *(f"    {ln}" for ln in lines), "  )"]


def _context_lines(context: Mapping[str, str]) -> list[str]:
    return _block(":context", [f'({sym} "{uri}")' for sym, uri in sorted(context.items())])


def print_action(act: ActionSchema) -> str:
    effects = [Literal(a) for a in act.add] + [Literal(a, False) for a in act.delete]
    return (
        f"(:action {act.name} :parameters ({_typed(act.params)})"
        f" :precondition {_conj(act.precondition)} :effect {_conj(effects)})"
    )


def print_domain(d: Domain, emit_context: bool = True) -> str:
    out = [f"(define (domain {d.name})"]
    if d.requirements:
        out.append(f"  (:requirements {' '.join(d.requirements)})")
    if d.types:
        out += _block(":types", [f"{t.name} - {t.parent}" for t in d.types])
    if d.predicates:
        out += _block(
            ":predicates",
            ["(" + " ".join([p.name] + [f"{v} - {t}" for v, t in p.params]) + ")" for p in d.predicates],
        )
    out += [f"  {print_action(a)}" for a in d.actions]
    if emit_context and d.context:
        out += _context_lines(d.context)
    out.append(")")
    return "\n".join(out) + "\n"


def print_problem(p: Problem, emit_context: bool = True) -> str:
    out = [f"(define (problem {p.name})", f"  (:domain {p.domain_name})"]
    if p.objects:
        out += _block(":objects", [f"{o} - {t}" for o, t in p.objects])
    if p.init:
        out += _block(":init", [a.to_pddl() for a in sorted(p.init)])
    out += _block(":goal (and", [lit.to_pddl() for lit in p.goal])
    out[-1] = "  ))"
    if emit_context and p.context:
        out += _context_lines(p.context)
    out.append(")")
    return "\n".join(out) + "\n"


def parse_literal(text: str, allow_vars: bool = True) -> Literal:
    """Parse a single literal such as ``(filled ?h)`` or ``(not (in a b))``."""
    return _parse_literal(read_sexpr(text), allow_vars)
