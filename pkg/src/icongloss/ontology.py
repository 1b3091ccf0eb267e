"""Concept hierarchy: declared concepts, an is-a DAG and relation signatures.

File format, one statement per line (``#`` starts a comment)::

    concept c:Thing
    concept c:Infection isa c:Trouble
    concept c:Liver isa c:Digestive_organ, c:Abdominal_organ
    relation hasAnatomy domain c:Medical_state range c:Anatomy

Statements may appear in any order; the loader reads declarations first and
resolves references in a second pass.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Mapping, Optional, Set, Tuple

from .errors import DataFileError, UnknownConceptError
from .graph import Label

SEM_RELATIONS = frozenset({"i", "ii", "iii", "attr"})

_CONCEPT_LINE = re.compile(r"^concept\s+(\S+)(?:\s+isa\s+(.+))?$")
_RELATION_LINE = re.compile(r"^relation\s+(\S+)(?:\s+domain\s+(\S+)\s+range\s+(\S+))?$")
_RELATION_TOKEN = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")


@dataclass(frozen=True)
class RelationSignature:
    domain: Optional[Label] = None
    range: Optional[Label] = None


@dataclass(frozen=True, eq=False)
class Hierarchy:
    concepts: FrozenSet[Label] = frozenset()
    isa: FrozenSet[Tuple[Label, Label]] = frozenset()
    relations: Mapping[str, RelationSignature] = field(default_factory=dict)
    _parents: Dict[Label, Tuple[Label, ...]] = field(default_factory=dict, repr=False, compare=False)
    _ancestors: Dict[Label, FrozenSet[Label]] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        parents: Dict[Label, List[Label]] = {c: [] for c in self.concepts}
        for child, parent in self.isa:
            parents.setdefault(child, []).append(parent)
        self._parents.update({c: tuple(sorted(ps)) for c, ps in parents.items()})

    def __contains__(self, label: object) -> bool:
        return label in self.concepts

    def parents(self, c: Label) -> Tuple[Label, ...]:
        self._check(c)
        return self._parents[c]

    def ancestors(self, c: Label) -> FrozenSet[Label]:
        """Reflexive-transitive is-a closure of ``c`` (memoized)."""
        self._check(c)
        cached = self._ancestors.get(c)
        if cached is None:
            seen: Set[Label] = {c}
            queue = deque([c])
            while queue:
                for p in self._parents[queue.popleft()]:
                    if p not in seen:
                        seen.add(p)
                        queue.append(p)
            cached = frozenset(seen)
            self._ancestors[c] = cached
        return cached

    def is_subtype(self, a: Label, b: Label) -> bool:
        self._check(b)
        return b in self.ancestors(a)

    def roots(self) -> List[Label]:
        return sorted(c for c in self.concepts if not self._parents[c])

    def has_relation(self, token: str) -> bool:
        return token in self.relations

    def _check(self, c: Label) -> None:
        if c not in self.concepts:
            raise UnknownConceptError(str(c))


def is_subtype(h: Hierarchy, a: Label, b: Label) -> bool:
    return h.is_subtype(a, b)


def _concept_label(text: str) -> Label:
    label = Label.parse(text)
    if not label.is_concept:
        raise ValueError("%s is not in the concept namespace" % text)
    return label


def find_cycle(isa: Mapping[Label, Tuple[Label, ...]]) -> Optional[List[Label]]:
    """Return one is-a cycle (first element repeated at the end) or None."""
    WHITE, GREY, BLACK = 0, 1, 2
    state = {c: WHITE for c in isa}
    path: List[Label] = []

    def visit(c: Label) -> Optional[List[Label]]:
        state[c] = GREY
        path.append(c)
        for p in isa.get(c, ()):
            if state.get(p, WHITE) == GREY:
                return path[path.index(p):] + [p]
            if state.get(p, WHITE) == WHITE:
                found = visit(p)
                if found:
                    return found
        path.pop()
        state[c] = BLACK
        return None

    for c in sorted(isa):
        if state[c] == WHITE:
            found = visit(c)
            if found:
                return found
    return None


def load_ontology(document: str, source: str = "<ontology>") -> Hierarchy:
    problems: List[Tuple[Optional[int], str]] = []
    declared: Dict[Label, int] = {}
    pending_isa: List[Tuple[int, Label, str]] = []
    pending_rel: List[Tuple[int, str, Optional[str], Optional[str]]] = []

    for lineno, raw in enumerate(document.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _CONCEPT_LINE.match(line)
        if m:
            try:
                c = _concept_label(m.group(1))
            except ValueError as exc:
                problems.append((lineno, str(exc)))
                continue
            if c in declared:
                problems.append((lineno, "concept %s already declared on line %d" % (c, declared[c])))
                continue
            declared[c] = lineno
            if m.group(2):
                for part in m.group(2).split(","):
                    pending_isa.append((lineno, c, part.strip()))
            continue
        m = _RELATION_LINE.match(line)
        if m:
            pending_rel.append((lineno, m.group(1), m.group(2), m.group(3)))
            continue
        problems.append((lineno, "syntax error: %r" % line))

    isa: Set[Tuple[Label, Label]] = set()
    for lineno, child, text in pending_isa:
        try:
            parent = _concept_label(text)
        except ValueError as exc:
            problems.append((lineno, str(exc)))
            continue
        if parent not in declared:
            problems.append((lineno, "undeclared concept %s" % parent))
            continue
        isa.add((child, parent))

    relations: Dict[str, RelationSignature] = {}
    for lineno, token, dom, rng in pending_rel:
        if not _RELATION_TOKEN.match(token):
            problems.append((lineno, "bad relation token %r" % token))
            continue
        if token in SEM_RELATIONS:
            problems.append((lineno, "relation %r is reserved for semantic graphs" % token))
            continue
        if token in relations:
            problems.append((lineno, "relation %r already declared" % token))
            continue
        sig = RelationSignature()
        if dom is not None:
            try:
                d, r = _concept_label(dom), _concept_label(rng)
            except ValueError as exc:
                problems.append((lineno, str(exc)))
                continue
            missing = [str(x) for x in (d, r) if x not in declared]
            if missing:
                problems.append((lineno, "undeclared concept %s" % ", ".join(missing)))
                continue
            sig = RelationSignature(d, r)
        relations[token] = sig

    if problems:
        raise DataFileError(source, problems)

    graph: Dict[Label, Tuple[Label, ...]] = {c: () for c in declared}
    for child, parent in sorted(isa):
        graph[child] = graph[child] + (parent,)
    cycle = find_cycle(graph)
    if cycle:
        raise DataFileError(source, [(declared[cycle[0]],
                                      "is-a cycle: " + " -> ".join(map(str, cycle)))])
    h = Hierarchy(frozenset(declared), frozenset(isa), relations)
    roots = h.roots()
    if len(roots) > 1:
        raise DataFileError(source, [(None, "more than one top concept: %s"
                                      % ", ".join(map(str, roots)))])
    return h
