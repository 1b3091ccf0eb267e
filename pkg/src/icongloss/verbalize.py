"""Translation of concepts into semantic fragments, and phrase realization.

Lexicon file format::

    language en
    tr c:Viral_infection => s:infection*head s:viral (s:infection attr s:viral)
    tr c:Liver => s:liver
    lex s:infection en lemma="infection" pre=attr post=i:"of the"
    lex s:risk en lemma="risk" post=i:"of"

A ``tr`` line gives the fragment for a concept: its semantemes (the head is
starred unless the fragment has a single node) and its edges in parentheses.
A ``lex`` line gives the realization template of a semanteme in a language:
children on ``pre`` relations come before the lemma, children on ``post``
relations come after it, each prefixed by its connector.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Set, Tuple

from .errors import DataFileError, LexiconError, LinearizationError, UnknownConceptError
from .graph import Label, LabeledGraph, NodeId, build_graph
from .ontology import SEM_RELATIONS, Hierarchy

_LANGUAGE_LINE = re.compile(r"^language\s+([a-z]{2,3}(?:[-_][A-Za-z0-9]+)?)$")
_TR_LINE = re.compile(r"^tr\s+(\S+)\s*=>\s*(.+)$")
_LEX_LINE = re.compile(r"^lex\s+(\S+)\s+(\S+)\s+(.*)$")
_FRAG_EDGE = re.compile(r"\(\s*(\S+)\s+(\S+)\s+(\S+)\s*\)")
_KEYVAL = re.compile(r'(\w+)=((?:"(?:[^"\\]|\\.)*"|[^\s"])+)')
_POST_ITEM = re.compile(r'^(\w+):"((?:[^"\\]|\\.)*)"$')

_fresh = itertools.count()


@dataclass(frozen=True)
class Fragment:
    graph: LabeledGraph
    head: NodeId

    def __post_init__(self):
        if len(self.graph) == 0:
            raise ValueError("fragment must be non-empty")
        if self.head not in self.graph:
            raise ValueError("fragment head %r is not one of its nodes" % self.head)


@dataclass(frozen=True)
class Template:
    lemma: str
    pre_slots: Tuple[str, ...] = ()
    post_slots: Tuple[Tuple[str, str], ...] = ()

    def relations(self) -> Set[str]:
        return set(self.pre_slots) | {rel for rel, _ in self.post_slots}


@dataclass(frozen=True, eq=False)
class Lexicon:
    hierarchy: Hierarchy
    languages: Tuple[str, ...]
    tr_table: Mapping[Label, Fragment]
    realization: Mapping[Tuple[Label, str], Template]
    _fallback: Dict[Label, Label] = field(default_factory=dict, repr=False)

    def template(self, sem: Label, lang: str) -> Template:
        try:
            return self.realization[(sem, lang)]
        except KeyError:
            raise LexiconError("no template for %s in language %r" % (sem, lang)) from None

    def entry_for(self, c: Label) -> Label:
        """The concept whose tr entry is used for ``c`` (itself or an ancestor)."""
        if c in self.tr_table:
            return c
        if c in self._fallback:
            return self._fallback[c]
        try:
            ancestors = self.hierarchy.ancestors(c)
        except UnknownConceptError:
            raise LexiconError("no translation for unknown concept %s" % c) from None
        found = [b for b in ancestors if b in self.tr_table]
        nearest = [b for b in found
                   if not any(o != b and self.hierarchy.is_subtype(o, b) for o in found)]
        if not nearest:
            raise LexiconError("no translation for %s nor any of its ancestors" % c)
        if len(nearest) > 1:
            raise LexiconError("ambiguous translation for %s: %s"
                               % (c, ", ".join(map(str, sorted(nearest)))))
        self._fallback[c] = nearest[0]
        return nearest[0]

    def semantemes(self) -> Set[Label]:
        out: Set[Label] = set()
        for frag in self.tr_table.values():
            out.update(frag.graph.nodes.values())
        return out


def translate_concept(lex: Lexicon, c: Label) -> Fragment:
    """Fresh copy of the fragment translating ``c``.

    Node ids are unique across calls. Falls back to the nearest ancestor that
    has an entry when ``c`` has none.
    """
    if not c.is_concept:
        raise LexiconError("%s is not a concept" % c)
    stored = lex.tr_table[lex.entry_for(c)]
    tag = "t%d" % next(_fresh)
    rename = {n: "%s.%s" % (tag, n) for n in stored.graph.node_ids()}
    return Fragment(stored.graph.rename(rename), rename[stored.head])


def _unquote(text: str) -> str:
    if len(text) >= 2 and text[0] == text[-1] == '"':
        return re.sub(r"\\(.)", r"\1", text[1:-1])
    return text


def _parse_fragment(text: str) -> Fragment:
    edges = [m.groups() for m in _FRAG_EDGE.finditer(text)]
    words = _FRAG_EDGE.sub(" ", text).split()
    if not words:
        raise ValueError("fragment has no nodes")
    specs = []
    heads = []
    for w in words:
        star = w.endswith("*head")
        name = w[:-5] if star else w
        label = Label.parse(name)
        if not label.is_sem:
            raise ValueError("fragment node %s is not a semanteme" % label)
        if star:
            heads.append(name)
        specs.append((name, label))
    if len(specs) == 1 and not heads:
        heads = [specs[0][0]]
    if len(heads) != 1:
        raise ValueError("fragment needs exactly one head marked '*head', found %d" % len(heads))
    ids = {n for n, _ in specs}
    for a, rel, b in edges:
        if rel not in SEM_RELATIONS:
            raise ValueError("fragment edge relation %r not in %s" % (rel, sorted(SEM_RELATIONS)))
        for end in (a, b):
            if end not in ids:
                raise ValueError("fragment edge refers to unknown node %s" % end)
    return Fragment(build_graph(specs, [(a, b, rel) for a, rel, b in edges]), heads[0])


def _parse_template(rest: str) -> Template:
    values = {k: v for k, v in _KEYVAL.findall(rest)}
    leftover = _KEYVAL.sub("", rest).strip()
    if leftover:
        raise ValueError("unexpected text %r" % leftover)
    unknown = set(values) - {"lemma", "pre", "post"}
    if unknown:
        raise ValueError("unknown template key(s) %s" % ", ".join(sorted(unknown)))
    if "lemma" not in values:
        raise ValueError("template needs lemma=")
    lemma = _unquote(values["lemma"])
    if not lemma.strip():
        raise ValueError("empty lemma")
    pre = tuple(p for p in values.get("pre", "").split(",") if p)
    post = []
    if "post" in values:
        for item in _split_post(values["post"]):
            m = _POST_ITEM.match(item)
            if not m:
                raise ValueError('post slot %r is not rel:"connector"' % item)
            post.append((m.group(1), re.sub(r"\\(.)", r"\1", m.group(2))))
    for rel in list(pre) + [r for r, _ in post]:
        if rel not in SEM_RELATIONS:
            raise ValueError("slot relation %r not in %s" % (rel, sorted(SEM_RELATIONS)))
    rels = list(pre) + [r for r, _ in post]
    if len(rels) != len(set(rels)):
        raise ValueError("a relation appears in more than one slot")
    return Template(lemma, pre, tuple(post))


def _split_post(text: str) -> List[str]:
    items, buf, quoted = [], "", False
    for ch in text:
        if ch == '"':
            quoted = not quoted
        if ch == "," and not quoted:
            items.append(buf)
            buf = ""
        else:
            buf += ch
    items.append(buf)
    return [i.strip() for i in items if i.strip()]


def load_lexicon(document: str, h: Hierarchy, source: str = "<lexicon>") -> Lexicon:
    problems = []
    languages: List[str] = []
    tr_table: Dict[Label, Fragment] = {}
    realization: Dict[Tuple[Label, str], Template] = {}
    lex_lines: List[Tuple[int, Label, str, str]] = []

    # the post=... value may contain '#' inside quotes, so only strip comments
    # that start a line
    for lineno, raw in enumerate(document.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _LANGUAGE_LINE.match(line)
        if m:
            if m.group(1) in languages:
                problems.append((lineno, "language %s declared twice" % m.group(1)))
            else:
                languages.append(m.group(1))
            continue
        m = _TR_LINE.match(line)
        if m:
            try:
                c = Label.parse(m.group(1))
                if not c.is_concept:
                    raise ValueError("%s is not a concept" % c)
                if c not in h:
                    raise ValueError("unknown concept %s" % c)
                if c in tr_table:
                    raise ValueError("duplicate tr entry for %s" % c)
                tr_table[c] = _parse_fragment(m.group(2))
            except ValueError as exc:
                problems.append((lineno, str(exc)))
            continue
        m = _LEX_LINE.match(line)
        if m:
            try:
                sem = Label.parse(m.group(1))
                if not sem.is_sem:
                    raise ValueError("%s is not a semanteme" % sem)
            except ValueError as exc:
                problems.append((lineno, str(exc)))
                continue
            lex_lines.append((lineno, sem, m.group(2), m.group(3)))
            continue
        problems.append((lineno, "syntax error: %r" % line))

    for lineno, sem, lang, rest in lex_lines:
        if lang not in languages:
            problems.append((lineno, "undeclared language %r" % lang))
            continue
        if (sem, lang) in realization:
            problems.append((lineno, "duplicate template for %s in %s" % (sem, lang)))
            continue
        try:
            realization[(sem, lang)] = _parse_template(rest)
        except ValueError as exc:
            problems.append((lineno, str(exc)))

    if not problems:
        lex = Lexicon(h, tuple(languages), tr_table, realization)
        for sem, lang in missing_templates(lex, lex.semantemes()):
            problems.append((None, "missing template for %s in language %s" % (sem, lang)))
    if problems:
        raise DataFileError(source, problems)
    return lex


def missing_templates(lex: Lexicon, semantemes: Iterable[Label]) -> List[Tuple[Label, str]]:
    return [(sem, lang) for sem in sorted(set(semantemes)) for lang in lex.languages
            if (sem, lang) not in lex.realization]


# -- linearization -----------------------------------------------------------

def find_root(g: LabeledGraph) -> NodeId:
    has_in = {b for _, b, _ in g.edges}
    roots = [n for n in g.node_ids() if n not in has_in]
    if len(roots) != 1:
        raise LinearizationError("graph must have exactly one root, found %d" % len(roots))
    return roots[0]


def _subgraph_below(g: LabeledGraph, node: NodeId) -> LabeledGraph:
    seen = {node}
    stack = [node]
    while stack:
        x = stack.pop()
        for _, y, _ in g.out_edges(x):
            if y not in seen:
                seen.add(y)
                stack.append(y)
    nodes = {n: g.label(n) for n in seen}
    return LabeledGraph(nodes, [e for e in g.edges if e[0] in seen and e[1] in seen])


def linearize(g: LabeledGraph, lex: Lexicon, lang: str) -> str:
    """Render a terminal semantic graph as a phrase.

    Each node is realized as its pre-slot children, its lemma, then each
    post-slot child prefixed by the slot connector. Children sharing a
    relation are ordered by the canonical form of the subgraph below them.
    """
    if lang not in lex.languages:
        raise LexiconError("undeclared language %r" % lang)
    if not g.is_terminal():
        raise LinearizationError("graph is not terminal")
    root = find_root(g)
    reached: Set[NodeId] = set()

    def realize(node: NodeId, path: Tuple[NodeId, ...]) -> List[str]:
        if node in path:
            raise LinearizationError("cycle through %s" % node)
        reached.add(node)
        label = g.label(node)
        tpl = lex.template(label, lang)
        children: Dict[str, List[NodeId]] = {}
        for _, child, rel in g.out_edges(node):
            children.setdefault(rel, []).append(child)
        stray = set(children) - tpl.relations()
        if stray:
            raise LinearizationError("template of %s (%s) has no slot for %s"
                                     % (label, lang, ", ".join(sorted(stray))))
        for rel in children:
            children[rel].sort(key=lambda c: (_subgraph_below(g, c).canonical_form(), c))
        words: List[str] = []
        for rel in tpl.pre_slots:
            for child in children.get(rel, ()):
                words += realize(child, path + (node,))
        words.append(tpl.lemma)
        for rel, connector in tpl.post_slots:
            for child in children.get(rel, ()):
                if connector:
                    words.append(connector)
                words += realize(child, path + (node,))
        return words

    words = realize(root, ())
    if len(reached) != len(g):
        raise LinearizationError("graph is not connected to its root")
    return " ".join(" ".join(words).split())
