"""From 7-field icon codes to candidate concept graphs.

Field conventions of the shipped data: 1 = shape colour (temporality),
2 = side modifier (pathology agent), 3 = central pictogram (anatomy or
function), 4 = top-right superscript modifier (care status). Fields 5-7 are
reserved and must be ``null``.

A dictionary line maps a (field, token) pair to a bundle of assertions on
the central medical-state node::

    map 3 liver => hasAnatomy c:Liver
    map 3 liver => hasFunction c:Hepatic_function

Several lines for the same pair are alternative readings; :func:`expand`
builds one candidate per combination and :func:`filter_valid` drops the
candidates that contain a veto pattern.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from ._xmlgraph import parse_document, read_concept_pattern
from .errors import CodeSyntaxError, DataFileError, UnknownTokenError
from .graph import Label, LabeledGraph, build_graph, find_matchings
from .ontology import Hierarchy

FIELD_COUNT = 7
RESERVED_FIELDS = (5, 6, 7)
NULL = "null"
STATE = Label("c", "Medical_state")

_TOKEN = re.compile(r"^[a-z0-9_]+$")
_MAP_LINE = re.compile(r"^map\s+(\d+)\s+(\S+)\s*=>\s*(.+)$")

Bundle = Tuple[Tuple[str, Label], ...]


@dataclass(frozen=True)
class IconCode:
    fields: Tuple[str, ...]

    def __post_init__(self):
        if len(self.fields) != FIELD_COUNT:
            raise CodeSyntaxError("icon code needs %d fields, got %d"
                                  % (FIELD_COUNT, len(self.fields)))

    def __str__(self) -> str:
        return "-".join(self.fields)

    def non_null(self) -> List[Tuple[int, str]]:
        return [(i, tok) for i, tok in enumerate(self.fields, 1) if tok != NULL]


def parse_code(text: str) -> IconCode:
    """Split a code such as ``risk-virus-liver-monitoring-null-null-null``.

    Runs of hyphens count as a single separator.
    """
    parts = re.split(r"-+", text.strip())
    if len(parts) != FIELD_COUNT:
        raise CodeSyntaxError("field count %d != %d in %r" % (len(parts), FIELD_COUNT, text))
    for i, tok in enumerate(parts, 1):
        if not _TOKEN.match(tok):
            raise CodeSyntaxError("field %d: illegal token %r" % (i, tok))
    return IconCode(tuple(parts))


@dataclass(frozen=True)
class Dictionary:
    entries: Dict[Tuple[int, str], Tuple[Bundle, ...]]

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, field: int, token: str) -> Tuple[Bundle, ...]:
        try:
            return self.entries[(field, token)]
        except KeyError:
            raise UnknownTokenError(field, token) from None

    def concepts(self) -> List[Label]:
        return sorted({c for bundles in self.entries.values() for b in bundles for _, c in b})


def load_dictionary(document: str, h: Hierarchy, source: str = "<dictionary>") -> Dictionary:
    problems = []
    entries: Dict[Tuple[int, str], List[Bundle]] = {}
    for lineno, raw in enumerate(document.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _MAP_LINE.match(line)
        if not m:
            problems.append((lineno, "syntax error: %r" % line))
            continue
        field, token = int(m.group(1)), m.group(2)
        if not 1 <= field <= FIELD_COUNT:
            problems.append((lineno, "field %d out of range 1-%d" % (field, FIELD_COUNT)))
            continue
        if field in RESERVED_FIELDS:
            problems.append((lineno, "field %d is reserved" % field))
            continue
        if token == NULL or not _TOKEN.match(token):
            problems.append((lineno, "illegal token %r" % token))
            continue
        bundle = []
        for part in m.group(3).split("&"):
            words = part.split()
            if len(words) != 2:
                problems.append((lineno, "assertion %r is not '<relation> <c:Label>'" % part.strip()))
                continue
            rel, text = words
            try:
                concept = Label.parse(text)
            except ValueError as exc:
                problems.append((lineno, str(exc)))
                continue
            msg = _check_assertion(h, rel, concept)
            if msg:
                problems.append((lineno, msg))
                continue
            bundle.append((rel, concept))
        if bundle:
            entries.setdefault((field, token), []).append(tuple(bundle))
    if problems:
        raise DataFileError(source, problems)
    return Dictionary({k: tuple(v) for k, v in entries.items()})


def _check_assertion(h: Hierarchy, rel: str, concept: Label) -> Optional[str]:
    if not concept.is_concept:
        return "%s is not a concept" % concept
    if concept not in h:
        return "unknown concept %s" % concept
    if not h.has_relation(rel):
        return "unknown relation %r" % rel
    sig = h.relations[rel]
    if sig.range is not None and not h.is_subtype(concept, sig.range):
        return "%s is outside the range %s of %s" % (concept, sig.range, rel)
    if sig.domain is not None and STATE in h and not h.is_subtype(STATE, sig.domain):
        return "relation %s does not apply to %s" % (rel, STATE)
    return None


def expand(code: IconCode, dictionary: Dictionary) -> List[LabeledGraph]:
    """Star-shaped concept graphs for every combination of readings."""
    per_field = [dictionary.lookup(i, tok) for i, tok in code.non_null()]
    graphs = []
    for choice in itertools.product(*per_field):
        specs = [("n0", STATE)]
        edges = []
        for bundle in choice:
            for rel, concept in bundle:
                nid = "n%d" % len(specs)
                specs.append((nid, concept))
                edges.append(("n0", nid, rel))
        graphs.append(build_graph(specs, edges))
    return graphs


@dataclass(frozen=True)
class VetoPattern:
    pattern: LabeledGraph
    description: str
    id: str = ""

    def __post_init__(self):
        if len(self.pattern) == 0:
            raise ValueError("veto pattern must be non-empty")
        for n in self.pattern.node_ids():
            lab = self.pattern.label(n)
            if lab is None or not lab.is_concept:
                raise ValueError("veto pattern labels must be concepts")


def subsumes(h: Hierarchy):
    """Label predicate: the host label is a concept below the pattern label."""
    def label_ok(p: Optional[Label], host: Optional[Label]) -> bool:
        return (p is not None and host is not None and host.is_concept
                and p.is_concept and host in h and h.is_subtype(host, p))
    return label_ok


def is_vetoed(candidate: LabeledGraph, veto: VetoPattern, h: Hierarchy) -> bool:
    return bool(find_matchings(veto.pattern, candidate, subsumes(h)))


def filter_valid(candidates: Sequence[LabeledGraph], vetoes: Sequence[VetoPattern],
                 h: Hierarchy) -> List[LabeledGraph]:
    """Keep, in order, the candidates that contain no veto pattern."""
    return [g for g in candidates if not any(is_vetoed(g, v, h) for v in vetoes)]


def load_vetoes(document: str, h: Hierarchy, source: str = "<vetoes>") -> List[VetoPattern]:
    """Read ``<vetoes><veto id=..><reason>..</reason><node/>..<edge/>..</veto></vetoes>``."""
    root = parse_document(document, source, "vetoes")
    problems: List[str] = []
    vetoes = []
    for k, elem in enumerate(root, 1):
        if elem.tag != "veto":
            problems.append("unexpected element <%s>" % elem.tag)
            continue
        vid = elem.get("id") or "#%d" % k
        where = "veto %s" % vid
        reason_el = elem.find("reason")
        reason = (reason_el.text or "").strip() if reason_el is not None else ""
        if not reason:
            problems.append("%s: missing <reason>" % where)
        pattern, _ = read_concept_pattern(elem, h, where, problems, extra_tags=("reason",))
        if pattern is not None and reason:
            vetoes.append(VetoPattern(pattern, reason, vid))
    if problems:
        raise DataFileError(source, [(None, p) for p in problems])
    return vetoes

