"""Reading ``<node>``/``<edge>`` blocks shared by the rule and veto files."""

from __future__ import annotations

import xml.etree.ElementTree as ET
from typing import Dict, List, Optional, Tuple

from .errors import DataFileError
from .graph import Label, LabeledGraph, build_graph, iter_components
from .ontology import Hierarchy

Problem = Tuple[Optional[int], str]


def parse_document(document: str, source: str, root_tag: str) -> ET.Element:
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        line = exc.position[0] if getattr(exc, "position", None) else None
        raise DataFileError(source, [(line, "XML syntax error: %s" % exc)]) from None
    if root.tag != root_tag:
        raise DataFileError(source, [(None, "root element must be <%s>, found <%s>"
                                      % (root_tag, root.tag))])
    return root


def parse_int(value: Optional[str], what: str, problems: List[str]) -> Optional[int]:
    if value is None:
        return None
    try:
        return int(value)
    except ValueError:
        problems.append("%s %r is not an integer" % (what, value))
        return None


def read_concept_pattern(elem: ET.Element, h: Hierarchy, where: str, problems: List[str],
                         extra_tags: Tuple[str, ...] = ()
                         ) -> Tuple[Optional[LabeledGraph], Dict[str, int]]:
    """Parse a filter-like block into a concept-labeled graph plus coindices.

    Every problem found is appended to ``problems`` (prefixed with ``where``);
    the graph is ``None`` when the block could not be built.
    """
    specs: List[Tuple[str, Label]] = []
    coindex: Dict[str, int] = {}
    seen_ids = set()
    for node in elem.findall("node"):
        nid, text = node.get("id"), node.get("label")
        if not nid or not text:
            problems.append("%s: <node> needs id and label" % where)
            continue
        if nid in seen_ids:
            problems.append("%s: duplicate node id %r" % (where, nid))
            continue
        seen_ids.add(nid)
        try:
            label = Label.parse(text)
        except ValueError as exc:
            problems.append("%s: %s" % (where, exc))
            continue
        if not label.is_concept:
            problems.append("%s: node %s label %s is not a concept" % (where, nid, label))
            continue
        if label not in h:
            problems.append("%s: unknown concept %s" % (where, label))
            continue
        ci = parse_int(node.get("coindex"), "%s: coindex" % where, problems)
        if ci is not None:
            if ci in coindex.values():
                problems.append("%s: coindex %d used twice" % (where, ci))
            coindex[nid] = ci
        specs.append((nid, label))

    edges = []
    for edge in elem.findall("edge"):
        a, b, rel = edge.get("from"), edge.get("to"), edge.get("label")
        if not (a and b and rel):
            problems.append("%s: <edge> needs from, to and label" % where)
            continue
        if not h.has_relation(rel):
            problems.append("%s: unknown relation %r" % (where, rel))
            continue
        missing = [x for x in (a, b) if x not in seen_ids]
        if missing:
            problems.append("%s: edge (%s %s %s) refers to undeclared node %s"
                            % (where, a, rel, b, ", ".join(missing)))
            continue
        edges.append((a, b, rel))

    unknown = [c for c in elem if c.tag not in ("node", "edge") + extra_tags]
    for c in unknown:
        problems.append("%s: unexpected element <%s>" % (where, c.tag))

    if not specs:
        problems.append("%s: pattern is empty" % where)
        return None, coindex
    ids = {nid for nid, _ in specs}
    g = build_graph(specs, [e for e in edges if e[0] in ids and e[1] in ids])
    if len(list(iter_components(g))) > 1:
        problems.append("%s: pattern is not connected" % where)
    return g, coindex
