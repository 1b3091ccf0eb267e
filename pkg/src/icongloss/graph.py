"""Directed labeled multigraphs, canonical forms and subgraph matching.

Graphs are immutable values. Node ids are strings, labels live in one of two
namespaces (``c`` for ontology concepts, ``s`` for semantemes); a node whose
label is ``None`` is a blank placeholder used while glueing graphs together.
Parallel edges are allowed only when their relation tokens differ.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass
from typing import (
    Callable,
    Dict,
    FrozenSet,
    Iterable,
    Iterator,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
)

from .errors import GraphError

NodeId = str
Edge = Tuple[NodeId, NodeId, str]
Matching = Dict[NodeId, NodeId]

CONCEPT = "c"
SEM = "s"
_NAMESPACES = (CONCEPT, SEM)
_TOKEN = re.compile(r"^[^\s:()\[\]*\"',]+$")


@dataclass(frozen=True, order=True)
class Label:
    namespace: str
    localname: str

    def __post_init__(self):
        if self.namespace not in _NAMESPACES:
            raise ValueError("label namespace must be 'c' or 's', got %r" % self.namespace)
        if not self.localname or not _TOKEN.match(self.localname):
            raise ValueError("bad label local name %r" % self.localname)

    @classmethod
    def parse(cls, text: str) -> "Label":
        ns, sep, name = text.strip().partition(":")
        if not sep:
            raise ValueError("label %r lacks a namespace prefix" % text)
        return cls(ns, name)

    @property
    def is_concept(self) -> bool:
        return self.namespace == CONCEPT

    @property
    def is_sem(self) -> bool:
        return self.namespace == SEM

    def __str__(self) -> str:
        return "%s:%s" % (self.namespace, self.localname)

    def __repr__(self) -> str:
        return "Label(%r)" % str(self)


def label_text(label: Optional[Label]) -> str:
    return "_" if label is None else str(label)


class LabeledGraph:
    """Immutable directed labeled graph.

    Equality and hashing are id-level (same ids, labels and edges); use
    :meth:`canonical_form` to compare graphs up to isomorphism.
    """

    __slots__ = ("_nodes", "_edges", "_cf", "_hash")

    def __init__(self, nodes: Mapping[NodeId, Optional[Label]], edges: Iterable[Edge] = ()):
        self._nodes: Dict[NodeId, Optional[Label]] = dict(nodes)
        edge_set = frozenset(edges)
        for a, b, rel in edge_set:
            if a not in self._nodes or b not in self._nodes:
                raise GraphError("edge (%s, %s, %s) has an undeclared endpoint" % (a, b, rel))
            if not rel:
                raise GraphError("edge (%s, %s) has an empty relation token" % (a, b))
        self._edges: FrozenSet[Edge] = edge_set
        self._cf: Optional[str] = None
        self._hash: Optional[int] = None

    @property
    def nodes(self) -> Mapping[NodeId, Optional[Label]]:
        return dict(self._nodes)

    @property
    def edges(self) -> FrozenSet[Edge]:
        return self._edges

    def node_ids(self) -> List[NodeId]:
        return sorted(self._nodes)

    def label(self, node: NodeId) -> Optional[Label]:
        return self._nodes[node]

    def __contains__(self, node: object) -> bool:
        return node in self._nodes

    def __len__(self) -> int:
        return len(self._nodes)

    def sorted_edges(self) -> List[Edge]:
        return sorted(self._edges)

    def out_edges(self, node: NodeId) -> List[Edge]:
        return sorted(e for e in self._edges if e[0] == node)

    def in_edges(self, node: NodeId) -> List[Edge]:
        return sorted(e for e in self._edges if e[1] == node)

    def is_terminal(self) -> bool:
        """True when every node is a semanteme (no concepts, no blanks)."""
        return all(lab is not None and lab.is_sem for lab in self._nodes.values())

    def fresh_id(self, taken: Iterable[NodeId] = ()) -> NodeId:
        used = set(self._nodes)
        used.update(taken)
        for k in itertools.count(len(self._nodes)):
            cand = "n%d" % k
            if cand not in used:
                return cand
        raise AssertionError("unreachable")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabeledGraph):
            return NotImplemented
        return self._nodes == other._nodes and self._edges == other._edges

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((frozenset(self._nodes.items()), self._edges))
        return self._hash

    def __repr__(self) -> str:
        return "LabeledGraph(%d nodes, %d edges)" % (len(self._nodes), len(self._edges))

    # -- canonical forms -------------------------------------------------

    def canonical_form(self) -> str:
        if self._cf is None:
            self._cf = _canonical_form(self)
        return self._cf

    def canonical_order(self) -> List[NodeId]:
        return _canonical_search(self)[0]

    def canonical_relabel(self) -> "LabeledGraph":
        """Isomorphic copy with ids ``n0..nk`` assigned in canonical order."""
        order = self.canonical_order()
        rename = {old: "n%d" % i for i, old in enumerate(order)}
        return self.rename(rename)

    def rename(self, mapping: Mapping[NodeId, NodeId]) -> "LabeledGraph":
        nodes = {mapping.get(n, n): lab for n, lab in self._nodes.items()}
        if len(nodes) != len(self._nodes):
            raise GraphError("renaming merges node ids")
        edges = [(mapping.get(a, a), mapping.get(b, b), r) for a, b, r in self._edges]
        return LabeledGraph(nodes, edges)

    # -- serialization ---------------------------------------------------

    def to_json_obj(self) -> dict:
        return {
            "nodes": [{"id": n, "label": None if self._nodes[n] is None else str(self._nodes[n])}
                      for n in self.node_ids()],
            "edges": [{"from": a, "to": b, "rel": r} for a, b, r in self.sorted_edges()],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_json_obj(), **kwargs)

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "LabeledGraph":
        specs = [(n["id"], None if n.get("label") is None else Label.parse(n["label"]))
                 for n in obj.get("nodes", [])]
        edges = [(e["from"], e["to"], e["rel"]) for e in obj.get("edges", [])]
        return build_graph(specs, edges)

    @classmethod
    def from_json(cls, text: str) -> "LabeledGraph":
        return cls.from_json_obj(json.loads(text))

    def to_dot(self, name: str = "G") -> str:
        lines = ["digraph %s {" % _dot_id(name)]
        for n in self.node_ids():
            lines.append("  %s [label=%s];" % (_dot_id(n), _dot_id(label_text(self._nodes[n]))))
        for a, b, r in self.sorted_edges():
            lines.append("  %s -> %s [label=%s];" % (_dot_id(a), _dot_id(b), _dot_id(r)))
        lines.append("}")
        return "\n".join(lines)

    def to_text(self) -> str:
        lines = ["%s %s" % (n, label_text(self._nodes[n])) for n in self.node_ids()]
        lines += ["%s -%s-> %s" % (a, r, b) for a, b, r in self.sorted_edges()]
        return "\n".join(lines)


def _dot_id(text: str) -> str:
    return '"%s"' % text.replace("\\", "\\\\").replace('"', '\\"')


def build_graph(node_specs: Sequence[Tuple[NodeId, Optional[Label]]],
                edge_specs: Sequence[Edge] = ()) -> LabeledGraph:
    """Build a graph, refusing duplicate node ids and undeclared endpoints.

    Self-loops are accepted; repeated identical edges collapse into one.
    """
    nodes: Dict[NodeId, Optional[Label]] = {}
    for node_id, label in node_specs:
        if node_id in nodes:
            raise GraphError("duplicate node id %r" % (node_id,))
        nodes[node_id] = label
    for a, b, rel in edge_specs:
        for end in (a, b):
            if end not in nodes:
                raise GraphError("edge (%s, %s, %s): undeclared endpoint %r" % (a, b, rel, end))
    return LabeledGraph(nodes, edge_specs)


# -- canonical form ----------------------------------------------------------

def _refined_cells(g: LabeledGraph) -> Tuple[List[NodeId], List[List[int]], List[Tuple[int, int, str]]]:
    """Ordered partition of the nodes by iterated neighbourhood signatures.

    The initial colour of a node is (label, in-degree, out-degree); each round
    extends it with the multisets of (relation, neighbour colour) on both
    sides. Colours are ranked by sorting invariant tuples, so the resulting
    cell order depends on structure only, never on node ids.

    Returns the node list, the cells as index lists and the edges as index
    triples.
    """
    nodes = list(g._nodes)
    index = {n: i for i, n in enumerate(nodes)}
    edges = [(index[a], index[b], r) for a, b, r in g._edges]
    size = len(nodes)
    outs: List[List[Tuple[str, int]]] = [[] for _ in range(size)]
    ins: List[List[Tuple[str, int]]] = [[] for _ in range(size)]
    for a, b, r in edges:
        outs[a].append((r, b))
        ins[b].append((r, a))
    color = _rank([(label_text(g._nodes[n]), len(ins[i]), len(outs[i]))
                   for i, n in enumerate(nodes)])
    ncolors = len(set(color))
    while ncolors < size:
        sig = [(color[i],
                tuple(sorted([(r, color[m]) for r, m in outs[i]])),
                tuple(sorted([(r, color[m]) for r, m in ins[i]])))
               for i in range(size)]
        color2 = _rank(sig)
        n2 = len(set(color2))
        if n2 == ncolors:
            break
        color, ncolors = color2, n2
    cells: Dict[int, List[int]] = {}
    for i in range(size):
        cells.setdefault(color[i], []).append(i)
    return nodes, [cells[k] for k in sorted(cells)], edges


def _rank(sig: List[tuple]) -> List[int]:
    where = {s: k for k, s in enumerate(sorted(set(sig)))}
    return [where[s] for s in sig]


def _canonical_search(g: LabeledGraph) -> Tuple[List[NodeId], tuple]:
    """Exhaustive search over node orderings compatible with the refined cells.

    Returns the ordering with the lexicographically smallest sorted edge list,
    together with that edge list.
    """
    nodes, cells, edges = _refined_cells(g)
    best_key: Optional[tuple] = None
    best_order: List[int] = []
    for combo in itertools.product(*(itertools.permutations(c) for c in cells)):
        order = [i for cell in combo for i in cell]
        pos = [0] * len(order)
        for k, i in enumerate(order):
            pos[i] = k
        key = tuple(sorted([(pos[a], pos[b], r) for a, b, r in edges]))
        if best_key is None or key < best_key:
            best_key, best_order = key, order
    return [nodes[i] for i in best_order], best_key or ()


def _canonical_form(g: LabeledGraph) -> str:
    order, key = _canonical_search(g)
    labels = ",".join(label_text(g._nodes[n]) for n in order)
    edges = ",".join("%d>%d:%s" % e for e in key)
    return "N[%s]E[%s]" % (labels, edges)


def canonical_form(g: LabeledGraph) -> str:
    """Deterministic string equal for exactly the graphs isomorphic to ``g``."""
    return g.canonical_form()


def permute_node_ids(g: LabeledGraph, mapping: Mapping[NodeId, NodeId]) -> LabeledGraph:
    return g.rename(mapping)


# -- subgraph matching -------------------------------------------------------

LabelPredicate = Callable[[Optional[Label], Optional[Label]], bool]


def label_equal(p: Optional[Label], h: Optional[Label]) -> bool:
    return p == h


def _search_order(pattern: LabeledGraph) -> List[NodeId]:
    """Pattern nodes ordered so each one (after the first of its component)
    is adjacent to an earlier one, which lets edge checks prune early."""
    adj: Dict[NodeId, set] = {n: set() for n in pattern._nodes}
    for a, b, _ in pattern._edges:
        adj[a].add(b)
        adj[b].add(a)
    order: List[NodeId] = []
    seen: set = set()
    for start in sorted(adj, key=lambda n: (-len(adj[n]), n)):
        if start in seen:
            continue
        seen.add(start)
        frontier = [start]
        while frontier:
            n = frontier.pop(0)
            order.append(n)
            for m in sorted(adj[n]):
                if m not in seen:
                    seen.add(m)
                    frontier.append(m)
    return order


def find_matchings(pattern: LabeledGraph, host: LabeledGraph,
                   label_ok: LabelPredicate = label_equal) -> List[Matching]:
    """All injective, edge-preserving maps from ``pattern`` into ``host``.

    Matching is non-induced: the host may carry edges between matched nodes
    that the pattern does not mention. ``label_ok(pattern_label, host_label)``
    must hold for every mapped pair. Results are sorted by the host ids they
    assign (pattern ids taken in sorted order).
    """
    if len(pattern) == 0:
        raise ValueError("pattern must be non-empty")
    order = _search_order(pattern)
    host_edges = host._edges
    host_ids = host.node_ids()
    pat_edges = list(pattern._edges)
    # edges to check once the node at position i is assigned
    checks: List[List[Edge]] = [[] for _ in order]
    pos = {n: i for i, n in enumerate(order)}
    for a, b, r in pat_edges:
        checks[max(pos[a], pos[b])].append((a, b, r))
    candidates = [
        [h for h in host_ids if label_ok(pattern._nodes[p], host._nodes[h])]
        for p in order
    ]

    results: List[Matching] = []
    assign: Dict[NodeId, NodeId] = {}
    used: set = set()

    def extend(i: int) -> None:
        if i == len(order):
            results.append(dict(assign))
            return
        p = order[i]
        for h in candidates[i]:
            if h in used:
                continue
            assign[p] = h
            if all((assign[a], assign[b], r) in host_edges for a, b, r in checks[i]):
                used.add(h)
                extend(i + 1)
                used.discard(h)
            del assign[p]

    extend(0)
    keys = sorted(pattern._nodes)
    results.sort(key=lambda m: tuple(m[k] for k in keys))
    return results


def iter_components(g: LabeledGraph) -> Iterator[List[NodeId]]:
    """Weakly connected components, each as a sorted id list."""
    adj: Dict[NodeId, set] = {n: set() for n in g._nodes}
    for a, b, _ in g._edges:
        adj[a].add(b)
        adj[b].add(a)
    seen: set = set()
    for n in g.node_ids():
        if n in seen:
            continue
        comp, stack = [], [n]
        seen.add(n)
        while stack:
            x = stack.pop()
            comp.append(x)
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        yield sorted(comp)
