"""Graph grammar over concept graphs: rules, matching, application, closure.

A rule has a *filter* (a concept pattern whose nodes may carry integer
coindices) and a *product* made of semanteme literals, translations of
matched filter nodes and substitution references. Applying a rule at a
matching deletes the matched edges, then:

* a filter node referenced by a ``subst`` product node persists; its
  residual outgoing edges stay on it while its residual incoming edges move
  to the product node sharing its coindex (if there is one);
* any other filter node whose coindex appears in the product is replaced by
  that product node, which inherits all of its residual edges;
* the remaining filter nodes are deleted (matching guarantees they have no
  residual edges).

Both kinds of re-attachment go through :func:`glue`: the host side becomes
the *trunk*, the instantiated product the *graft*, and each glue site has
exactly one filled side.

Rules file::

    <rules>
      <rule id="risk-of-state">
        <filter>
          <node id="state" label="c:Medical_state" coindex="1"/>
          <node id="time" label="c:Future"/>
          <edge from="state" to="time" label="hasTemporality"/>
        </filter>
        <product>
          <node id="risk" op="literal" label="s:risk" coindex="1"/>
          <node id="rest" op="subst" arg="state"/>
          <edge from="risk" to="rest" label="i"/>
        </product>
      </rule>
    </rules>
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import (
    Callable,
    Dict,
    Hashable,
    Iterator,
    List,
    Mapping,
    Optional,
    Sequence,
    Set,
    Tuple,
)

from ._xmlgraph import parse_document, parse_int, read_concept_pattern
from .errors import ClosureLimitError, DataFileError, GlueError, LexiconError
from .graph import Label, LabeledGraph, Matching, NodeId, find_matchings
from .iconparse import subsumes
from .ontology import SEM_RELATIONS, Hierarchy
from .verbalize import Lexicon, translate_concept

log = logging.getLogger(__name__)

LITERAL, TRANSLATE, SUBST = "literal", "translate", "subst"
DEFAULT_CAP = 10_000


@dataclass(frozen=True)
class ProductNode:
    op: str
    label: Optional[Label] = None
    arg: Optional[NodeId] = None
    coindex: Optional[int] = None


@dataclass(frozen=True)
class RewriteRule:
    id: str
    filter: LabeledGraph
    filter_coindex: Mapping[NodeId, int]
    product_nodes: Mapping[str, ProductNode]
    product_edges: Tuple[Tuple[str, str, str], ...]

    @property
    def persisted(self) -> Set[NodeId]:
        """Filter nodes referenced by a substitution node."""
        return {p.arg for p in self.product_nodes.values() if p.op == SUBST}

    def product_for_coindex(self, ci: Optional[int]) -> Optional[str]:
        if ci is None:
            return None
        for pid, p in self.product_nodes.items():
            if p.coindex == ci:
                return pid
        return None

    def glue_site(self, f: NodeId) -> Optional[str]:
        """Product node that takes over the residual edges of filter node ``f``."""
        return self.product_for_coindex(self.filter_coindex.get(f))

    def deletes_something(self) -> bool:
        if self.filter.edges:
            return True
        persisted = self.persisted
        return any(f not in persisted for f in self.filter.node_ids())


def _validate_rule(rule: RewriteRule, where: str) -> List[str]:
    problems = []
    filter_ids = set(rule.filter.node_ids())
    filter_cis = set(rule.filter_coindex.values())
    seen_ci: Dict[int, str] = {}
    subst_targets: Dict[NodeId, str] = {}
    for pid, p in rule.product_nodes.items():
        if p.op == LITERAL:
            if p.label is None:
                problems.append("%s: literal %s needs a label" % (where, pid))
            elif not p.label.is_sem:
                problems.append("%s: literal %s has non-semanteme label %s" % (where, pid, p.label))
        elif p.op in (TRANSLATE, SUBST):
            if p.label is not None:
                problems.append("%s: %s node %s must not carry a label" % (where, p.op, pid))
            if p.arg not in filter_ids:
                problems.append("%s: %s node %s refers to unknown filter node %r"
                                % (where, p.op, pid, p.arg))
            if p.op == SUBST:
                if p.arg in subst_targets:
                    problems.append("%s: filter node %s substituted twice (%s, %s)"
                                    % (where, p.arg, subst_targets[p.arg], pid))
                subst_targets[p.arg] = pid
                if p.coindex is not None:
                    problems.append("%s: subst node %s must not carry a coindex" % (where, pid))
        else:
            problems.append("%s: product node %s has unknown op %r" % (where, pid, p.op))
        if p.coindex is not None:
            if p.coindex not in filter_cis:
                problems.append("%s: product coindex %d matches no filter node" % (where, p.coindex))
            if p.coindex in seen_ci:
                problems.append("%s: coindex %d on two product nodes" % (where, p.coindex))
            seen_ci[p.coindex] = pid
    for a, b, rel in rule.product_edges:
        if rel not in SEM_RELATIONS:
            problems.append("%s: product edge label %r not in %s" % (where, rel, sorted(SEM_RELATIONS)))
        for end in (a, b):
            if end not in rule.product_nodes:
                problems.append("%s: product edge refers to unknown node %r" % (where, end))
    if not problems and not rule.deletes_something():
        problems.append("%s: rule deletes no concept node or edge (it would never terminate)" % where)
    return problems


def load_rules(document: str, h: Hierarchy, source: str = "<rules>") -> List[RewriteRule]:
    root = parse_document(document, source, "rules")
    problems: List[str] = []
    rules: List[RewriteRule] = []
    ids: Set[str] = set()
    for k, elem in enumerate(root, 1):
        if elem.tag != "rule":
            problems.append("unexpected element <%s>" % elem.tag)
            continue
        rid = elem.get("id")
        where = "rule %s" % (rid or "#%d" % k)
        if not rid:
            problems.append("%s: missing id" % where)
        elif rid in ids:
            problems.append("%s: duplicate rule id" % where)
        ids.add(rid or "")
        filt, prod = elem.find("filter"), elem.find("product")
        if filt is None or prod is None:
            problems.append("%s: needs <filter> and <product>" % where)
            continue
        local: List[str] = []
        pattern, coindex = read_concept_pattern(filt, h, where + " filter", local)
        nodes, edges = _read_product(prod, where + " product", local)
        if pattern is not None and not local:
            rule = RewriteRule(rid or "", pattern, coindex, nodes, edges)
            local += _validate_rule(rule, where)
            if not local:
                rules.append(rule)
        problems += local
    if problems:
        raise DataFileError(source, [(None, p) for p in problems])
    return rules


def _read_product(elem, where: str, problems: List[str]):
    nodes: Dict[str, ProductNode] = {}
    for node in elem.findall("node"):
        pid, op = node.get("id"), node.get("op")
        if not pid or not op:
            problems.append("%s: <node> needs id and op" % where)
            continue
        if pid in nodes:
            problems.append("%s: duplicate node id %r" % (where, pid))
            continue
        label = None
        if node.get("label") is not None:
            try:
                label = Label.parse(node.get("label"))
            except ValueError as exc:
                problems.append("%s: %s" % (where, exc))
                continue
        ci = parse_int(node.get("coindex"), "%s: coindex" % where, problems)
        nodes[pid] = ProductNode(op, label, node.get("arg"), ci)
    edges = []
    for edge in elem.findall("edge"):
        a, b, rel = edge.get("from"), edge.get("to"), edge.get("label")
        if not (a and b and rel):
            problems.append("%s: <edge> needs from, to and label" % where)
            continue
        edges.append((a, b, rel))
    for c in elem:
        if c.tag not in ("node", "edge"):
            problems.append("%s: unexpected element <%s>" % (where, c.tag))
    if not nodes:
        problems.append("%s: product is empty" % where)
    return nodes, tuple(edges)


# -- matching ----------------------------------------------------------------

def residual_edges(g: LabeledGraph, rule: RewriteRule, m: Matching):
    matched = {(m[a], m[b], r) for a, b, r in rule.filter.edges}
    return [e for e in g.sorted_edges() if e not in matched]


def satisfies_dangling(rule: RewriteRule, g: LabeledGraph, m: Matching) -> bool:
    """A deleted filter node without a glue site must leave no edge behind."""
    persisted = rule.persisted
    doomed = {m[f] for f in rule.filter.node_ids()
              if f not in persisted and rule.glue_site(f) is None}
    if not doomed:
        return True
    return not any(a in doomed or b in doomed for a, b, _ in residual_edges(g, rule, m))


def match_rule(rule: RewriteRule, g: LabeledGraph, h: Hierarchy) -> List[Matching]:
    """Sites where the filter matches ``g`` up to is-a subsumption."""
    return [m for m in find_matchings(rule.filter, g, subsumes(h))
            if satisfies_dangling(rule, g, m)]


# -- glue --------------------------------------------------------------------

def glue(trunk: LabeledGraph, graft: LabeledGraph,
         bindings: Mapping[Hashable, NodeId],
         graft_sites: Mapping[Hashable, NodeId]) -> LabeledGraph:
    """Merge ``graft`` into ``trunk`` at co-indexed sites.

    ``bindings`` maps each site key to a trunk node and ``graft_sites`` maps
    the same keys to graft nodes. At every site exactly one of the two nodes
    is blank (label ``None``); the merged node keeps the trunk id and takes
    the filled label. Unbound graft nodes get fresh ids, all edges are kept.
    """
    if set(bindings) != set(graft_sites):
        raise GlueError("site keys differ between trunk %s and graft %s"
                        % (sorted(map(str, bindings)), sorted(map(str, graft_sites))))
    if len(set(bindings.values())) != len(bindings):
        raise GlueError("two sites bound to the same trunk node")
    if len(set(graft_sites.values())) != len(graft_sites):
        raise GlueError("two sites bound to the same graft node")
    nodes = dict(trunk.nodes)
    target: Dict[NodeId, NodeId] = {}
    for key in sorted(bindings, key=str):
        t, s = bindings[key], graft_sites[key]
        if t not in trunk or s not in graft:
            raise GlueError("site %s refers to a missing node" % (key,))
        tl, sl = trunk.label(t), graft.label(s)
        if (tl is None) == (sl is None):
            raise GlueError("site %s: %s" % (key, "both sides blank" if tl is None else "both sides filled"))
        nodes[t] = tl if tl is not None else sl
        target[s] = t
    for s, lab in graft.nodes.items():
        if s in target:
            continue
        nid = trunk.fresh_id(nodes)
        nodes[nid] = lab
        target[s] = nid
    edges = set(trunk.edges)
    edges.update((target[a], target[b], r) for a, b, r in graft.edges)
    return LabeledGraph(nodes, edges)


# -- application -------------------------------------------------------------

def _instantiate_product(rule: RewriteRule, g: LabeledGraph, m: Matching, lex: Lexicon):
    """Graft graph for the product, plus the graft node of each product node."""
    nodes: Dict[NodeId, Optional[Label]] = {}
    edges: List[Tuple[NodeId, NodeId, str]] = []
    anchor: Dict[str, NodeId] = {}
    for pid, p in rule.product_nodes.items():
        if p.op == LITERAL:
            gid = "p.%s" % pid
            nodes[gid] = p.label
        elif p.op == SUBST:
            gid = "p.%s" % pid
            nodes[gid] = None
        else:
            concept = g.label(m[p.arg])
            try:
                frag = translate_concept(lex, concept)
            except LexiconError as exc:
                raise LexiconError("rule %s: %s" % (rule.id, exc)) from None
            # keep fragment nodes in file order so fresh ids are reproducible
            local = {}
            for n in sorted(frag.graph.node_ids(), key=lambda n: n.split(".", 1)[1]):
                local[n] = "p.%s.%s" % (pid, n.split(".", 1)[1])
                nodes[local[n]] = frag.graph.label(n)
            edges += [(local[a], local[b], r) for a, b, r in frag.graph.sorted_edges()]
            gid = local[frag.head]
        anchor[pid] = gid
    edges += [(anchor[a], anchor[b], r) for a, b, r in rule.product_edges]
    return LabeledGraph(nodes, edges), anchor


def apply_rule(rule: RewriteRule, g: LabeledGraph, m: Matching, lex: Lexicon) -> LabeledGraph:
    graft, anchor = _instantiate_product(rule, g, m, lex)
    nodes = dict(g.nodes)
    edges = set(residual_edges(g, rule, m))
    bindings: Dict[Hashable, NodeId] = {}
    sites: Dict[Hashable, NodeId] = {}
    subst_of = {p.arg: pid for pid, p in rule.product_nodes.items() if p.op == SUBST}
    taken: Set[NodeId] = set()

    for f in rule.filter.node_ids():
        v = m[f]
        site = rule.glue_site(f)
        if f in subst_of:
            # persisted: the subst placeholder unifies with v itself
            bindings[("subst", f)] = v
            sites[("subst", f)] = anchor[subst_of[f]]
            if site is not None:
                blank = g.fresh_id(taken)
                taken.add(blank)
                nodes[blank] = None
                moved = {e for e in edges if e[1] == v}
                edges -= moved
                edges |= {(a, blank, r) for a, _, r in moved}
                bindings[("coindex", f)] = blank
                sites[("coindex", f)] = anchor[site]
        elif site is not None:
            nodes[v] = None
            bindings[("coindex", f)] = v
            sites[("coindex", f)] = anchor[site]
        else:
            del nodes[v]
            edges = {e for e in edges if v not in (e[0], e[1])}

    trunk = LabeledGraph(nodes, edges)
    return glue(trunk, graft, bindings, sites)


def termination_measure(g: LabeledGraph) -> Tuple[int, int]:
    """(concept nodes, edges carrying an ontology relation); every legal rule
    application decreases it lexicographically."""
    concepts = sum(1 for lab in g.nodes.values() if lab is not None and lab.is_concept)
    concept_edges = sum(1 for _, _, r in g.edges if r not in SEM_RELATIONS)
    return concepts, concept_edges


# -- closure -----------------------------------------------------------------

@dataclass(frozen=True)
class Application:
    rule_id: str
    source: LabeledGraph
    result: LabeledGraph
    matching: Mapping[NodeId, NodeId]


@dataclass
class RewriteSet:
    """Graphs keyed by canonical form, in discovery order.

    ``sizes`` records the set size after each iteration (``sizes[0] == 1``);
    ``applications`` logs every rule application in evaluation order.
    """

    graphs: Dict[str, LabeledGraph] = field(default_factory=dict)
    sizes: List[int] = field(default_factory=list)
    applications: List[Application] = field(default_factory=list)

    def add(self, g: LabeledGraph) -> bool:
        key = g.canonical_form()
        if key in self.graphs:
            return False
        self.graphs[key] = g
        return True

    def __contains__(self, g: object) -> bool:
        return isinstance(g, LabeledGraph) and g.canonical_form() in self.graphs

    def __len__(self) -> int:
        return len(self.graphs)

    def __iter__(self) -> Iterator[LabeledGraph]:
        return iter(list(self.graphs.values()))


def rewrite_step(g: LabeledGraph, rules: Sequence[RewriteRule], h: Hierarchy,
                 lex: Lexicon) -> List[Application]:
    """Every single-rule rewriting of ``g``: rules in order, matchings in order."""
    out = []
    for rule in rules:
        for m in match_rule(rule, g, h):
            out.append(Application(rule.id, g, apply_rule(rule, g, m, lex), dict(m)))
    return out


def rewrite_closure(g0: LabeledGraph, rules: Sequence[RewriteRule], h: Hierarchy,
                    lex: Lexicon, cap: int = DEFAULT_CAP, workers: int = 1,
                    on_iteration: Optional[Callable[[int, int], None]] = None) -> RewriteSet:
    """Saturate ``{g0}`` under the rules.

    Each iteration rewrites the graphs found in the previous one (older
    members were already expanded, so the union is the same as rewriting the
    whole set) and stops once nothing new appears. With ``workers > 1`` the
    frontier is rewritten on a thread pool; results are merged in frontier
    order so the outcome is identical to the sequential run.
    """
    rs = RewriteSet()
    rs.add(g0)
    rs.sizes.append(len(rs))
    frontier = [g0]
    iteration = 0
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while frontier:
            if pool is not None:
                batches = list(pool.map(lambda g: rewrite_step(g, rules, h, lex), frontier))
            else:
                batches = [rewrite_step(g, rules, h, lex) for g in frontier]
            new = []
            for batch in batches:
                for app in batch:
                    rs.applications.append(app)
                    if rs.add(app.result):
                        new.append(app.result)
                        if len(rs) > cap:
                            raise ClosureLimitError(
                                "rewrite closure exceeded %d graphs; the grammar may not terminate" % cap)
            iteration += 1
            rs.sizes.append(len(rs))
            log.debug("closure iteration %d: %d graphs (%d new)", iteration, len(rs), len(new))
            if on_iteration is not None:
                on_iteration(iteration, len(rs))
            frontier = new
    finally:
        if pool is not None:
            pool.shutdown()
    return rs


def terminal_filter(rs) -> List[LabeledGraph]:
    """Members made only of semantemes, sorted by canonical form."""
    graphs = rs.graphs.values() if isinstance(rs, RewriteSet) else rs
    return sorted((g for g in graphs if g.is_terminal()), key=lambda g: g.canonical_form())
