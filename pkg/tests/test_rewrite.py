import itertools
import random

import pytest

from icongloss.errors import ClosureLimitError, DataFileError, GlueError
from icongloss.graph import Label, LabeledGraph, build_graph, canonical_form
from icongloss.iconparse import expand, filter_valid, parse_code, subsumes
from icongloss.rewrite import (
    apply_rule,
    glue,
    load_rules,
    match_rule,
    rewrite_closure,
    termination_measure,
    terminal_filter,
)

from conftest import GOLDEN_CODE, c, s
from oracles import brute_matchings


def G(nodes, edges):
    """Shorthand: ``nodes`` maps id -> "c:X" / "s:x"; edges are "a rel b"."""
    return build_graph([(k, Label.parse(v)) for k, v in nodes.items()],
                       [tuple(e.split()[i] for i in (0, 2, 1)) for e in edges])


STATE_NODES = {"S": "c:Medical_state", "V": "c:Viral_infection", "L": "c:Liver"}
INFECTION = {"inf": "s:infection", "vir": "s:viral", "liv": "s:liver"}
INFECTION_EDGES = ["inf attr vir", "inf i liv"]

G0 = G({**STATE_NODES, "F": "c:Future", "M": "c:Monitoring"},
       ["S hasTemporality F", "S isRelatedTo V", "S hasAnatomy L", "S hasCareStatus M"])

# every member of the closure of G0, derived by hand
EXPECTED = {
    "g0": G0,
    "g1 risk": G({**STATE_NODES, "r": "s:risk", "M": "c:Monitoring"},
                 ["r i S", "S isRelatedTo V", "S hasAnatomy L", "S hasCareStatus M"]),
    "g2 care": G({**STATE_NODES, "m": "s:monitoring", "F": "c:Future"},
                 ["m i S", "S isRelatedTo V", "S hasAnatomy L", "S hasTemporality F"]),
    "g3 trouble": G({**INFECTION, "F": "c:Future", "M": "c:Monitoring"},
                    INFECTION_EDGES + ["inf hasTemporality F", "inf hasCareStatus M"]),
    "g4 risk,care": G({**STATE_NODES, "r": "s:risk", "m": "s:monitoring"},
                      ["r i m", "m i S", "S isRelatedTo V", "S hasAnatomy L"]),
    "g5 risk,trouble": G({**INFECTION, "r": "s:risk", "M": "c:Monitoring"},
                         INFECTION_EDGES + ["r i inf", "inf hasCareStatus M"]),
    "g6 care,risk": G({**STATE_NODES, "r": "s:risk", "m": "s:monitoring"},
                      ["m i r", "r i S", "S isRelatedTo V", "S hasAnatomy L"]),
    "g7 care,trouble": G({**INFECTION, "m": "s:monitoring", "F": "c:Future"},
                         INFECTION_EDGES + ["m i inf", "inf hasTemporality F"]),
    "g8 risk,care,trouble": G({**INFECTION, "r": "s:risk", "m": "s:monitoring"},
                              INFECTION_EDGES + ["r i m", "m i inf"]),
    "g9 care,risk,trouble": G({**INFECTION, "r": "s:risk", "m": "s:monitoring"},
                              INFECTION_EDGES + ["m i r", "r i inf"]),
}


@pytest.fixture(scope="module")
def rules(grammar):
    return {r.id: r for r in grammar.rules}


def _cf(g):
    return canonical_form(g)


def test_shipped_rules(rules):
    assert list(rules) == ["risk-of-state", "care-of-state", "trouble-of-organ"]
    risk = rules["risk-of-state"]
    assert risk.persisted == {"state"}
    assert risk.glue_site("state") == "risk"
    assert risk.glue_site("time") is None


def test_golden_reading_is_g0(grammar):
    reading = filter_valid(expand(parse_code(GOLDEN_CODE), grammar.dictionary),
                           grammar.vetoes, grammar.hierarchy)
    assert [_cf(g) for g in reading] == [_cf(G0)]


def test_match_golden(grammar, rules):
    for rid in rules:
        assert len(match_rule(rules[rid], G0, grammar.hierarchy)) == 1


def test_match_none_on_terminal(grammar, rules):
    for rule in rules.values():
        assert match_rule(rule, EXPECTED["g8 risk,care,trouble"], grammar.hierarchy) == []


def test_match_respects_dangling(grammar, rules):
    # an extra edge into the organ node: the organ is deleted without a site
    g = G({**STATE_NODES, "X": "c:Medical_state"},
          ["S isRelatedTo V", "S hasAnatomy L", "X hasAnatomy L"])
    assert match_rule(rules["trouble-of-organ"], g, grammar.hierarchy) == []


def test_apply_risk(grammar, lexicon, rules):
    rule = rules["risk-of-state"]
    (m,) = match_rule(rule, G0, grammar.hierarchy)
    assert _cf(apply_rule(rule, G0, m, lexicon)) == _cf(EXPECTED["g1 risk"])


def test_apply_care(grammar, lexicon, rules):
    rule = rules["care-of-state"]
    (m,) = match_rule(rule, G0, grammar.hierarchy)
    assert _cf(apply_rule(rule, G0, m, lexicon)) == _cf(EXPECTED["g2 care"])


def test_apply_moves_incoming_edges(grammar, lexicon, rules):
    src = EXPECTED["g1 risk"]
    rule = rules["care-of-state"]
    (m,) = match_rule(rule, src, grammar.hierarchy)
    assert _cf(apply_rule(rule, src, m, lexicon)) == _cf(EXPECTED["g4 risk,care"])


def test_apply_whole_graph_replacement(grammar, lexicon, rules):
    g = G(STATE_NODES, ["S isRelatedTo V", "S hasAnatomy L"])
    rule = rules["trouble-of-organ"]
    (m,) = match_rule(rule, g, grammar.hierarchy)
    out = apply_rule(rule, g, m, lexicon)
    assert out.is_terminal()
    assert _cf(out) == _cf(G(INFECTION, INFECTION_EDGES))


def test_apply_leaves_source_untouched(grammar, lexicon, rules):
    before = G0.to_json()
    rule = rules["trouble-of-organ"]
    apply_rule(rule, G0, match_rule(rule, G0, grammar.hierarchy)[0], lexicon)
    assert G0.to_json() == before


def test_closure_matches_hand_derivation(grammar, lexicon):
    rs = rewrite_closure(G0, grammar.rules, grammar.hierarchy, lexicon)
    assert sorted(rs.graphs) == sorted(_cf(g) for g in EXPECTED.values())
    assert rs.sizes == [1, 4, 8, 10, 10]
    terms = terminal_filter(rs)
    assert [_cf(t) for t in terms] == sorted(_cf(EXPECTED[k]) for k in ("g8 risk,care,trouble",
                                                                        "g9 care,risk,trouble"))


def test_closure_of_terminal_graph(grammar, lexicon):
    g = EXPECTED["g8 risk,care,trouble"]
    rs = rewrite_closure(g, grammar.rules, grammar.hierarchy, lexicon)
    assert list(rs) == [g] and rs.sizes == [1, 1]


def test_closure_without_rules(grammar, lexicon):
    rs = rewrite_closure(G0, [], grammar.hierarchy, lexicon)
    assert len(rs) == 1 and G0 in rs
    assert terminal_filter(rs) == []


def test_closure_cap(grammar, lexicon):
    with pytest.raises(ClosureLimitError):
        rewrite_closure(G0, grammar.rules, grammar.hierarchy, lexicon, cap=5)


def test_closure_parallel_equals_sequential(grammar, lexicon):
    a = rewrite_closure(G0, grammar.rules, grammar.hierarchy, lexicon)
    b = rewrite_closure(G0, grammar.rules, grammar.hierarchy, lexicon, workers=4)
    assert list(a.graphs) == list(b.graphs) and a.sizes == b.sizes
    assert [x.rule_id for x in a.applications] == [x.rule_id for x in b.applications]


def test_on_iteration_callback(grammar, lexicon):
    seen = []
    rewrite_closure(G0, grammar.rules, grammar.hierarchy, lexicon,
                    on_iteration=lambda k, n: seen.append((k, n)))
    assert seen == [(1, 4), (2, 8), (3, 10), (4, 10)]


def test_terminal_filter_on_sequence():
    t = EXPECTED["g8 risk,care,trouble"]
    assert terminal_filter([G0, t]) == [t]
    assert terminal_filter([]) == []


def _all_codes(dictionary):
    by_field = {}
    for (f, tok) in dictionary.entries:
        by_field.setdefault(f, ["null"]).append(tok)
    for combo in itertools.product(*(by_field.get(f, ["null"]) for f in range(1, 5))):
        yield "-".join(combo + ("null",) * 3)


def test_measure_decreases_for_every_code(grammar, lexicon):
    checked = 0
    for code in _all_codes(grammar.dictionary):
        for g in filter_valid(expand(parse_code(code), grammar.dictionary),
                              grammar.vetoes, grammar.hierarchy):
            rs = rewrite_closure(g, grammar.rules, grammar.hierarchy, lexicon)
            for app in rs.applications:
                assert termination_measure(app.result) < termination_measure(app.source)
                checked += 1
    assert checked > 100


def test_measure_values():
    assert termination_measure(G0) == (5, 4)
    assert termination_measure(EXPECTED["g8 risk,care,trouble"]) == (0, 0)


# -- glue ----------------------------------------------------------------------

def test_glue_fills_blank_trunk_site():
    trunk = LabeledGraph({"a": s("x"), "b": None}, [("a", "b", "i")])
    graft = build_graph([("p", s("risk")), ("q", s("y"))], [("p", "q", "ii")])
    out = glue(trunk, graft, {1: "b"}, {1: "p"})
    assert out.label("b") == s("risk")
    assert len(out) == 3
    assert ("a", "b", "i") in out.edges
    q = next(n for n in out.nodes if out.label(n) == s("y"))
    assert ("b", q, "ii") in out.edges


def test_glue_blank_graft_site_keeps_trunk_label():
    trunk = build_graph([("a", c("Liver"))])
    graft = LabeledGraph({"p": s("risk"), "q": None}, [("p", "q", "i")])
    out = glue(trunk, graft, {"k": "a"}, {"k": "q"})
    assert out.label("a") == c("Liver") and len(out) == 2


@pytest.mark.parametrize("tl,gl,msg", [(s("a"), s("b"), "both sides filled"), (None, None, "both sides blank")])
def test_glue_site_conflicts(tl, gl, msg):
    trunk = LabeledGraph({"a": tl})
    graft = LabeledGraph({"p": gl})
    with pytest.raises(GlueError, match=msg):
        glue(trunk, graft, {1: "a"}, {1: "p"})


def test_glue_key_mismatch():
    with pytest.raises(GlueError, match="site keys"):
        glue(LabeledGraph({"a": None}), LabeledGraph({"p": s("x")}), {1: "a"}, {2: "p"})


def test_glue_without_sites_is_disjoint_union():
    out = glue(build_graph([("a", s("x"))]), build_graph([("a", s("y"))]), {}, {})
    assert sorted(map(str, out.nodes.values())) == ["s:x", "s:y"]


# -- loader --------------------------------------------------------------------

RULE_TEMPLATE = """<rules><rule id="r1">
  <filter>%s</filter>
  <product>%s</product>
</rule></rules>"""


@pytest.mark.parametrize("filt,prod,msg", [
    ('<node id="state" label="c:Medical_state" coindex="1"/>',
     '<node id="x" op="literal" label="s:risk" coindex="1"/><node id="y" op="subst" arg="state"/>'
     '<edge from="x" to="y" label="i"/>',
     "never terminate"),
    ('<node id="a" label="c:Medical_state"/>',
     '<node id="x" op="literal" label="c:Liver"/>', "non-semanteme"),
    ('<node id="a" label="c:Medical_state"/>',
     '<node id="x" op="translate" arg="zz"/>', "unknown filter node"),
    ('<node id="a" label="c:Medical_state" coindex="1"/>',
     '<node id="x" op="literal" label="s:a" coindex="2"/>', "matches no filter node"),
    ('<node id="a" label="c:Medical_state"/>',
     '<node id="x" op="literal" label="s:a"/><node id="y" op="literal" label="s:b"/>'
     '<edge from="x" to="y" label="hasAnatomy"/>', "product edge label"),
    ('<node id="a" label="c:Medical_state"/>',
     '<node id="x" op="subst" arg="a"/><node id="y" op="subst" arg="a"/>', "substituted twice"),
    ('<node id="a" label="c:Medical_state"/>',
     '<node id="x" op="explode"/>', "unknown op"),
    ('<node id="a" label="c:Medical_state"/><node id="b" label="c:Liver"/>',
     '<node id="x" op="literal" label="s:a"/>', "connected"),
])
def test_rule_errors(hierarchy, filt, prod, msg):
    with pytest.raises(DataFileError, match=msg):
        load_rules(RULE_TEMPLATE % (filt, prod), hierarchy)


def test_duplicate_rule_ids(hierarchy):
    one = ('<rule id="r"><filter><node id="a" label="c:Medical_state"/></filter>'
           '<product><node id="x" op="literal" label="s:a"/></product></rule>')
    with pytest.raises(DataFileError, match="duplicate rule id"):
        load_rules("<rules>%s%s</rules>" % (one, one), hierarchy)


# -- matching against a brute-force oracle -----------------------------------

def _oracle_matches(rule, g, h):
    out = []
    for m in brute_matchings(rule.filter, g, subsumes(h)):
        matched = {(m[a], m[b], r) for a, b, r in rule.filter.edges}
        residual = [e for e in g.edges if e not in matched]
        doomed = {m[f] for f in rule.filter.nodes
                  if f not in rule.persisted and rule.filter_coindex.get(f) is None}
        if any(a in doomed or b in doomed for a, b, _ in residual):
            continue
        out.append(m)
    return sorted(tuple(sorted(m.items())) for m in out)


def test_match_rule_against_oracle(grammar):
    h = grammar.hierarchy
    rng = random.Random(2024)
    labels = sorted(h.concepts)
    rels = sorted(h.relations)
    # bias towards the labels the rules care about
    hot = [c("Medical_state"), c("Future"), c("Monitoring"), c("Viral_infection"), c("Liver")]
    for _ in range(300):
        n = rng.randint(1, 6)
        nodes = {"h%d" % i: rng.choice(hot if rng.random() < 0.7 else labels) for i in range(n)}
        edges = {(a, b, rng.choice(rels)) for a in nodes for b in nodes if rng.random() < 0.35}
        g = LabeledGraph(nodes, edges)
        for rule in grammar.rules:
            got = sorted(tuple(sorted(m.items())) for m in match_rule(rule, g, h))
            assert got == _oracle_matches(rule, g, h)
