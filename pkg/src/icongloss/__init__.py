"""Natural-language glosses for 7-field medical icon codes via graph rewriting."""

from .errors import GlossError
from .graph import Label, LabeledGraph, build_graph, canonical_form, find_matchings
from .iconparse import IconCode, expand, filter_valid, parse_code
from .ontology import Hierarchy, is_subtype, load_ontology
from .pipeline import Grammar, gloss, load_grammar
from .rewrite import RewriteRule, apply_rule, glue, load_rules, match_rule, rewrite_closure, terminal_filter
from .verbalize import Lexicon, linearize, load_lexicon, translate_concept

__version__ = "0.1.0"

__all__ = [
    "GlossError", "Label", "LabeledGraph", "build_graph", "canonical_form", "find_matchings",
    "IconCode", "expand", "filter_valid", "parse_code",
    "Hierarchy", "is_subtype", "load_ontology",
    "Grammar", "gloss", "load_grammar",
    "RewriteRule", "apply_rule", "glue", "load_rules", "match_rule", "rewrite_closure", "terminal_filter",
    "Lexicon", "linearize", "load_lexicon", "translate_concept",
]
