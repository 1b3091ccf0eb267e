"""Loading a complete grammar and running the icon-code-to-phrase pipeline."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence

from .errors import DataFileError, GlossError
from .graph import LabeledGraph
from .iconparse import Dictionary, IconCode, VetoPattern, expand, filter_valid, load_dictionary, load_vetoes, parse_code
from .ontology import Hierarchy, load_ontology
from .rewrite import DEFAULT_CAP, LITERAL, TRANSLATE, RewriteRule, RewriteSet, load_rules, rewrite_closure, terminal_filter
from .verbalize import Lexicon, linearize, load_lexicon, missing_templates

DATA_ENV = "ICONGLOSS_DATA"
FILE_NAMES = {
    "ontology": "ontology.txt",
    "dictionary": "dictionary.txt",
    "vetoes": "vetoes.xml",
    "rules": "rules.xml",
    "lexicon": "lexicon.txt",
}


def shipped_data_dir() -> Path:
    return Path(str(resources.files("icongloss") / "data"))


def default_paths(data_dir: Optional[os.PathLike] = None) -> Dict[str, Path]:
    """Data file paths from ``data_dir``, else $ICONGLOSS_DATA, else the shipped set."""
    base = Path(data_dir) if data_dir else Path(os.environ.get(DATA_ENV) or shipped_data_dir())
    return {kind: base / name for kind, name in FILE_NAMES.items()}


@dataclass(frozen=True, eq=False)
class Grammar:
    hierarchy: Hierarchy
    dictionary: Dictionary
    vetoes: Sequence[VetoPattern]
    rules: Sequence[RewriteRule]
    lexicon: Lexicon


def _read(path: Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFileError(str(path), [(None, "cannot read: %s" % exc.strerror)]) from None


def _resolve(paths: Optional[Mapping[str, os.PathLike]]) -> Dict[str, Path]:
    p = default_paths()
    p.update({k: Path(v) for k, v in (paths or {}).items() if v})
    return p


def load_grammar(paths: Optional[Mapping[str, os.PathLike]] = None, check: bool = True) -> Grammar:
    """Load the five data files; stops at the first file that fails.

    Use :func:`validate_files` to collect every problem instead.
    """
    p = _resolve(paths)
    h = load_ontology(_read(p["ontology"]), str(p["ontology"]))
    grammar = Grammar(
        h,
        load_dictionary(_read(p["dictionary"]), h, str(p["dictionary"])),
        load_vetoes(_read(p["vetoes"]), h, str(p["vetoes"])),
        load_rules(_read(p["rules"]), h, str(p["rules"])),
        load_lexicon(_read(p["lexicon"]), h, str(p["lexicon"])),
    )
    if check:
        problems = cross_check(grammar)
        if problems:
            raise DataFileError("grammar", [(None, msg) for msg in problems])
    return grammar


def cross_check(grammar: Grammar) -> List[str]:
    """Consistency checks spanning several files.

    Every rule literal needs templates in every language, and every
    dictionary concept that a translate node could match must be translatable.
    """
    problems = []
    lex, h = grammar.lexicon, grammar.hierarchy
    literals = {p.label for r in grammar.rules for p in r.product_nodes.values() if p.op == LITERAL}
    for sem, lang in missing_templates(lex, literals):
        problems.append("lexicon: missing template for %s in language %s" % (sem, lang))
    concepts = grammar.dictionary.concepts()
    for rule in grammar.rules:
        for pid, p in rule.product_nodes.items():
            if p.op != TRANSLATE:
                continue
            generic = rule.filter.label(p.arg)
            for c in concepts:
                if h.is_subtype(c, generic):
                    try:
                        lex.entry_for(c)
                    except GlossError as exc:
                        problems.append("rule %s node %s: %s" % (rule.id, pid, exc))
    return problems


def validate_files(paths: Optional[Mapping[str, os.PathLike]] = None):
    """Load everything that can be loaded and gather all problems.

    Returns ``(grammar_or_None, problems, counts)``.
    """
    p = _resolve(paths)
    problems: List[str] = []
    counts: Dict[str, int] = {}

    def attempt(fn):
        try:
            return fn()
        except DataFileError as exc:
            problems.extend(exc.messages())
            return None

    h = attempt(lambda: load_ontology(_read(p["ontology"]), str(p["ontology"])))
    if h is None:
        return None, problems, counts
    counts["concepts"] = len(h.concepts)
    counts["relations"] = len(h.relations)
    d = attempt(lambda: load_dictionary(_read(p["dictionary"]), h, str(p["dictionary"])))
    v = attempt(lambda: load_vetoes(_read(p["vetoes"]), h, str(p["vetoes"])))
    r = attempt(lambda: load_rules(_read(p["rules"]), h, str(p["rules"])))
    lx = attempt(lambda: load_lexicon(_read(p["lexicon"]), h, str(p["lexicon"])))
    if d is not None:
        counts["dictionary entries"] = len(d)
    if v is not None:
        counts["vetoes"] = len(v)
    if r is not None:
        counts["rules"] = len(r)
    if lx is not None:
        counts["lexicon entries"] = len(lx.tr_table)
        counts["templates"] = len(lx.realization)
        counts["languages"] = len(lx.languages)
    if None in (d, v, r, lx):
        return None, problems, counts
    grammar = Grammar(h, d, v, r, lx)
    problems.extend(cross_check(grammar))
    return (grammar if not problems else None), problems, counts


@dataclass
class GlossResult:
    code: IconCode
    candidates: List[LabeledGraph]
    readings: List[LabeledGraph]
    closures: List[RewriteSet] = field(default_factory=list)
    terminals: List[LabeledGraph] = field(default_factory=list)
    phrases: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return bool(self.phrases)


def gloss(grammar: Grammar, code, lang: str = "en", cap: int = DEFAULT_CAP,
          workers: int = 1) -> GlossResult:
    """Run the whole pipeline for one icon code (string or :class:`IconCode`)."""
    if isinstance(code, str):
        code = parse_code(code)
    candidates = expand(code, grammar.dictionary)
    readings = filter_valid(candidates, grammar.vetoes, grammar.hierarchy)
    result = GlossResult(code, candidates, readings)
    seen: Dict[str, LabeledGraph] = {}
    for g in readings:
        rs = rewrite_closure(g, grammar.rules, grammar.hierarchy, grammar.lexicon,
                             cap=cap, workers=workers)
        result.closures.append(rs)
        for t in terminal_filter(rs):
            seen.setdefault(t.canonical_form(), t)
    result.terminals = [seen[k] for k in sorted(seen)]
    result.phrases = sorted({linearize(t, grammar.lexicon, lang) for t in result.terminals})
    return result
