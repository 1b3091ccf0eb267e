"""Command-line front end: ``icongloss gloss`` and ``icongloss validate``.

Exit status: 0 success, 1 usage error, 2 data error, 3 no phrase could be
produced (no valid reading or no terminal graph).
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, TextIO

from . import __version__
from .errors import CodeSyntaxError, DataFileError, GlossError
from .pipeline import DATA_ENV, FILE_NAMES, GlossResult, default_paths, gloss, load_grammar, validate_files
from .rewrite import DEFAULT_CAP

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_EMPTY = 0, 1, 2, 3
STAGES = ("concept", "closure", "semantic", "phrase")
EMITS = STAGES + ("all",)
FORMATS = ("text", "json", "dot")


@dataclass
class RunConfig:
    ontology: Optional[str] = None
    dictionary: Optional[str] = None
    vetoes: Optional[str] = None
    rules: Optional[str] = None
    lexicon: Optional[str] = None
    data_dir: Optional[str] = None
    lang: str = "en"
    emit: str = "phrase"
    format: str = "text"
    cap: int = DEFAULT_CAP
    jobs: int = 1

    def paths(self):
        paths = default_paths(self.data_dir)
        for kind in FILE_NAMES:
            if getattr(self, kind):
                paths[kind] = getattr(self, kind)
        return paths


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, "%s: error: %s\n" % (self.prog, message))


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="icongloss", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    files = _Parser(add_help=False)
    group = files.add_argument_group("data files")
    group.add_argument("--data-dir", help="directory holding the five data files "
                       "(default: $%s, else the shipped sample data)" % DATA_ENV)
    for kind, name in FILE_NAMES.items():
        group.add_argument("--" + kind, metavar="FILE", help="override %s" % name)

    g = sub.add_parser("gloss", parents=[files], help="gloss icon codes")
    g.add_argument("codes", nargs="+", metavar="CODE",
                   help="7 hyphen-separated tokens, e.g. risk-virus-liver-monitoring-null-null-null")
    g.add_argument("--lang", default="en", help="output language (default %(default)s)")
    g.add_argument("--emit", choices=EMITS, default="phrase", help="pipeline stage to print")
    g.add_argument("--format", choices=FORMATS, default="text")
    g.add_argument("--cap", type=_positive, default=DEFAULT_CAP,
                   help="maximum rewrite-set size (default %(default)s)")
    g.add_argument("--jobs", type=_positive, default=1, help="codes glossed in parallel")

    sub.add_parser("validate", parents=[files], help="check the data files")
    return parser


def _config(args) -> RunConfig:
    cfg = RunConfig()
    for key in vars(cfg):
        if hasattr(args, key):
            setattr(cfg, key, getattr(args, key))
    return cfg


# -- rendering ---------------------------------------------------------------

def _stage_graphs(result: GlossResult, stage: str):
    if stage == "concept":
        return result.readings
    if stage == "closure":
        return [g for rs in result.closures for g in rs]
    return result.terminals


def render(result: GlossResult, cfg: RunConfig, several: bool) -> str:
    stages = STAGES if cfg.emit == "all" else (cfg.emit,)
    code = str(result.code)
    out: List[str] = []
    for stage in stages:
        if cfg.format == "json":
            obj = {"stage": stage, "code": code}
            if stage == "phrase":
                obj["phrases"] = result.phrases
            else:
                obj["graphs"] = [g.canonical_relabel().to_json_obj() for g in _stage_graphs(result, stage)]
            out.append(json.dumps(obj, sort_keys=True, ensure_ascii=False))
            continue
        if stage == "phrase":
            if cfg.emit == "all" or several:
                out.append("== phrase: %s" % code)
            out.extend(result.phrases)
            continue
        out.append("== %s: %s" % (stage, code))
        for k, g in enumerate(_stage_graphs(result, stage), 1):
            g = g.canonical_relabel()
            if cfg.format == "dot":
                out.append(g.to_dot("%s_%d" % (stage, k)))
            else:
                out.append("-- graph %d" % k)
                out.append(g.to_text())
    return "\n".join(line for line in out if line) + "\n"


# -- commands ----------------------------------------------------------------

def _fail(stderr: TextIO, status: int, message: str) -> int:
    stderr.write("icongloss: %s\n" % message)
    return status


def cmd_gloss(cfg: RunConfig, codes: Sequence[str], stdout: TextIO, stderr: TextIO) -> int:
    try:
        grammar = load_grammar(cfg.paths())
    except DataFileError as exc:
        return _fail(stderr, EXIT_DATA, "data error:\n" + str(exc))
    if cfg.lang not in grammar.lexicon.languages:
        return _fail(stderr, EXIT_USAGE, "language %r not declared in the lexicon (have: %s)"
                     % (cfg.lang, ", ".join(grammar.lexicon.languages)))

    def run(code: str):
        try:
            return gloss(grammar, code, cfg.lang, cfg.cap), None
        except CodeSyntaxError as exc:
            return None, (EXIT_USAGE, "%s: %s" % (code, exc))
        except GlossError as exc:
            return None, (EXIT_DATA, "%s: %s" % (code, exc))

    if cfg.jobs > 1 and len(codes) > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            outcomes = list(pool.map(run, codes))
    else:
        outcomes = [run(c) for c in codes]

    # with several codes the status is that of the first code that failed
    status = EXIT_OK
    several = len(codes) > 1
    for code, (result, error) in zip(codes, outcomes):
        if error is not None:
            _fail(stderr, *error)
            status = status or error[0]
            continue
        stdout.write(render(result, cfg, several))
        if not result.readings:
            _fail(stderr, EXIT_EMPTY, "%s: no valid reading" % code)
        elif not result.terminals:
            _fail(stderr, EXIT_EMPTY, "%s: no terminal graph" % code)
        if not result.ok:
            status = status or EXIT_EMPTY
    return status


def cmd_validate(cfg: RunConfig, stdout: TextIO, stderr: TextIO) -> int:
    grammar, problems, counts = validate_files(cfg.paths())
    for name, n in counts.items():
        stdout.write("%s: %d\n" % (name, n))
    if problems:
        for p in problems:
            stderr.write(p + "\n")
        return _fail(stderr, EXIT_DATA, "%d problem(s) found" % len(problems))
    stdout.write("ok\n")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None, stdout: TextIO = None, stderr: TextIO = None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    cfg = _config(args)
    if args.command == "gloss":
        return cmd_gloss(cfg, args.codes, stdout, stderr)
    return cmd_validate(cfg, stdout, stderr)


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
