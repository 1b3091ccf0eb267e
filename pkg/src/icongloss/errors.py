"""Exception hierarchy shared by the loaders and the pipeline."""

from __future__ import annotations

from typing import Iterable, List, Optional, Tuple


class GlossError(Exception):
    """Base class for every error raised by icongloss."""


class GraphError(GlossError):
    """Malformed graph construction (duplicate ids, undeclared endpoints)."""


class DataFileError(GlossError):
    """One or more problems found while loading a data file.

    ``problems`` holds ``(line, message)`` pairs; ``line`` is ``None`` when the
    problem is not tied to a single line (e.g. a cycle or an XML rule).
    """

    def __init__(self, source: str, problems: Iterable[Tuple[Optional[int], str]]):
        self.source = source
        self.problems: List[Tuple[Optional[int], str]] = list(problems)
        super().__init__("\n".join(self.messages()))

    def messages(self) -> List[str]:
        out = []
        for line, msg in self.problems:
            where = self.source if line is None else "%s:%d" % (self.source, line)
            out.append("%s: %s" % (where, msg))
        return out


class UnknownConceptError(GlossError, KeyError):
    def __str__(self) -> str:
        return "unknown concept %s" % (self.args[0],)


class CodeSyntaxError(GlossError, ValueError):
    """The icon code string itself is malformed."""


class UnknownTokenError(GlossError):
    """A (field, token) pair of an icon code has no dictionary entry."""

    def __init__(self, field: int, token: str):
        self.field = field
        self.token = token
        super().__init__("field %d: no dictionary entry for token %r" % (field, token))


class LexiconError(GlossError):
    """A translation or realization could not be produced from the lexicon."""


class LinearizationError(GlossError):
    pass


class GlueError(GlossError):
    pass


class ClosureLimitError(GlossError):
    """The rewrite closure grew past its configured cap."""
