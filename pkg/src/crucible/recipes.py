"""Recipe parsing.

A recipe is a small Dockerfile-style text: one directive per logical
line, where a trailing backslash continues the line. Only the directives
needed for scientific images are accepted (FROM, USER, RUN, ENV,
WORKDIR, COPY). Parsing produces a canonical directive sequence that
downstream layer hashing treats as the sole source of truth.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass

from .errors import CrucibleError


class RecipeError(CrucibleError):
    pass


class EmptyRecipe(RecipeError):
    pass


class FromNotFirst(RecipeError):
    pass


class MultipleFrom(RecipeError):
    pass


class UnknownDirective(RecipeError):
    pass


class MissingDirectiveArgument(RecipeError):
    pass


class DirectiveKind(enum.Enum):
    FROM = "FROM"
    USER = "USER"
    RUN = "RUN"
    ENV = "ENV"
    WORKDIR = "WORKDIR"
    COPY = "COPY"


@dataclass(frozen=True)
class Directive:
    """One parsed recipe instruction."""

    kind: DirectiveKind
    argument: str

    def canonical(self) -> str:
        return f"{self.kind.value} {self.argument}"


@dataclass(frozen=True)
class Recipe:
    directives: tuple[Directive, ...]
    source_digest: str

    @property
    def base_reference(self) -> str:
        """The image reference named by the FROM directive."""
        return self.directives[0].argument


def _logical_lines(text: str) -> list[str]:
    """Fold continuations and drop blanks and comments.

    A backslash at the end of a physical line joins it to the next one
    with a single space; leading whitespace of continuation lines is
    stripped. Comment lines (first non-blank char '#') vanish entirely,
    including inside a continuation run, which keeps hand-annotated
    recipes hashable the same as clean ones.
    """
    lines: list[str] = []
    pending: str | None = None
    for raw in text.replace("\r\n", "\n").split("\n"):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if pending is not None:
            stripped = pending + " " + stripped
            pending = None
        if stripped.endswith("\\"):
            pending = stripped[:-1].rstrip()
        else:
            lines.append(stripped)
    if pending is not None:
        # file ended mid-continuation; take what we have
        lines.append(pending)
    return lines


def parse_recipe(text: str) -> Recipe:
    """Parse recipe text into its canonical directive sequence.

    Raises EmptyRecipe, FromNotFirst, MultipleFrom, UnknownDirective or
    MissingDirectiveArgument on malformed input.
    """
    directives: list[Directive] = []
    for line in _logical_lines(text):
        parts = line.split(None, 1)
        keyword = parts[0].upper()
        try:
            kind = DirectiveKind(keyword)
        except ValueError:
            raise UnknownDirective(f"unknown directive {parts[0]!r}") from None
        if len(parts) < 2 or not parts[1].strip():
            raise MissingDirectiveArgument(f"{keyword} requires an argument")
        directives.append(Directive(kind, parts[1].strip()))

    if not directives:
        raise EmptyRecipe("recipe contains no directives")
    if directives[0].kind is not DirectiveKind.FROM:
        raise FromNotFirst("first directive must be FROM")
    if sum(1 for d in directives if d.kind is DirectiveKind.FROM) > 1:
        raise MultipleFrom("recipe may contain only one FROM")

    canonical = "\n".join(d.canonical() for d in directives)
    digest = hashlib.sha256(canonical.encode("utf-8")).hexdigest()
    return Recipe(tuple(directives), digest)
