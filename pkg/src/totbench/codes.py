"""Sentence-annotation code taxonomy for tip-of-the-tongue movie requests.

The taxonomy is fixed: 34 codes across seven categories. Codes describe what
a request sentence talks about (the movie itself, the viewing context, a
previous search attempt, a social nicety) or how it talks (uncertainty,
opinion/emotion, relative comparison). Codes are not mutually exclusive.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum


class Category(str, Enum):
    MOVIE = "Movie"
    CONTEXT = "Context"
    PREVIOUS_SEARCH = "PreviousSearch"
    SOCIAL = "Social"
    UNCERTAINTY = "Uncertainty"
    OPINION_EMOTION = "OpinionEmotion"
    RELATIVE_COMPARISON = "RelativeComparison"


@dataclass(frozen=True)
class CodeLabel:
    """One taxonomy code: a canonical display name plus its category."""

    name: str
    category: Category

    def __str__(self) -> str:
        return self.name


_WS_RE = re.compile(r"\s+")


def canonical_key(name: str) -> str:
    """Case-insensitive canonical form with internal whitespace collapsed."""
    return _WS_RE.sub(" ", name.strip()).lower()


_MOVIE_CODES = (
    "Character",
    "Scene",
    "Object",
    "Category",
    "Location type",
    "Plot summary",
    "Release date",
    "Genre/tone",
    "Visual style",
    "Language",
    "Regional origin",
    "Specific location",
    "Quote/dialogue",
    "Real person",
    "Camera angle",
    "Singular timeframe",
    "Multiple timeframe",
    "Fictional person",
    "Actor nationality",
    "Target audience",
    "Compares music",
    "Specific music",
)

_CONTEXT_CODES = (
    "Temporal context",
    "Physical medium",
    "Cross media",
    "Contextual witness",
    "Physical location",
    "Concurrent events",
)

_OTHER_CODES = (
    ("Previous search", Category.PREVIOUS_SEARCH),
    ("Social", Category.SOCIAL),
    ("Uncertainty", Category.UNCERTAINTY),
    ("Opinion", Category.OPINION_EMOTION),
    ("Emotion", Category.OPINION_EMOTION),
    ("Relative comparison", Category.RELATIVE_COMPARISON),
)

TAXONOMY: tuple[CodeLabel, ...] = tuple(
    [CodeLabel(n, Category.MOVIE) for n in _MOVIE_CODES]
    + [CodeLabel(n, Category.CONTEXT) for n in _CONTEXT_CODES]
    + [CodeLabel(n, c) for n, c in _OTHER_CODES]
)

_BY_KEY: dict[str, CodeLabel] = {canonical_key(c.name): c for c in TAXONOMY}

assert len(TAXONOMY) == 34 and len(_BY_KEY) == 34


class UnknownCodeError(ValueError):
    """Raised when a code name does not canonicalize to a taxonomy entry."""


def get_code(name: str) -> CodeLabel:
    """Resolve a (possibly sloppily cased/spaced) name to its taxonomy code."""
    try:
        return _BY_KEY[canonical_key(name)]
    except KeyError:
        raise UnknownCodeError(f"unknown annotation code: {name!r}") from None


def is_known_code(name: str) -> bool:
    return canonical_key(name) in _BY_KEY


def codes_in_category(category: Category) -> tuple[CodeLabel, ...]:
    return tuple(c for c in TAXONOMY if c.category is category)
