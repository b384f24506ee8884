"""Deterministic text pipeline shared by indexing and querying.

One code path serves both documents and queries: tokenize, drop stopwords,
stem. Sentence segmentation lives here too because ablation experiments need
the same splitting rules everywhere.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, NamedTuple

# Word characters minus underscore: split on any other character, keep digits.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

_VOWELS = frozenset("aeiouy")


class Token(NamedTuple):
    """A surface token and the stem it maps to."""

    surface: str
    stem: str


def _load_packaged_lines(filename: str) -> list[str]:
    text = resources.files("totbench.data").joinpath(filename).read_text("utf-8")
    out = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(line)
    return out


def load_stopwords(path=None) -> frozenset[str]:
    """Read a stopword file: one lowercase word per line, '#' comments allowed."""
    if path is None:
        return frozenset(_load_packaged_lines("stopwords.txt"))
    with open(path, encoding="utf-8") as f:
        return frozenset(
            w.strip().lower()
            for w in f
            if w.strip() and not w.lstrip().startswith("#")
        )


def load_stem_exceptions(path=None) -> dict[str, str]:
    """Read the exception lexicon: TSV ``surface<TAB>stem``."""
    if path is None:
        lines = _load_packaged_lines("stem_exceptions.tsv")
    else:
        with open(path, encoding="utf-8") as f:
            lines = [
                ln.strip() for ln in f if ln.strip() and not ln.lstrip().startswith("#")
            ]
    lexicon: dict[str, str] = {}
    for ln in lines:
        try:
            surface, stem = ln.split("\t")
        except ValueError:
            raise ValueError(f"bad exception lexicon line (want surface<TAB>stem): {ln!r}")
        lexicon[surface.strip().lower()] = stem.strip().lower()
    return lexicon


DEFAULT_ABBREVIATIONS = frozenset(
    {
        "mr.", "mrs.", "ms.", "dr.", "prof.", "st.", "jr.", "sr.", "vs.",
        "etc.", "e.g.", "i.e.", "inc.", "ltd.", "co.", "corp.", "ave.",
        "blvd.", "dept.", "est.", "fig.", "gen.", "gov.", "hon.", "mt.",
        "op.", "pp.", "rev.", "sgt.", "capt.", "lt.", "col.", "maj.",
        "approx.", "misc.", "min.", "max.", "vol.", "feat.",
    }
)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on any non-alphanumeric character.

    Pure-digit tokens are kept ("1986" can match plot text); empty tokens are
    dropped. Hyphens and apostrophes split ("Canyon-esque" -> two tokens).
    """
    return _TOKEN_RE.findall(text.lower())


def remove_stopwords(tokens: Iterable[str], stopword_set: frozenset[str]) -> list[str]:
    """Order-preserving filter against the stopword set."""
    return [t for t in tokens if t not in stopword_set]


# Words ending in "-ie" whose inflections end "-ies"/"-ied"; the suffix rules
# restore "-ie" for these instead of "-y".
_IE_WORDS = frozenset(
    {
        "die", "tie", "lie", "pie", "movie", "calorie", "cookie", "zombie",
        "genie", "goalie", "birdie", "prairie", "rookie", "hippie", "junkie",
        "veggie", "auntie", "boogie", "collie", "laddie", "lassie", "newbie",
        "oldie", "pixie", "selfie", "smoothie", "softie", "talkie", "walkie",
        "yuppie", "brownie", "cutie", "doggie", "budgie", "belie", "sortie",
        "hoodie", "foodie", "groupie", "townie",
    }
)

# -es endings that drop the whole "es" rather than just the "s".
_ES_DROP_BOTH = ("sses", "shes", "ches", "xes", "zzes")


def _has_vowel(word: str) -> bool:
    return any(ch in _VOWELS for ch in word)


def _is_cons(word: str, i: int) -> bool:
    ch = word[i]
    if ch in "aeiou":
        return False
    if ch == "y":
        return i == 0 or not _is_cons(word, i - 1)
    return True


def _measure(word: str) -> int:
    """Count vowel-consonant alternations: m in [C](VC)^m[V]."""
    m = 0
    prev_cons = True
    seen_vowel = False
    for i in range(len(word)):
        cons = _is_cons(word, i)
        if seen_vowel and cons and not prev_cons:
            m += 1
            seen_vowel = False
        if not cons:
            seen_vowel = True
        prev_cons = cons
    return m


def _ends_cvc(word: str) -> bool:
    if len(word) < 3:
        return False
    if word[-1] in "wxy":
        return False
    return (
        _is_cons(word, len(word) - 3)
        and not _is_cons(word, len(word) - 2)
        and _is_cons(word, len(word) - 1)
    )


def _ends_double_cons(word: str) -> bool:
    return (
        len(word) >= 2
        and word[-1] == word[-2]
        and word[-1] not in "aeiou"
        and word[-1] not in "lsz"
    )


def _restore_root(root: str) -> str:
    """Repair a root left after stripping -ed/-ing: undouble or restore 'e'."""
    if _ends_double_cons(root):
        return root[:-1]
    last = root[-1]
    if last in "cvuz":
        return root + "e"
    if last == "g" and len(root) >= 2 and root[-2] != "n":
        return root + "e"
    if _ends_cvc(root) and _measure(root) == 1:
        return root + "e"
    return root


class KrovetzLightStemmer:
    """Light inflectional stemmer: plurals, past tense, present participles.

    An exception lexicon is consulted before the rules and after each pass for
    spelling repair. The rule pass is repeated to a fixed point (bounded) so
    stacked suffixes cannot leave a stemmable residue, which makes the stemmer
    idempotent for arbitrary input.
    """

    MIN_STEM = 2
    MAX_PASSES = 4

    def __init__(self, exceptions: dict[str, str] | None = None):
        self.exceptions = dict(load_stem_exceptions() if exceptions is None else exceptions)
        self._cache: dict[str, str] = {}

    def __call__(self, word: str) -> str:
        return self.stem(word)

    def stem(self, word: str) -> str:
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        result = word
        for _ in range(self.MAX_PASSES):
            step = self._pass(result)
            if step == result:
                break
            result = step
        self._cache[word] = result
        return result

    def _pass(self, word: str) -> str:
        hit = self.exceptions.get(word)
        if hit is not None:
            return hit
        if len(word) < 3:
            return word
        out = word
        for rule in (self._plural, self._past, self._participle):
            candidate = rule(out)
            if candidate != out:
                repaired = self.exceptions.get(candidate)
                if repaired is not None:
                    return repaired
                out = candidate
        if len(out) < self.MIN_STEM:
            return word
        return out

    def _plural(self, word: str) -> str:
        if not word.endswith("s") or len(word) < 4:
            return word
        if word.endswith("ies"):
            if word[:-1] in _IE_WORDS:
                return word[:-1]
            return word[:-3] + "y"
        if word.endswith("es"):
            if word.endswith(_ES_DROP_BOTH):
                return word[:-2]
            if word.endswith("oes"):
                return word[:-2] if len(word) >= 6 else word[:-1]
            return word[:-1]
        if word.endswith(("ss", "us", "is")):
            return word
        return word[:-1]

    def _past(self, word: str) -> str:
        if len(word) < 4:
            return word
        if word.endswith("ied"):
            if word[:-1] in _IE_WORDS:
                return word[:-1]
            return word[:-3] + "y"
        if word.endswith("eed"):
            return word[:-1] if _measure(word[:-3]) > 0 else word
        if word.endswith("ed") and _has_vowel(word[:-2]):
            return _restore_root(word[:-2])
        return word

    def _participle(self, word: str) -> str:
        if len(word) >= 5 and word.endswith("ing") and _has_vowel(word[:-3]):
            return _restore_root(word[:-3])
        return word


def _identity_stem(word: str) -> str:
    return word


STEMMERS = ("krovetz-light", "identity")


@dataclass(frozen=True)
class PipelineConfig:
    """Immutable pipeline settings: stopwords, stemmer choice, abbreviations."""

    stopword_set: frozenset[str]
    stemmer: str = "krovetz-light"
    abbreviation_set: frozenset[str] = DEFAULT_ABBREVIATIONS
    stem_exceptions: tuple[tuple[str, str], ...] | None = None

    def __post_init__(self):
        if self.stemmer not in STEMMERS:
            raise ValueError(f"unknown stemmer {self.stemmer!r}; expected one of {STEMMERS}")
        for abbr in self.abbreviation_set:
            if not abbr.endswith("."):
                raise ValueError(f"abbreviation entries must end with a period: {abbr!r}")

    @classmethod
    def default(cls) -> "PipelineConfig":
        return cls(stopword_set=load_stopwords())

    @classmethod
    def bare(cls) -> "PipelineConfig":
        """No stopwords, no stemming: useful for small worked examples."""
        return cls(stopword_set=frozenset(), stemmer="identity")

    def stem_fn(self):
        if self.stemmer == "identity":
            return _identity_stem
        key = self.stem_exceptions
        stemmer = _STEMMER_CACHE.get(key)
        if stemmer is None:
            exceptions = dict(key) if key is not None else None
            stemmer = KrovetzLightStemmer(exceptions)
            _STEMMER_CACHE[key] = stemmer
        return stemmer


_STEMMER_CACHE: dict = {}


def to_tokens(text: str, config: PipelineConfig) -> list[Token]:
    """Tokenize, filter stopwords, stem; keep (surface, stem) pairs."""
    stem = config.stem_fn()
    out = []
    for surface in tokenize(text):
        if surface in config.stopword_set:
            continue
        s = stem(surface)
        if s in config.stopword_set:
            # A stem may fall back into the stopword set ("likes" -> "like");
            # output must stay stopword-free.
            continue
        out.append(Token(surface, s))
    return out


def analyze(text: str, config: PipelineConfig) -> list[str]:
    """The full pipeline: tokenize -> remove stopwords -> stem.

    Documents and queries both go through this function, so index-side and
    query-side analysis can never diverge.
    """
    return [t.stem for t in to_tokens(text, config)]


_SENT_PUNCT = frozenset(".!?")


def _trailing_word(text: str, punct_end: int) -> str:
    """The whitespace-delimited chunk ending at punct_end (inclusive)."""
    start = punct_end
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    return text[start : punct_end + 1]


def segment_spans(text: str, abbreviation_set: frozenset[str] = DEFAULT_ABBREVIATIONS) -> list[tuple[int, int]]:
    """Character spans of sentences in ``text`` (whitespace excluded).

    A run of '.', '!' or '?' ends a sentence when followed by whitespace and
    an uppercase letter, or by end of text. No split after abbreviation-set
    entries, after single-letter initials, or between digits ("3.5").
    """
    spans: list[tuple[int, int]] = []
    n = len(text)
    start = 0
    i = 0
    while i < n:
        ch = text[i]
        if ch not in _SENT_PUNCT:
            i += 1
            continue
        run_end = i
        while run_end + 1 < n and text[run_end + 1] in _SENT_PUNCT:
            run_end += 1
        boundary = False
        if run_end == n - 1:
            boundary = True
        else:
            j = run_end + 1
            if text[j].isspace():
                while j < n and text[j].isspace():
                    j += 1
                if j < n and text[j].isupper():
                    boundary = True
        if boundary and ch == "." and run_end == i:
            if 0 < i < n - 1 and text[i - 1].isdigit() and text[i + 1].isdigit():
                boundary = False
            else:
                word = _trailing_word(text, i).lower()
                if word in abbreviation_set:
                    boundary = False
                elif len(word) == 2 and word[0].isalpha():
                    boundary = False  # single-letter initial, "J. Smith"
        if boundary:
            a, b = start, run_end + 1
            while a < b and text[a].isspace():
                a += 1
            if a < b:
                spans.append((a, b))
            start = run_end + 1
        i = run_end + 1
    a, b = start, n
    while a < b and text[a].isspace():
        a += 1
    while b > a and text[b - 1].isspace():
        b -= 1
    if a < b:
        spans.append((a, b))
    return spans


def segment_sentences(text: str, abbreviation_set: frozenset[str] = DEFAULT_ABBREVIATIONS) -> list[str]:
    """Split text into sentence strings; substrings of the input, trimmed."""
    return [text[a:b] for a, b in segment_spans(text, abbreviation_set)]


def normalize_whitespace(text: str) -> str:
    return " ".join(text.split())
