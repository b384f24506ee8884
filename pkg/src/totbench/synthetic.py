"""Synthetic corpus/request generator for desk-scale experiments.

The construction plants a recoverable signal: every request's movie-content
sentences quote a contiguous slice of its answer document's plot, while
context and social sentences draw on vocabularies disjoint from the corpus.
Ablating content codes therefore destroys retrieval, and ablating context or
social codes leaves rankings untouched; generated datasets let every
experiment in the harness run without any external data.

Generation is fully driven by one seeded RNG: the same seed yields
byte-identical files.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from .codes import get_code
from .corpus import (
    Document,
    Qrels,
    Sentence,
    TOTRequest,
    save_corpus,
    save_qrels,
    save_requests,
)
from .textproc import load_stem_exceptions, load_stopwords

DEFAULT_SEED = 7
DEFAULT_NUM_DOCS = 200
DEFAULT_NUM_REQUESTS = 50

PROFILES = ("default", "context-heavy")

_CHARACTER = get_code("Character")
_SCENE = get_code("Scene")
_OBJECT = get_code("Object")
_UNCERTAINTY = get_code("Uncertainty")
_TEMPORAL = get_code("Temporal context")
_MEDIUM = get_code("Physical medium")
_SOCIAL = get_code("Social")

# Request-level inclusion rates for the planted codes (content codes are
# stamped on every quoting sentence of a request that carries them).
_CONTENT_RATES = ((_CHARACTER, 0.98), (_SCENE, 0.90), (_OBJECT, 0.82))
_UNCERTAINTY_SENTENCE_RATE = 0.5
_CONTEXT_REQUEST_RATE = 0.65
_SOCIAL_REQUEST_RATE = 0.52

_SOCIAL_SENTENCES = (
    "Please help me out with this one.",
    "Thanks in advance for any help.",
    "Any help would be hugely appreciated.",
    "Hopefully somebody here recognizes this.",
    "Thank you so much everyone.",
)

_TITLE_PHRASES = (
    "Please help me find this film",
    "Looking for an old film",
    "Cannot recall this title",
    "Help identifying a film",
    "What is this one called",
)

_CONS = "bcdfghjklmnprtv"
_VOWS = "aeiou"


@dataclass
class SyntheticDataset:
    documents: list[Document]
    requests: list[TOTRequest]
    qrels: Qrels


def _pseudo_word(rng: random.Random, syllables: int, prefix: str = "") -> str:
    return prefix + "".join(
        rng.choice(_CONS) + rng.choice(_VOWS) for _ in range(syllables)
    )


def _make_vocab(rng: random.Random, size: int, prefix: str = "") -> list[str]:
    """Pipeline-stable pseudo-words: not stopwords, no stemmable suffix."""
    stopwords = load_stopwords()
    exceptions = load_stem_exceptions()
    vocab: list[str] = []
    seen: set[str] = set()
    while len(vocab) < size:
        word = _pseudo_word(rng, rng.randint(2, 4), prefix)
        if word in seen or word in stopwords or word in exceptions:
            continue
        if word.endswith(("s", "ed", "ing")):
            continue
        seen.add(word)
        vocab.append(word)
    return vocab


def _context_sentence(rng: random.Random, context_vocab: list[str]) -> str:
    words = [rng.choice(context_vocab) for _ in range(rng.randint(5, 9))]
    return (" ".join(words)).capitalize() + "."


def generate_synthetic(
    seed: int = DEFAULT_SEED,
    num_docs: int = DEFAULT_NUM_DOCS,
    num_requests: int = DEFAULT_NUM_REQUESTS,
    profile: str = "default",
) -> SyntheticDataset:
    if num_requests < 1 or num_docs < num_requests:
        raise ValueError("need num_docs >= num_requests >= 1")
    if profile not in PROFILES:
        raise ValueError(f"unknown noise profile {profile!r}; expected one of {PROFILES}")
    rng = random.Random(seed)
    plot_vocab = _make_vocab(rng, max(400, num_docs * 4))
    title_vocab = _make_vocab(rng, max(100, num_docs))
    context_vocab = _make_vocab(rng, 120, prefix="x")

    documents: list[Document] = []
    for i in range(num_docs):
        n_words = rng.randint(35, 60)
        plot_words = [rng.choice(plot_vocab) for _ in range(n_words)]
        documents.append(
            Document(
                doc_id=f"d{i + 1:05d}",
                title=" ".join(rng.choice(title_vocab) for _ in range(2)).title(),
                plot=" ".join(plot_words).capitalize() + ".",
                catalog_id=f"tt{i + 1:07d}",
            )
        )

    answer_ordinals = rng.sample(range(num_docs), num_requests)
    context_heavy = profile == "context-heavy"

    requests: list[TOTRequest] = []
    entries: dict[str, str] = {}
    for j, ordinal in enumerate(answer_ordinals):
        answer = documents[ordinal]
        plot_words = answer.plot.rstrip(".").lower().split()
        content_codes = frozenset(
            code for code, rate in _CONTENT_RATES if rng.random() < rate
        ) or frozenset({_CHARACTER})

        sentences: list[Sentence] = []
        for _ in range(rng.randint(2, 3)):
            span = rng.randint(6, 10)
            start = rng.randint(0, max(0, len(plot_words) - span))
            quote = plot_words[start : start + span]
            codes = set(content_codes)
            if rng.random() < _UNCERTAINTY_SENTENCE_RATE:
                codes.add(_UNCERTAINTY)
            sentences.append(
                Sentence(
                    index=len(sentences),
                    text=(" ".join(quote)).capitalize() + ".",
                    codes=frozenset(codes),
                )
            )
        n_context = rng.randint(2, 3) if context_heavy else (
            1 if rng.random() < _CONTEXT_REQUEST_RATE else 0
        )
        for _ in range(n_context):
            code = _TEMPORAL if rng.random() < 0.6 else _MEDIUM
            sentences.append(
                Sentence(
                    index=len(sentences),
                    text=_context_sentence(rng, context_vocab),
                    codes=frozenset({code}),
                )
            )
        if rng.random() < _SOCIAL_REQUEST_RATE:
            sentences.append(
                Sentence(
                    index=len(sentences),
                    text=rng.choice(_SOCIAL_SENTENCES),
                    codes=frozenset({_SOCIAL}),
                )
            )
        request_id = f"r{j + 1:04d}"
        requests.append(
            TOTRequest(
                request_id=request_id,
                title=rng.choice(_TITLE_PHRASES),
                description=" ".join(s.text for s in sentences),
                sentences=tuple(sentences),
                answer_catalog_id=answer.catalog_id,
            )
        )
        entries[request_id] = answer.doc_id

    return SyntheticDataset(documents=documents, requests=requests, qrels=Qrels(entries))


def write_synthetic(dataset: SyntheticDataset, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "corpus": out / "corpus.jsonl",
        "requests": out / "requests.jsonl",
        "qrels": out / "qrels.txt",
    }
    save_corpus(dataset.documents, paths["corpus"])
    save_requests(dataset.requests, paths["requests"])
    save_qrels(dataset.qrels, paths["qrels"])
    return paths
