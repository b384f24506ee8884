"""Okapi BM25 scoring, query formulation strategies, and code ablation.

The idf uses the always-positive form ln((N - df + 0.5) / (df + 0.5) + 1), so
scores are non-negative for every document frequency. Query term multiplicity
is ignored by default (each unique term counted once); ``use_query_tf``
weights terms by their query count instead.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .codes import CodeLabel
from .corpus import TOTRequest
from .index import InvertedIndex
from .textproc import analyze


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if self.k1 < 0:
            raise ValueError(f"k1 must be non-negative, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must be in [0, 1], got {self.b}")


class StrategyKind(str, Enum):
    TITLE = "title"
    DESCRIPTION = "desc"
    TITLE_DESCRIPTION = "both"


@dataclass(frozen=True)
class QueryStrategy:
    """How to turn a request into query text, optionally dropping coded sentences."""

    kind: StrategyKind = StrategyKind.TITLE_DESCRIPTION
    ablated_codes: frozenset[CodeLabel] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.kind is StrategyKind.TITLE and self.ablated_codes:
            raise ValueError("ablated codes have no effect on a title-only strategy")

    def with_ablated(self, codes) -> "QueryStrategy":
        return QueryStrategy(kind=self.kind, ablated_codes=frozenset(codes))


@dataclass(frozen=True)
class ScoredHit:
    doc_id: str
    score: float
    rank: int  # 1-based


def formulate_query(request: TOTRequest, strategy: QueryStrategy) -> str:
    """Build query text; a sentence is dropped if it carries any ablated code."""
    if strategy.kind is StrategyKind.TITLE:
        return request.title
    ablated = strategy.ablated_codes
    kept = [s.text for s in request.sentences if not (s.codes & ablated)]
    description = " ".join(kept)
    if strategy.kind is StrategyKind.DESCRIPTION:
        return description
    return (request.title + " " + description).strip()


def idf(index: InvertedIndex, term: str) -> float:
    df = index.stats.df.get(term)
    if df is None:
        return 0.0
    n = index.stats.num_docs
    return math.log((n - df + 0.5) / (df + 0.5) + 1.0)


def _score_vector(
    index: InvertedIndex,
    params: Bm25Params,
    query_stems,
    use_query_tf: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Accumulate scores over all documents; returns (scores, touched ordinals)."""
    n = index.stats.num_docs
    scores = np.zeros(n, dtype=np.float64)
    touched = np.zeros(n, dtype=bool)
    avgdl = index.stats.avgdl
    dl = index.stats.doc_lengths
    if avgdl > 0:
        norm = params.k1 * (1.0 - params.b + params.b * (dl / avgdl))
    else:
        norm = np.full(n, params.k1 * (1.0 - params.b))
    counts = Counter(query_stems)
    for term, qtf in counts.items():
        posting = index.postings.get(term)
        if posting is None:
            continue
        ords, tfs = posting
        weight = float(qtf) if use_query_tf else 1.0
        tf = tfs.astype(np.float64)
        contrib = weight * idf(index, term) * tf * (params.k1 + 1.0) / (tf + norm[ords])
        scores[ords] += contrib
        touched[ords] = True
    return scores, np.nonzero(touched)[0]


def bm25_score(
    index: InvertedIndex,
    params: Bm25Params,
    query_stems,
    use_query_tf: bool = False,
) -> dict[int, float]:
    """Score every document containing at least one query term.

    Documents with score zero (no query term) are omitted. Terms absent from
    the index contribute nothing.
    """
    scores, touched = _score_vector(index, params, query_stems, use_query_tf)
    return {int(o): float(scores[o]) for o in touched}


def search(
    index: InvertedIndex,
    params: Bm25Params,
    query_text: str,
    k: int,
    use_query_tf: bool = False,
) -> list[ScoredHit]:
    """Top-k documents for a query string, analyzed with the index pipeline.

    Ties are broken by ordinal ascending, so rankings are deterministic.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    stems = analyze(query_text, index.pipeline)
    scores, touched = _score_vector(index, params, stems, use_query_tf)
    if len(touched) == 0:
        return []
    cand_scores = scores[touched]
    if len(touched) > k:
        # Keep everything >= the kth largest score so boundary ties are
        # resolved by ordinal, not by partition order.
        kth = np.partition(cand_scores, len(cand_scores) - k)[len(cand_scores) - k]
        keep = cand_scores >= kth
        touched = touched[keep]
        cand_scores = cand_scores[keep]
    order = np.lexsort((touched, -cand_scores))[:k]
    hits = []
    for rank, idx_ in enumerate(order, start=1):
        ordinal = int(touched[idx_])
        hits.append(ScoredHit(doc_id=index.doc_ids[ordinal], score=float(cand_scores[idx_]), rank=rank))
    return hits


def trec_run_lines(request_id: str, hits: list[ScoredHit], run_tag: str) -> list[str]:
    """TREC run format: ``request_id Q0 doc_id rank score run_tag``."""
    return [
        f"{request_id} Q0 {h.doc_id} {h.rank} {h.score:.6f} {run_tag}" for h in hits
    ]
