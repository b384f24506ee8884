"""Metrics, experiment runner, hyperparameter tuning, ablation, t-tests.

Rank bookkeeping uses ``None`` as the NOT_FOUND sentinel: the relevant
document was not retrieved within the ranking depth (or the query was empty).
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .codes import CodeLabel
from .corpus import Qrels, TOTRequest
from .index import InvertedIndex
from .retrieval import Bm25Params, QueryStrategy, ScoredHit, formulate_query, search

NOT_FOUND = None

DEFAULT_DEPTH = 1000


def success_at_k(ranks: list[int | None], k: int) -> float:
    """Fraction of requests whose relevant document ranks in the top k."""
    if not ranks:
        raise ValueError("empty rank list")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return sum(1 for r in ranks if r is not NOT_FOUND and r <= k) / len(ranks)


def mrr(ranks: list[int | None]) -> float:
    """Mean reciprocal rank; NOT_FOUND contributes zero."""
    if not ranks:
        raise ValueError("empty rank list")
    return sum(0.0 if r is NOT_FOUND else 1.0 / r for r in ranks) / len(ranks)


@dataclass
class RunResult:
    """Per-request ranks of the relevant document, plus aggregates."""

    request_ids: list[str]
    ranks: list[int | None]
    ks: tuple[int, ...]
    success: dict[int, float]
    mrr: float
    hits: list[list[ScoredHit]] | None = None

    def rank_of(self, request_id: str) -> int | None:
        return self.ranks[self.request_ids.index(request_id)]

    def reciprocal_ranks(self) -> list[float]:
        return [0.0 if r is NOT_FOUND else 1.0 / r for r in self.ranks]


def _rank_of_relevant(hits: list[ScoredHit], relevant_doc: str) -> int | None:
    for h in hits:
        if h.doc_id == relevant_doc:
            return h.rank
    return NOT_FOUND


def run_experiment(
    index: InvertedIndex,
    params: Bm25Params,
    requests: list[TOTRequest],
    qrels: Qrels,
    strategy: QueryStrategy,
    ks: tuple[int, ...] = (10,),
    depth: int = DEFAULT_DEPTH,
    threads: int = 1,
    keep_hits: bool = False,
    use_query_tf: bool = False,
) -> RunResult:
    """Rank the relevant document for every request.

    The ranking is capped at ``depth``; anything deeper is NOT_FOUND, as is an
    empty query. Every request must appear in the qrels.
    """
    for r in requests:
        if r.request_id not in qrels.entries:
            raise KeyError(f"request {r.request_id!r} missing from qrels")

    def one(request: TOTRequest) -> tuple[int | None, list[ScoredHit]]:
        query = formulate_query(request, strategy)
        if not query.strip():
            return NOT_FOUND, []
        hits = search(index, params, query, depth, use_query_tf=use_query_tf)
        return _rank_of_relevant(hits, qrels.relevant_doc(request.request_id)), hits

    if threads > 1 and len(requests) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(one, requests))
    else:
        outcomes = [one(r) for r in requests]
    ranks = [rank for rank, _ in outcomes]
    return RunResult(
        request_ids=[r.request_id for r in requests],
        ranks=ranks,
        ks=tuple(ks),
        success={k: success_at_k(ranks, k) for k in ks},
        mrr=mrr(ranks),
        hits=[hits for _, hits in outcomes] if keep_hits else None,
    )


def split_requests(
    requests: list[TOTRequest], tune_fraction: float, seed: int
) -> tuple[list[TOTRequest], list[TOTRequest]]:
    """Seeded shuffle split into (tune, heldout) request lists."""
    order = list(range(len(requests)))
    random.Random(seed).shuffle(order)
    n_tune = int(len(requests) * tune_fraction)
    tune_idx = sorted(order[:n_tune])
    held_idx = sorted(order[n_tune:])
    return [requests[i] for i in tune_idx], [requests[i] for i in held_idx]


def default_grid() -> list[Bm25Params]:
    """k1 in 0.1..3.0 step 0.1, b in 0.00..1.00 step 0.05: 630 points."""
    return [
        Bm25Params(k1=round(0.1 * i, 1), b=round(0.05 * j, 2))
        for i in range(1, 31)
        for j in range(0, 21)
    ]


def tune(
    index: InvertedIndex,
    requests: list[TOTRequest],
    qrels: Qrels,
    strategy: QueryStrategy,
    grid: list[Bm25Params] | None = None,
    split_seed: int = 0,
    objective: str = "success@10",
    tune_fraction: float = 0.2,
    depth: int = DEFAULT_DEPTH,
    threads: int = 1,
) -> Bm25Params:
    """Grid-search BM25 parameters on a seeded 20% tune split.

    Returns the grid point maximizing the objective on the tune split; ties go
    to the smaller k1, then the smaller b. The heldout 80% is left for the
    caller to evaluate on.
    """
    grid = default_grid() if grid is None else list(grid)
    if not grid:
        raise ValueError("empty parameter grid")
    if objective.startswith("success@"):
        k = int(objective.split("@", 1)[1])
        score_of = lambda rr: rr.success[k]
        ks: tuple[int, ...] = (k,)
    elif objective == "mrr":
        score_of = lambda rr: rr.mrr
        ks = (10,)
    else:
        raise ValueError(f"unknown tuning objective {objective!r}")
    tune_split, _ = split_requests(requests, tune_fraction, split_seed)
    if not tune_split:
        raise ValueError("tune split is empty; too few requests for the split fraction")
    best: Bm25Params | None = None
    best_score = -1.0
    for params in sorted(grid, key=lambda p: (p.k1, p.b)):
        result = run_experiment(
            index, params, tune_split, qrels, strategy, ks=ks, depth=depth, threads=threads
        )
        score = score_of(result)
        if score > best_score:
            best, best_score = params, score
    assert best is not None
    return best


@dataclass
class AblationRow:
    code: CodeLabel
    request_frequency: float  # fraction of all requests containing the code
    subset_size: int
    metric_all: float | None
    metric_ablated: float | None
    absolute_diff: float | None
    relative_diff: float | None
    note: str = ""


@dataclass
class AblationReport:
    metric: str
    strategy_kind: str
    rows: list[AblationRow] = field(default_factory=list)


def codes_above_frequency(
    requests: list[TOTRequest], min_request_frequency: float
) -> list[CodeLabel]:
    """Codes carried by more than the given fraction of requests."""
    counts: dict[CodeLabel, int] = {}
    for r in requests:
        for code in r.codes_present():
            counts[code] = counts.get(code, 0) + 1
    n = len(requests)
    return sorted(
        (c for c, cnt in counts.items() if cnt / n > min_request_frequency),
        key=lambda c: c.name,
    )


def run_ablation(
    index: InvertedIndex,
    params: Bm25Params,
    requests: list[TOTRequest],
    qrels: Qrels,
    codes: list[CodeLabel],
    k: int = 10,
    strategy: QueryStrategy | None = None,
    depth: int = DEFAULT_DEPTH,
    threads: int = 1,
) -> AblationReport:
    """Per-code ablation: drop all sentences carrying the code, re-measure.

    For each code the comparison runs over exactly the requests having at
    least one sentence with that code: success@k with full requests versus
    success@k with those sentences removed.
    """
    strategy = QueryStrategy() if strategy is None else strategy
    baseline = run_experiment(
        index, params, requests, qrels, strategy, ks=(k,), depth=depth, threads=threads
    )
    rank_by_id = dict(zip(baseline.request_ids, baseline.ranks))
    report = AblationReport(metric=f"success@{k}", strategy_kind=strategy.kind.value)
    n_requests = len(requests)
    for code in codes:
        subset = [r for r in requests if r.has_code(code)]
        freq = len(subset) / n_requests if n_requests else 0.0
        if not subset:
            report.rows.append(
                AblationRow(
                    code=code,
                    request_frequency=0.0,
                    subset_size=0,
                    metric_all=None,
                    metric_ablated=None,
                    absolute_diff=None,
                    relative_diff=None,
                    note="no requests contain this code",
                )
            )
            continue
        subset_ranks = [rank_by_id[r.request_id] for r in subset]
        metric_all = success_at_k(subset_ranks, k)
        ablated = run_experiment(
            index,
            params,
            subset,
            qrels,
            strategy.with_ablated({code}),
            ks=(k,),
            depth=depth,
            threads=threads,
        )
        metric_ablated = ablated.success[k]
        absolute = metric_ablated - metric_all
        if metric_all > 0:
            relative = absolute / metric_all
            note = ""
        else:
            relative = None
            note = "relative difference undefined (baseline metric is zero)"
        report.rows.append(
            AblationRow(
                code=code,
                request_frequency=freq,
                subset_size=len(subset),
                metric_all=metric_all,
                metric_ablated=metric_ablated,
                absolute_diff=absolute,
                relative_diff=relative,
                note=note,
            )
        )
    return report


# --- paired t-test ---------------------------------------------------------


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Lentz's continued fraction for the regularized incomplete beta."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return h


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def student_t_cdf(t: float, df: float) -> float:
    """CDF of Student's t distribution with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError(f"degrees of freedom must be positive, got {df}")
    if t == 0.0:
        return 0.5
    x = df / (df + t * t)
    tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x)
    return tail if t < 0 else 1.0 - tail


@dataclass(frozen=True)
class SignificanceResult:
    label_a: str
    label_b: str
    t_statistic: float
    p_value: float
    alpha: float
    corrected_alpha: float
    num_comparisons: int
    note: str = ""

    @property
    def significant(self) -> bool:
        return self.p_value < self.corrected_alpha


def paired_ttest(
    per_query_a: list[float],
    per_query_b: list[float],
    num_comparisons: int,
    alpha: float = 0.01,
    label_a: str = "a",
    label_b: str = "b",
) -> SignificanceResult:
    """Two-sided paired t-test with Bonferroni-corrected alpha.

    Degenerate inputs get total conventions instead of NaN: an all-zero
    difference vector reports p = 1.0; a zero-variance nonzero-mean vector
    reports p = 0.0 and is flagged.
    """
    if len(per_query_a) != len(per_query_b):
        raise ValueError(
            f"length mismatch: {len(per_query_a)} vs {len(per_query_b)} per-query values"
        )
    n = len(per_query_a)
    if n < 2:
        raise ValueError("need at least 2 aligned per-query values")
    if num_comparisons < 1:
        raise ValueError("num_comparisons must be >= 1")
    diffs = [x - y for x, y in zip(per_query_a, per_query_b)]
    mean = sum(diffs) / n
    var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    corrected = alpha / num_comparisons
    if var == 0.0:
        if mean == 0.0:
            return SignificanceResult(
                label_a, label_b, 0.0, 1.0, alpha, corrected, num_comparisons,
                note="identical per-query values",
            )
        t = math.inf if mean > 0 else -math.inf
        return SignificanceResult(
            label_a, label_b, t, 0.0, alpha, corrected, num_comparisons,
            note="degenerate variance",
        )
    t = mean / math.sqrt(var / n)
    p = 2.0 * (1.0 - student_t_cdf(abs(t), n - 1))
    return SignificanceResult(label_a, label_b, t, p, alpha, corrected, num_comparisons)
