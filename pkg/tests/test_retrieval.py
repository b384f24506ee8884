import math
import random

import pytest

from totbench.codes import get_code
from totbench.corpus import Document, Sentence, TOTRequest
from totbench.index import build_index
from totbench.retrieval import (
    Bm25Params,
    QueryStrategy,
    StrategyKind,
    bm25_score,
    formulate_query,
    search,
    trec_run_lines,
)
from totbench.textproc import PipelineConfig

from oracles import naive_bm25_scores, random_query, random_token_corpus


@pytest.fixture
def toy_index():
    docs = [
        Document("d1", "", "cat sat mat"),
        Document("d2", "", "dog sat log"),
        Document("d3", "", "cat cat dog"),
    ]
    return build_index(docs, PipelineConfig.bare())


def token_docs_to_index(doc_tokens):
    docs = [Document(f"d{i}", "", " ".join(tokens)) for i, tokens in enumerate(doc_tokens)]
    return build_index(docs, PipelineConfig.bare())


# --- params ------------------------------------------------------------------


def test_params_validation():
    Bm25Params(k1=0.0, b=0.0)
    Bm25Params(k1=3.0, b=1.0)
    with pytest.raises(ValueError):
        Bm25Params(k1=-0.1, b=0.5)
    with pytest.raises(ValueError):
        Bm25Params(k1=1.0, b=1.1)


def test_strategy_rejects_title_with_ablation():
    with pytest.raises(ValueError):
        QueryStrategy(kind=StrategyKind.TITLE, ablated_codes=frozenset({get_code("Social")}))


# --- bm25_score -----------------------------------------------------------------


def test_toy_scores_match_hand_derivation(toy_index):
    scores = bm25_score(toy_index, Bm25Params(k1=1.2, b=0.75), ["cat"])
    assert set(scores) == {0, 2}
    idf = math.log((3 - 2 + 0.5) / (2 + 0.5) + 1.0)
    assert scores[0] == pytest.approx(idf, abs=1e-12)
    assert scores[2] == pytest.approx(idf * (2 * 2.2) / (2 + 1.2), abs=1e-12)
    assert round(scores[2], 4) == 0.6463
    assert round(scores[0], 4) == 0.4700


def test_out_of_vocabulary_query_empty_result(toy_index):
    assert bm25_score(toy_index, Bm25Params(), ["unicorn", "rainbow"]) == {}


def test_b_zero_removes_length_effect():
    idx = token_docs_to_index([["cat"] * 2 + ["filler"] * 20, ["cat"] * 2])
    scores = bm25_score(idx, Bm25Params(k1=1.2, b=0.0), ["cat"])
    assert scores[0] == pytest.approx(scores[1], abs=1e-12)


def test_query_multiplicity_ignored_by_default(toy_index):
    params = Bm25Params()
    once = bm25_score(toy_index, params, ["cat"])
    thrice = bm25_score(toy_index, params, ["cat", "cat", "cat"])
    assert once == thrice


def test_query_multiplicity_weighting_flag(toy_index):
    params = Bm25Params()
    once = bm25_score(toy_index, params, ["cat"])
    thrice = bm25_score(toy_index, params, ["cat", "cat", "cat"], use_query_tf=True)
    for ordinal, value in once.items():
        assert thrice[ordinal] == pytest.approx(3 * value, abs=1e-12)


def test_scores_positive_and_idf_positive_over_df_range():
    # df from 1 to N: idf must stay positive under the +1 form.
    docs = [["common", f"unique{i}"] for i in range(10)]
    idx = token_docs_to_index(docs)
    scores = bm25_score(idx, Bm25Params(), ["common"])
    assert len(scores) == 10
    assert all(v > 0 for v in scores.values())


def test_tf_monotonicity():
    idx = token_docs_to_index([["cat", "pad"], ["cat", "cat", "pad"], ["cat", "cat", "cat", "pad"]])
    scores = bm25_score(idx, Bm25Params(k1=1.2, b=0.0), ["cat"])
    assert scores[0] < scores[1] < scores[2]


def test_oracle_equivalence_small_random():
    rng = random.Random(2024)
    for _ in range(60):
        doc_tokens = random_token_corpus(rng)
        idx = token_docs_to_index(doc_tokens)
        params = Bm25Params(k1=rng.uniform(0, 3), b=rng.uniform(0, 1))
        query = random_query(rng, doc_tokens)
        engine = bm25_score(idx, params, query)
        oracle = naive_bm25_scores(doc_tokens, query, params.k1, params.b)
        assert set(engine) == set(oracle)
        for ordinal in oracle:
            assert engine[ordinal] == pytest.approx(oracle[ordinal], abs=1e-9)


# --- search ---------------------------------------------------------------------


def test_search_top_k(toy_index):
    hits = search(toy_index, Bm25Params(k1=1.2, b=0.75), "cat", 10)
    assert [(h.doc_id, h.rank) for h in hits] == [("d3", 1), ("d1", 2)]


def test_search_k_one(toy_index):
    hits = search(toy_index, Bm25Params(k1=1.2, b=0.75), "cat", 1)
    assert [h.doc_id for h in hits] == ["d3"]


def test_search_invalid_k(toy_index):
    with pytest.raises(ValueError):
        search(toy_index, Bm25Params(), "cat", 0)


def test_search_tie_break_by_ordinal():
    idx = token_docs_to_index([["twin", "pad"], ["twin", "pad"], ["twin", "pad"]])
    for _ in range(2):
        hits = search(idx, Bm25Params(), "twin", 2)
        assert [h.doc_id for h in hits] == ["d0", "d1"]


def test_search_boundary_tie_prefers_lower_ordinal():
    # d0 scores higher; d1..d3 tie exactly; k=2 must pick d1, not a later twin.
    idx = token_docs_to_index(
        [["twin", "twin", "pad"], ["twin", "pad"], ["twin", "pad"], ["twin", "pad"]]
    )
    hits = search(idx, Bm25Params(b=0.0), "twin", 2)
    assert [h.doc_id for h in hits] == ["d0", "d1"]


def test_search_uses_index_pipeline():
    docs = [Document("d1", "", "Dogs were running in the park.")]
    idx = build_index(docs, PipelineConfig.default())
    hits = search(idx, Bm25Params(), "a dog runs", 5)
    assert [h.doc_id for h in hits] == ["d1"]


def test_trec_run_lines(toy_index):
    hits = search(toy_index, Bm25Params(k1=1.2, b=0.75), "cat", 10)
    lines = trec_run_lines("r7", hits, "tagx")
    assert lines[0].split() == ["r7", "Q0", "d3", "1", f"{hits[0].score:.6f}", "tagx"]


# --- query formulation ------------------------------------------------------------


def make_request():
    char, social, unc = get_code("Character"), get_code("Social"), get_code("Uncertainty")
    sentences = (
        Sentence(0, "A tall man fights bears.", frozenset({char})),
        Sentence(1, "Thanks for any help.", frozenset({social})),
        Sentence(2, "Maybe it was French.", frozenset({unc})),
    )
    return TOTRequest(
        request_id="r1",
        title="weird bear movie",
        description="A tall man fights bears. Thanks for any help. Maybe it was French.",
        sentences=sentences,
        answer_catalog_id="tt0000001",
    )


def test_formulate_title():
    assert formulate_query(make_request(), QueryStrategy(kind=StrategyKind.TITLE)) == "weird bear movie"


def test_formulate_description_with_ablation():
    strategy = QueryStrategy(
        kind=StrategyKind.DESCRIPTION, ablated_codes=frozenset({get_code("Social")})
    )
    assert formulate_query(make_request(), strategy) == (
        "A tall man fights bears. Maybe it was French."
    )


def test_formulate_empty_ablation_is_identity():
    strategy = QueryStrategy(kind=StrategyKind.DESCRIPTION)
    assert formulate_query(make_request(), strategy) == make_request().description


def test_formulate_title_description():
    strategy = QueryStrategy(kind=StrategyKind.TITLE_DESCRIPTION)
    assert formulate_query(make_request(), strategy) == (
        "weird bear movie A tall man fights bears. Thanks for any help. Maybe it was French."
    )


def test_formulate_all_sentences_ablated_gives_empty():
    request = make_request()
    codes = frozenset({get_code("Character"), get_code("Social"), get_code("Uncertainty")})
    strategy = QueryStrategy(kind=StrategyKind.DESCRIPTION, ablated_codes=codes)
    assert formulate_query(request, strategy) == ""


def test_sentence_dropped_if_any_code_ablated():
    char, unc = get_code("Character"), get_code("Uncertainty")
    sentences = (
        Sentence(0, "Hero maybe wore red.", frozenset({char, unc})),
        Sentence(1, "Set in Paris.", frozenset({char})),
    )
    request = TOTRequest("r1", "t", "Hero maybe wore red. Set in Paris.", sentences, "tt0000001")
    strategy = QueryStrategy(kind=StrategyKind.DESCRIPTION, ablated_codes=frozenset({unc}))
    assert formulate_query(request, strategy) == "Set in Paris."


def test_empty_ablation_ranking_identical(toy_index):
    request = TOTRequest(
        "r1",
        "cat",
        "cat cat dog.",
        (Sentence(0, "cat cat dog.", frozenset({get_code("Character")})),),
        "tt0000001",
    )
    base = search(toy_index, Bm25Params(), formulate_query(request, QueryStrategy()), 10)
    strat = QueryStrategy().with_ablated(set())
    again = search(toy_index, Bm25Params(), formulate_query(request, strat), 10)
    assert base == again
