import pytest

from totbench.codes import Category, get_code
from totbench.corpus import load_corpus, load_qrels, load_requests
from totbench.evaluation import run_experiment, run_ablation
from totbench.index import build_index
from totbench.retrieval import Bm25Params, QueryStrategy
from totbench.synthetic import generate_synthetic, write_synthetic
from totbench.textproc import PipelineConfig, analyze


def test_same_seed_same_bytes(tmp_path):
    a = write_synthetic(generate_synthetic(seed=7, num_docs=30, num_requests=10), tmp_path / "a")
    b = write_synthetic(generate_synthetic(seed=7, num_docs=30, num_requests=10), tmp_path / "b")
    for key in a:
        assert a[key].read_bytes() == b[key].read_bytes()


def test_different_seed_different_data(tmp_path):
    a = write_synthetic(generate_synthetic(seed=1, num_docs=30, num_requests=10), tmp_path / "a")
    b = write_synthetic(generate_synthetic(seed=2, num_docs=30, num_requests=10), tmp_path / "b")
    assert a["corpus"].read_bytes() != b["corpus"].read_bytes()


def test_files_load_cleanly_and_join(tmp_path):
    paths = write_synthetic(generate_synthetic(seed=5, num_docs=40, num_requests=15), tmp_path)
    docs = load_corpus(paths["corpus"])
    requests, report = load_requests(paths["requests"])
    qrels = load_qrels(paths["qrels"])
    assert len(docs) == 40
    assert len(requests) == 15
    assert report.zero_code_sentences == []
    assert len(qrels) == 15
    doc_ids = {d.doc_id for d in docs}
    assert all(doc_id in doc_ids for doc_id in qrels.entries.values())


def test_planted_signal_high_success():
    ds = generate_synthetic(seed=7, num_docs=50, num_requests=20)
    index = build_index(ds.documents, PipelineConfig.default())
    result = run_experiment(index, Bm25Params(), ds.requests, ds.qrels, QueryStrategy(), ks=(10,))
    assert result.success[10] > 0.9


def test_content_sentences_quote_answer_plot():
    ds = generate_synthetic(seed=7, num_docs=30, num_requests=10)
    docs = {d.catalog_id: d for d in ds.documents}
    movie_codes = {c for c in (get_code("Character"), get_code("Scene"), get_code("Object"))}
    for request in ds.requests:
        plot = docs[request.answer_catalog_id].plot.lower()
        for s in request.sentences:
            if s.codes & movie_codes:
                assert s.text.lower().rstrip(".") in plot


def test_context_and_social_vocab_out_of_corpus():
    ds = generate_synthetic(seed=7, num_docs=30, num_requests=10)
    cfg = PipelineConfig.default()
    corpus_terms = set()
    for d in ds.documents:
        corpus_terms.update(analyze(d.title + " " + d.plot, cfg))
    noise_cats = {Category.CONTEXT, Category.SOCIAL}
    for request in ds.requests:
        for s in request.sentences:
            if s.codes and all(c.category in noise_cats for c in s.codes):
                assert not set(analyze(s.text, cfg)) & corpus_terms


def test_context_heavy_profile_ablation_is_noop():
    ds = generate_synthetic(seed=7, num_docs=50, num_requests=20, profile="context-heavy")
    index = build_index(ds.documents, PipelineConfig.default())
    codes = [get_code("Temporal context"), get_code("Physical medium")]
    report = run_ablation(index, Bm25Params(), ds.requests, ds.qrels, codes, k=10)
    for row in report.rows:
        assert row.subset_size > 0
        assert row.metric_ablated == row.metric_all


def test_generator_validation():
    with pytest.raises(ValueError):
        generate_synthetic(num_docs=5, num_requests=10)
    with pytest.raises(ValueError):
        generate_synthetic(profile="loud")


def test_code_structure_mimics_frequency_ordering():
    ds = generate_synthetic(seed=7, num_docs=200, num_requests=50)
    char, scene, obj = get_code("Character"), get_code("Scene"), get_code("Object")
    counts = {
        code: sum(1 for r in ds.requests if r.has_code(code)) for code in (char, scene, obj)
    }
    assert counts[char] >= counts[scene] >= counts[obj]
    assert counts[char] >= 45  # ~98% of 50
