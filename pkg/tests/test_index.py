import random
from collections import Counter

import numpy as np
import pytest

from totbench.corpus import Document
from totbench.index import (
    MAGIC,
    IndexFormatError,
    build_index,
    load_index,
    save_index,
)
from totbench.textproc import PipelineConfig, analyze


@pytest.fixture
def toy_docs():
    return [
        Document("d1", "", "cat sat mat"),
        Document("d2", "", "dog sat log"),
        Document("d3", "", "cat cat dog"),
    ]


@pytest.fixture
def bare():
    return PipelineConfig.bare()


def test_toy_statistics(toy_docs, bare):
    idx = build_index(toy_docs, bare)
    assert idx.stats.df == {"cat": 2, "dog": 2, "sat": 2, "mat": 1, "log": 1}
    assert idx.stats.doc_lengths.tolist() == [3, 3, 3]
    assert idx.stats.avgdl == 3.0


def test_posting_invariants(toy_docs, bare):
    idx = build_index(toy_docs, bare)
    for term, (ords, tfs) in idx.postings.items():
        assert list(ords) == sorted(set(int(o) for o in ords))
        assert all(int(tf) > 0 for tf in tfs)
        assert all(0 <= int(o) < idx.num_docs for o in ords)
    # tf over a document's postings sums to its dl
    per_doc = Counter()
    for ords, tfs in idx.postings.values():
        for o, tf in zip(ords, tfs):
            per_doc[int(o)] += int(tf)
    for ordinal in range(idx.num_docs):
        assert per_doc[ordinal] == int(idx.stats.doc_lengths[ordinal])


def test_empty_after_pipeline_document():
    cfg = PipelineConfig(stopword_set=frozenset({"the", "of"}), stemmer="identity")
    idx = build_index([Document("d1", "", "the of the")], cfg)
    assert idx.stats.doc_lengths.tolist() == [0]
    assert idx.postings == {}
    assert idx.stats.avgdl == 0.0


def test_duplicate_doc_id_rejected(bare):
    docs = [Document("d1", "", "a b"), Document("d1", "", "c d")]
    with pytest.raises(ValueError, match="duplicate"):
        build_index(docs, bare)


def test_empty_document_list_rejected(bare):
    with pytest.raises(ValueError, match="empty"):
        build_index([], bare)


def test_titles_indexed_unless_disabled(bare):
    docs = [Document("d1", "uniquetitleterm", "plain plot words")]
    with_titles = build_index(docs, bare)
    without = build_index(docs, bare, include_titles=False)
    assert "uniquetitleterm" in with_titles.postings
    assert "uniquetitleterm" not in without.postings


def test_postings_match_naive_term_counts(bare):
    rng = random.Random(99)
    vocab = [f"w{i}" for i in range(30)]
    docs = [
        Document(f"d{i}", "", " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 40))))
        for i in range(25)
    ]
    idx = build_index(docs, bare)
    naive = Counter()
    for d in docs:
        naive.update(analyze(d.title + " " + d.plot, bare))
    engine = {term: int(tfs.sum()) for term, (ords, tfs) in idx.postings.items()}
    assert engine == dict(naive)
    assert int(idx.stats.doc_lengths.sum()) == sum(naive.values())


def test_round_trip(toy_docs, bare, tmp_path):
    idx = build_index(toy_docs, bare)
    p = tmp_path / "toy.idx"
    save_index(idx, p)
    loaded = load_index(p)
    assert idx.structurally_equal(loaded)
    assert loaded.stats.avgdl == idx.stats.avgdl


def test_round_trip_default_pipeline(tmp_path):
    cfg = PipelineConfig.default()
    docs = [Document("d1", "The Dog", "Dogs were running around town.")]
    idx = build_index(docs, cfg)
    p = tmp_path / "one.idx"
    save_index(idx, p)
    loaded = load_index(p)
    assert loaded.pipeline == cfg
    assert idx.structurally_equal(loaded)


def test_build_deterministic_byte_identical(toy_docs, bare, tmp_path):
    a, b = tmp_path / "a.idx", tmp_path / "b.idx"
    save_index(build_index(toy_docs, bare), a)
    save_index(build_index(list(toy_docs), bare), b)
    assert a.read_bytes() == b.read_bytes()


def test_wrong_magic(tmp_path):
    p = tmp_path / "bad.idx"
    p.write_bytes(b"NOTANIDX" + b"\x00" * 64)
    with pytest.raises(IndexFormatError, match="not an index file"):
        load_index(p)


def test_version_mismatch(toy_docs, bare, tmp_path):
    p = tmp_path / "v.idx"
    save_index(build_index(toy_docs, bare), p)
    raw = bytearray(p.read_bytes())
    raw[len(MAGIC)] = 2  # bump version field
    # keep checksum consistent so the version check is what fires
    import hashlib

    body = bytes(raw[:-32])
    p.write_bytes(body + hashlib.sha256(body).digest())
    with pytest.raises(IndexFormatError, match="version"):
        load_index(p)


def test_checksum_failure(toy_docs, bare, tmp_path):
    p = tmp_path / "c.idx"
    save_index(build_index(toy_docs, bare), p)
    raw = bytearray(p.read_bytes())
    raw[len(raw) // 2] ^= 0xFF
    p.write_bytes(bytes(raw))
    with pytest.raises(IndexFormatError, match="checksum"):
        load_index(p)


def test_truncated_file(toy_docs, bare, tmp_path):
    p = tmp_path / "t.idx"
    save_index(build_index(toy_docs, bare), p)
    p.write_bytes(p.read_bytes()[:20])
    with pytest.raises(IndexFormatError, match="truncated"):
        load_index(p)


def test_stats_consistency_check():
    from totbench.index import IndexStats

    stats = IndexStats(num_docs=2, doc_lengths=np.array([2, 2]), avgdl=9.0, df={"x": 1})
    with pytest.raises(IndexFormatError, match="avgdl"):
        stats.check()
