"""Inverted index with the collection statistics BM25 needs.

The on-disk format is a sequence of length-prefixed sections behind magic
bytes and a version integer, closed by a whole-file SHA-256 checksum, so
corruption and version drift are detected instead of decoded into garbage.
Builds are deterministic: document ordinals follow input order and terms are
written in sorted order, so identical inputs produce identical files.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass

import numpy as np

from .corpus import Document
from .textproc import PipelineConfig, analyze

MAGIC = b"TOTBIDX\x00"
VERSION = 1


class IndexFormatError(ValueError):
    """The file is not a readable index of the supported version."""


@dataclass(frozen=True)
class IndexStats:
    num_docs: int
    doc_lengths: np.ndarray  # post-pipeline token counts, ordinal order
    avgdl: float
    df: dict[str, int]

    def check(self) -> None:
        recomputed = float(self.doc_lengths.mean()) if self.num_docs else 0.0
        if abs(recomputed - self.avgdl) > 1e-9:
            raise IndexFormatError(
                f"avgdl {self.avgdl} inconsistent with doc lengths (recomputed {recomputed})"
            )
        for term, df in self.df.items():
            if not 1 <= df <= self.num_docs:
                raise IndexFormatError(f"df({term!r}) = {df} outside [1, {self.num_docs}]")


@dataclass
class InvertedIndex:
    doc_ids: list[str]
    titles: list[str]
    catalog_ids: list[str | None]
    postings: dict[str, tuple[np.ndarray, np.ndarray]]  # term -> (ordinals, tfs)
    stats: IndexStats
    pipeline: PipelineConfig
    include_titles: bool = True

    @property
    def num_docs(self) -> int:
        return self.stats.num_docs

    def doc(self, ordinal: int) -> tuple[str, str, str | None]:
        return self.doc_ids[ordinal], self.titles[ordinal], self.catalog_ids[ordinal]

    def vocabulary_size(self) -> int:
        return len(self.postings)

    def structurally_equal(self, other: "InvertedIndex") -> bool:
        if (
            self.doc_ids != other.doc_ids
            or self.titles != other.titles
            or self.catalog_ids != other.catalog_ids
            or self.include_titles != other.include_titles
            or self.pipeline != other.pipeline
            or sorted(self.postings) != sorted(other.postings)
            or self.stats.num_docs != other.stats.num_docs
            or abs(self.stats.avgdl - other.stats.avgdl) > 1e-12
            or not np.array_equal(self.stats.doc_lengths, other.stats.doc_lengths)
        ):
            return False
        for term, (ords, tfs) in self.postings.items():
            o2, t2 = other.postings[term]
            if not (np.array_equal(ords, o2) and np.array_equal(tfs, t2)):
                return False
        return True


def build_index(
    documents: list[Document],
    pipeline: PipelineConfig,
    include_titles: bool = True,
) -> InvertedIndex:
    """Index ``analyze(title + " " + plot)`` of each document.

    Ordinals are assigned in input order; duplicate doc_ids are an error.
    """
    if not documents:
        raise ValueError("cannot build an index over an empty document list")
    seen: set[str] = set()
    doc_ids: list[str] = []
    titles: list[str] = []
    catalog_ids: list[str | None] = []
    doc_lengths = np.zeros(len(documents), dtype=np.int64)
    raw: dict[str, list[int]] = {}
    for ordinal, doc in enumerate(documents):
        if doc.doc_id in seen:
            raise ValueError(f"duplicate doc_id {doc.doc_id!r}")
        seen.add(doc.doc_id)
        doc_ids.append(doc.doc_id)
        titles.append(doc.title)
        catalog_ids.append(doc.catalog_id)
        text = (doc.title + " " + doc.plot) if include_titles else doc.plot
        stems = analyze(text, pipeline)
        doc_lengths[ordinal] = len(stems)
        counts: dict[str, int] = {}
        for s in stems:
            counts[s] = counts.get(s, 0) + 1
        for term, tf in counts.items():
            lst = raw.get(term)
            if lst is None:
                lst = raw[term] = []
            lst.append(ordinal)
            lst.append(tf)
    postings: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    df: dict[str, int] = {}
    for term in sorted(raw):
        flat = np.asarray(raw[term], dtype=np.int32).reshape(-1, 2)
        postings[term] = (np.ascontiguousarray(flat[:, 0]), np.ascontiguousarray(flat[:, 1]))
        df[term] = flat.shape[0]
    avgdl = float(doc_lengths.mean()) if len(documents) else 0.0
    stats = IndexStats(num_docs=len(documents), doc_lengths=doc_lengths, avgdl=avgdl, df=df)
    return InvertedIndex(
        doc_ids=doc_ids,
        titles=titles,
        catalog_ids=catalog_ids,
        postings=postings,
        stats=stats,
        pipeline=pipeline,
        include_titles=include_titles,
    )


def _section(payload: bytes) -> bytes:
    return struct.pack("<Q", len(payload)) + payload


def save_index(index: InvertedIndex, path) -> None:
    """Write the index; ``load_index(save_index(x)) == x`` structurally."""
    meta = {
        "num_docs": index.stats.num_docs,
        "stemmer": index.pipeline.stemmer,
        "include_titles": index.include_titles,
        "stem_exceptions": (
            None
            if index.pipeline.stem_exceptions is None
            else [list(pair) for pair in index.pipeline.stem_exceptions]
        ),
    }
    doc_table = [
        [index.doc_ids[i], index.titles[i], index.catalog_ids[i], int(index.stats.doc_lengths[i])]
        for i in range(index.stats.num_docs)
    ]
    terms = sorted(index.postings)
    df_arr = np.asarray([index.stats.df[t] for t in terms], dtype=np.uint32)
    blobs = []
    for t in terms:
        ords, tfs = index.postings[t]
        blobs.append(ords.astype("<i4", copy=False).tobytes())
        blobs.append(tfs.astype("<i4", copy=False).tobytes())
    body = b"".join(
        [
            MAGIC,
            struct.pack("<I", VERSION),
            _section(json.dumps(meta, sort_keys=True, separators=(",", ":")).encode()),
            _section("\n".join(sorted(index.pipeline.stopword_set)).encode()),
            _section("\n".join(sorted(index.pipeline.abbreviation_set)).encode()),
            _section(json.dumps(doc_table, ensure_ascii=True, separators=(",", ":")).encode()),
            _section("\n".join(terms).encode()),
            _section(df_arr.astype("<u4", copy=False).tobytes()),
            _section(b"".join(blobs)),
        ]
    )
    digest = hashlib.sha256(body).digest()
    with open(path, "wb") as f:
        f.write(body)
        f.write(digest)


class _Reader:
    def __init__(self, data: bytes, path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise IndexFormatError(f"{self.path}: truncated index file")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def section(self) -> bytes:
        (n,) = struct.unpack("<Q", self.take(8))
        return self.take(n)


def load_index(path) -> InvertedIndex:
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < len(MAGIC) + 4 + 32:
        raise IndexFormatError(f"{path}: truncated index file")
    if data[: len(MAGIC)] != MAGIC:
        raise IndexFormatError(f"{path}: not an index file (bad magic bytes)")
    body, digest = data[:-32], data[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise IndexFormatError(f"{path}: checksum failure (file corrupted)")
    r = _Reader(body, path)
    r.take(len(MAGIC))
    (version,) = struct.unpack("<I", r.take(4))
    if version != VERSION:
        raise IndexFormatError(
            f"{path}: index file version {version} not supported (reader supports {VERSION})"
        )
    meta = json.loads(r.section().decode())
    stopwords = frozenset(w for w in r.section().decode().split("\n") if w)
    abbreviations = frozenset(w for w in r.section().decode().split("\n") if w)
    doc_table = json.loads(r.section().decode())
    terms = [t for t in r.section().decode().split("\n") if t]
    df_arr = np.frombuffer(r.section(), dtype="<u4")
    if len(df_arr) != len(terms):
        raise IndexFormatError(f"{path}: term dictionary and df table disagree")
    blob = r.section()
    num_docs = meta["num_docs"]
    if len(doc_table) != num_docs:
        raise IndexFormatError(f"{path}: doc table size disagrees with header")
    doc_ids = [row[0] for row in doc_table]
    titles = [row[1] for row in doc_table]
    catalog_ids = [row[2] for row in doc_table]
    doc_lengths = np.asarray([row[3] for row in doc_table], dtype=np.int64)
    postings: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    df: dict[str, int] = {}
    offset = 0
    for term, n in zip(terms, df_arr):
        n = int(n)
        need = 2 * 4 * n
        if offset + need > len(blob):
            raise IndexFormatError(f"{path}: truncated postings section")
        ords = np.frombuffer(blob, dtype="<i4", count=n, offset=offset)
        tfs = np.frombuffer(blob, dtype="<i4", count=n, offset=offset + 4 * n)
        offset += need
        postings[term] = (ords, tfs)
        df[term] = n
    if offset != len(blob):
        raise IndexFormatError(f"{path}: trailing bytes in postings section")
    avgdl = float(doc_lengths.mean()) if num_docs else 0.0
    stats = IndexStats(num_docs=num_docs, doc_lengths=doc_lengths, avgdl=avgdl, df=df)
    stats.check()
    exceptions = meta.get("stem_exceptions")
    pipeline = PipelineConfig(
        stopword_set=stopwords,
        stemmer=meta["stemmer"],
        abbreviation_set=abbreviations,
        stem_exceptions=(
            None if exceptions is None else tuple((s, t) for s, t in exceptions)
        ),
    )
    return InvertedIndex(
        doc_ids=doc_ids,
        titles=titles,
        catalog_ids=catalog_ids,
        postings=postings,
        stats=stats,
        pipeline=pipeline,
        include_titles=meta["include_titles"],
    )
