"""Dataset model and I/O: plot corpus, annotated requests, qrels.

File formats (one JSON object per line unless noted):

* corpus: ``{"doc_id", "title", "catalog_id" (nullable), "plot"}``
* requests: ``{"request_id", "title", "description", "answer_catalog_id",
  "sentences": [{"index", "text", "codes": [str]}]}``
* qrels: TREC text format, ``request_id 0 doc_id 1`` per line
* dual annotations: ``{"sentence_id", "annotator_a": [str], "annotator_b": [str]}``
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field

from .codes import CodeLabel, UnknownCodeError, get_code
from .textproc import normalize_whitespace

DEFAULT_CATALOG_ID_PATTERN = r"tt\d{7,8}"

CORPUS_FORMATS = ("jsonl",)


class DataError(ValueError):
    """A dataset file violates its format or an invariant."""


@dataclass(frozen=True)
class Document:
    """One indexable movie plot."""

    doc_id: str
    title: str
    plot: str
    catalog_id: str | None = None


@dataclass(frozen=True)
class Sentence:
    index: int
    text: str
    codes: frozenset[CodeLabel] = frozenset()


@dataclass(frozen=True)
class TOTRequest:
    """A title + free-text description request with one known answer."""

    request_id: str
    title: str
    description: str
    sentences: tuple[Sentence, ...]
    answer_catalog_id: str

    def codes_present(self) -> frozenset[CodeLabel]:
        out: set[CodeLabel] = set()
        for s in self.sentences:
            out |= s.codes
        return frozenset(out)

    def has_code(self, code: CodeLabel) -> bool:
        return any(code in s.codes for s in self.sentences)


@dataclass(frozen=True)
class Qrels:
    """Exactly one relevant document per request."""

    entries: dict[str, str]

    def __len__(self) -> int:
        return len(self.entries)

    def relevant_doc(self, request_id: str) -> str:
        return self.entries[request_id]


@dataclass
class RequestLoadReport:
    """Non-fatal observations from loading a requests file."""

    num_requests: int = 0
    num_sentences: int = 0
    zero_code_sentences: list[tuple[str, int]] = field(default_factory=list)
    unknown_codes: Counter = field(default_factory=Counter)


@dataclass
class JoinReport:
    """Exclusions from the catalog-id join behind qrels construction."""

    num_requests: int = 0
    num_documents: int = 0
    matched: int = 0
    unmatched_requests: list[str] = field(default_factory=list)
    ambiguous_requests: list[str] = field(default_factory=list)
    duplicate_catalog_ids: list[str] = field(default_factory=list)


def _read_jsonl(path) -> list[tuple[int, dict]]:
    records = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: malformed JSON record: {exc}") from None
            if not isinstance(obj, dict):
                raise DataError(f"{path}:{lineno}: expected a JSON object")
            records.append((lineno, obj))
    return records


def _require(obj: dict, key: str, path, lineno: int):
    if key not in obj:
        raise DataError(f"{path}:{lineno}: missing field {key!r}")
    return obj[key]


def load_corpus(
    path,
    format: str = "jsonl",
    catalog_id_pattern: str = DEFAULT_CATALOG_ID_PATTERN,
    require_catalog_id: bool = False,
) -> list[Document]:
    """Load plot documents in file order.

    Duplicate doc_ids, empty plots and catalog ids that do not match
    ``catalog_id_pattern`` are errors. With ``require_catalog_id`` documents
    lacking a catalog id are silently dropped.
    """
    if format not in CORPUS_FORMATS:
        raise DataError(f"unknown corpus format {format!r}; expected one of {CORPUS_FORMATS}")
    pattern = re.compile(catalog_id_pattern)
    docs: list[Document] = []
    seen: dict[str, int] = {}
    for lineno, obj in _read_jsonl(path):
        doc_id = str(_require(obj, "doc_id", path, lineno))
        title = str(_require(obj, "title", path, lineno))
        plot = str(_require(obj, "plot", path, lineno))
        catalog_id = obj.get("catalog_id")
        if doc_id in seen:
            raise DataError(
                f"{path}:{lineno}: duplicate doc_id {doc_id!r} "
                f"(first seen at line {seen[doc_id]})"
            )
        seen[doc_id] = lineno
        if not plot.strip():
            raise DataError(f"{path}:{lineno}: document {doc_id!r} has an empty plot")
        if catalog_id is not None:
            catalog_id = str(catalog_id)
            if not pattern.fullmatch(catalog_id):
                raise DataError(
                    f"{path}:{lineno}: catalog_id {catalog_id!r} does not match "
                    f"pattern {catalog_id_pattern!r}"
                )
        if require_catalog_id and catalog_id is None:
            continue
        docs.append(Document(doc_id=doc_id, title=title, plot=plot, catalog_id=catalog_id))
    return docs


def save_corpus(documents: list[Document], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for d in documents:
            f.write(
                json.dumps(
                    {"doc_id": d.doc_id, "title": d.title, "catalog_id": d.catalog_id, "plot": d.plot},
                    ensure_ascii=True,
                )
                + "\n"
            )


def load_requests(
    path, allow_unknown_codes: bool = False
) -> tuple[list[TOTRequest], RequestLoadReport]:
    """Load annotated requests plus a report of non-fatal observations.

    Unknown code names are an error unless ``allow_unknown_codes`` is set, in
    which case they are dropped and tallied in the report. Sentences with no
    codes are reported, never rejected.
    """
    requests: list[TOTRequest] = []
    report = RequestLoadReport()
    for lineno, obj in _read_jsonl(path):
        request_id = str(_require(obj, "request_id", path, lineno))
        title = str(_require(obj, "title", path, lineno))
        description = str(_require(obj, "description", path, lineno))
        answer = str(_require(obj, "answer_catalog_id", path, lineno) or "")
        if not answer.strip():
            raise DataError(f"{path}:{lineno}: request {request_id!r} missing answer")
        raw_sentences = _require(obj, "sentences", path, lineno)
        sentences: list[Sentence] = []
        for pos, raw in enumerate(raw_sentences):
            text = str(_require(raw, "text", path, lineno))
            index = int(raw.get("index", pos))
            if index != pos:
                raise DataError(
                    f"{path}:{lineno}: request {request_id!r} sentence index {index} "
                    f"out of order (expected {pos})"
                )
            labels: set[CodeLabel] = set()
            for name in raw.get("codes", []):
                try:
                    labels.add(get_code(name))
                except UnknownCodeError:
                    if not allow_unknown_codes:
                        raise DataError(
                            f"{path}:{lineno}: request {request_id!r} uses unknown code {name!r}"
                        ) from None
                    report.unknown_codes[name] += 1
            if not labels:
                report.zero_code_sentences.append((request_id, index))
            sentences.append(Sentence(index=index, text=text, codes=frozenset(labels)))
        joined = normalize_whitespace(" ".join(s.text for s in sentences))
        if joined != normalize_whitespace(description):
            raise DataError(
                f"{path}:{lineno}: request {request_id!r} sentences do not reconstruct "
                f"the description"
            )
        report.num_sentences += len(sentences)
        requests.append(
            TOTRequest(
                request_id=request_id,
                title=title,
                description=description,
                sentences=tuple(sentences),
                answer_catalog_id=answer,
            )
        )
    report.num_requests = len(requests)
    return requests, report


def save_requests(requests: list[TOTRequest], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in requests:
            obj = {
                "request_id": r.request_id,
                "title": r.title,
                "description": r.description,
                "answer_catalog_id": r.answer_catalog_id,
                "sentences": [
                    {
                        "index": s.index,
                        "text": s.text,
                        "codes": sorted(c.name for c in s.codes),
                    }
                    for s in r.sentences
                ],
            }
            f.write(json.dumps(obj, ensure_ascii=True) + "\n")


def build_qrels(
    requests: list[TOTRequest], documents: list[Document]
) -> tuple[Qrels, list[TOTRequest], JoinReport]:
    """Join requests to documents on catalog id.

    A request is evaluable only when its answer id matches exactly one
    document; zero or multiple matches exclude it (reported, not raised).
    """
    report = JoinReport(num_requests=len(requests), num_documents=len(documents))
    by_catalog: dict[str, list[str]] = {}
    for d in documents:
        if d.catalog_id is not None:
            by_catalog.setdefault(d.catalog_id, []).append(d.doc_id)
    report.duplicate_catalog_ids = sorted(
        cid for cid, ids in by_catalog.items() if len(ids) > 1
    )
    entries: dict[str, str] = {}
    kept: list[TOTRequest] = []
    for r in requests:
        matches = by_catalog.get(r.answer_catalog_id, [])
        if len(matches) == 1:
            entries[r.request_id] = matches[0]
            kept.append(r)
        elif len(matches) == 0:
            report.unmatched_requests.append(r.request_id)
        else:
            report.ambiguous_requests.append(r.request_id)
    report.matched = len(kept)
    return Qrels(entries=entries), kept, report


def save_qrels(qrels: Qrels, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for request_id, doc_id in qrels.entries.items():
            f.write(f"{request_id} 0 {doc_id} 1\n")


def load_qrels(path) -> Qrels:
    entries: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 4:
                raise DataError(f"{path}:{lineno}: expected 'request_id 0 doc_id rel'")
            request_id, _, doc_id, rel = parts
            if int(rel) <= 0:
                continue
            if request_id in entries and entries[request_id] != doc_id:
                raise DataError(
                    f"{path}:{lineno}: request {request_id!r} has more than one relevant document"
                )
            entries[request_id] = doc_id
    return Qrels(entries=entries)


@dataclass(frozen=True)
class DualAnnotation:
    sentence_id: str
    annotator_a: frozenset[CodeLabel]
    annotator_b: frozenset[CodeLabel]


def load_dual_annotations(path) -> list[DualAnnotation]:
    """Load the two-annotator file used for agreement computation."""
    rows: list[DualAnnotation] = []
    seen: set[str] = set()
    for lineno, obj in _read_jsonl(path):
        sid = str(_require(obj, "sentence_id", path, lineno))
        if sid in seen:
            raise DataError(f"{path}:{lineno}: duplicate sentence_id {sid!r}")
        seen.add(sid)
        try:
            a = frozenset(get_code(n) for n in _require(obj, "annotator_a", path, lineno))
            b = frozenset(get_code(n) for n in _require(obj, "annotator_b", path, lineno))
        except UnknownCodeError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from None
        rows.append(DualAnnotation(sentence_id=sid, annotator_a=a, annotator_b=b))
    return rows


def sha256_file(path) -> str:
    import hashlib

    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
