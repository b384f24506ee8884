"""Annotation-side statistics: code frequencies, Cohen's kappa, PMI.

PMI is reported in log base 2 (stated in all output headers). Kappa treats
each code as an independent binary presence/absence decision per sentence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .codes import CodeLabel, TAXONOMY
from .corpus import DualAnnotation, TOTRequest


@dataclass(frozen=True)
class CodeFrequency:
    sentence_frequency: float  # sentences carrying the code / total sentences
    request_frequency: float  # requests with >= 1 such sentence / total requests
    sentence_count: int
    request_count: int


def code_frequencies(requests: list[TOTRequest]) -> dict[CodeLabel, CodeFrequency]:
    """Per-code sentence-level and request-level relative frequencies.

    Frequencies do not sum to one across codes: codes are not mutually
    exclusive.
    """
    total_sentences = sum(len(r.sentences) for r in requests)
    if total_sentences == 0:
        raise ValueError("no sentences in the given requests")
    total_requests = len(requests)
    sent_counts: dict[CodeLabel, int] = {}
    req_counts: dict[CodeLabel, int] = {}
    for r in requests:
        seen: set[CodeLabel] = set()
        for s in r.sentences:
            for code in s.codes:
                sent_counts[code] = sent_counts.get(code, 0) + 1
                seen.add(code)
        for code in seen:
            req_counts[code] = req_counts.get(code, 0) + 1
    return {
        code: CodeFrequency(
            sentence_frequency=sent_counts.get(code, 0) / total_sentences,
            request_frequency=req_counts.get(code, 0) / total_requests,
            sentence_count=sent_counts.get(code, 0),
            request_count=req_counts.get(code, 0),
        )
        for code in TAXONOMY
    }


def cohens_kappa(a: int, b: int, c: int, d: int) -> float:
    """Chance-corrected agreement from a 2x2 confusion matrix.

    ``a`` = both annotators assigned the code, ``b`` = only A, ``c`` = only B,
    ``d`` = neither. When expected agreement is 1 the statistic is undefined
    unless observed agreement is also 1; that case returns NaN.
    """
    if min(a, b, c, d) < 0:
        raise ValueError("confusion counts must be non-negative")
    n = a + b + c + d
    if n == 0:
        raise ValueError("all-zero confusion matrix")
    p_o = (a + d) / n
    p_e = ((a + b) * (a + c) + (c + d) * (b + d)) / (n * n)
    if p_e == 1.0:
        return 1.0 if p_o == 1.0 else math.nan
    return (p_o - p_e) / (1.0 - p_e)


@dataclass(frozen=True)
class AgreementCell:
    code: CodeLabel
    both: int
    only_a: int
    only_b: int
    neither: int
    kappa: float


@dataclass
class AgreementReport:
    num_sentences: int
    cells: list[AgreementCell] = field(default_factory=list)


def compute_agreement(rows: list[DualAnnotation]) -> AgreementReport:
    """Per-code kappa over a dually annotated sentence set.

    Confusion counts for every code sum to the same sentence total.
    """
    if not rows:
        raise ValueError("no dual annotations given")
    report = AgreementReport(num_sentences=len(rows))
    for code in TAXONOMY:
        a = b = c = d = 0
        for row in rows:
            in_a = code in row.annotator_a
            in_b = code in row.annotator_b
            if in_a and in_b:
                a += 1
            elif in_a:
                b += 1
            elif in_b:
                c += 1
            else:
                d += 1
        report.cells.append(
            AgreementCell(code=code, both=a, only_a=b, only_b=c, neither=d,
                          kappa=cohens_kappa(a, b, c, d))
        )
    return report


def pmi(n_a: int, n_b: int, n_ab: int, total: int) -> float:
    """Pointwise mutual information, log base 2.

    ``n_ab`` joint occurrences out of ``total`` units, with marginals ``n_a``
    and ``n_b``.
    """
    if n_ab < 1:
        raise ValueError("pmi undefined for zero joint count")
    if n_a < n_ab or n_b < n_ab:
        raise ValueError("marginal counts cannot be below the joint count")
    if total < max(n_a, n_b):
        raise ValueError("total cannot be below a marginal count")
    return math.log2((n_ab * total) / (n_a * n_b))


@dataclass(frozen=True)
class CooccurrenceRow:
    code: CodeLabel
    pmi: float
    n_code: int
    n_joint: int


@dataclass
class CooccurrenceReport:
    anchor: CodeLabel
    level: str  # "sentence" or "request"
    total_units: int
    anchor_count: int
    log_base: int = 2
    rows: list[CooccurrenceRow] = field(default_factory=list)


def pmi_table(
    requests: list[TOTRequest], anchor: CodeLabel, level: str = "sentence"
) -> CooccurrenceReport:
    """Codes with positive PMI against the anchor, sorted descending.

    Co-occurrence is counted within sentences by default; ``level="request"``
    counts within whole requests instead.
    """
    if level not in ("sentence", "request"):
        raise ValueError(f"level must be 'sentence' or 'request', got {level!r}")
    if level == "sentence":
        units = [s.codes for r in requests for s in r.sentences]
    else:
        units = [r.codes_present() for r in requests]
    total = len(units)
    counts: dict[CodeLabel, int] = {}
    joint: dict[CodeLabel, int] = {}
    anchor_count = 0
    for codes in units:
        has_anchor = anchor in codes
        if has_anchor:
            anchor_count += 1
        for code in codes:
            counts[code] = counts.get(code, 0) + 1
            if has_anchor and code != anchor:
                joint[code] = joint.get(code, 0) + 1
    report = CooccurrenceReport(
        anchor=anchor, level=level, total_units=total, anchor_count=anchor_count
    )
    if anchor_count == 0:
        return report
    rows = []
    for code, n_joint in joint.items():
        value = pmi(anchor_count, counts[code], n_joint, total)
        if value > 0:
            rows.append(CooccurrenceRow(code=code, pmi=value, n_code=counts[code], n_joint=n_joint))
    rows.sort(key=lambda row: (-row.pmi, row.code.name))
    report.rows = rows
    return report
