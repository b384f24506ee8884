"""totbench: known-item retrieval engine and benchmark harness for
tip-of-the-tongue movie identification requests."""

from .analytics import (
    AgreementReport,
    CooccurrenceReport,
    code_frequencies,
    cohens_kappa,
    compute_agreement,
    pmi,
    pmi_table,
)
from .codes import TAXONOMY, Category, CodeLabel, get_code
from .corpus import (
    DataError,
    Document,
    Qrels,
    Sentence,
    TOTRequest,
    build_qrels,
    load_corpus,
    load_qrels,
    load_requests,
    save_corpus,
    save_qrels,
    save_requests,
)
from .evaluation import (
    NOT_FOUND,
    AblationReport,
    RunResult,
    SignificanceResult,
    mrr,
    paired_ttest,
    run_ablation,
    run_experiment,
    success_at_k,
    tune,
)
from .index import IndexFormatError, InvertedIndex, build_index, load_index, save_index
from .retrieval import (
    Bm25Params,
    QueryStrategy,
    ScoredHit,
    StrategyKind,
    bm25_score,
    formulate_query,
    search,
)
from .synthetic import generate_synthetic, write_synthetic
from .textproc import PipelineConfig, analyze, segment_sentences, tokenize

__version__ = "0.1.0"
