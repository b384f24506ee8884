"""Command-line workflow: synth, ingest, build-index, tune, run, eval,
ablate, agreement, pmi, stats, search, ttest.

Exit codes: 0 success, 1 usage error, 2 data/environment error. Every seeded
subcommand is bit-reproducible: rerunning with the same inputs and seed
writes identical bytes.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import analytics, config as config_mod, evaluation, synthetic
from .codes import get_code
from .corpus import (
    DataError,
    Qrels,
    build_qrels,
    load_corpus,
    load_dual_annotations,
    load_qrels,
    load_requests,
    save_qrels,
    save_requests,
)
from .index import IndexFormatError, build_index, load_index, save_index
from .retrieval import Bm25Params, QueryStrategy, StrategyKind, trec_run_lines
from .textproc import PipelineConfig, load_stopwords


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _threads(args) -> int:
    env = os.environ.get("TOT_BENCH_THREADS")
    if env is not None:
        return max(1, int(env))
    if getattr(args, "threads", None):
        return max(1, args.threads)
    return os.cpu_count() or 1


def _pipeline(args) -> PipelineConfig:
    stopwords = load_stopwords(getattr(args, "stopwords", None))
    return PipelineConfig(stopword_set=stopwords, stemmer=getattr(args, "stemmer", "krovetz-light"))


def _strategy(args) -> QueryStrategy:
    kind = StrategyKind(args.strategy)
    ablated = frozenset()
    raw = getattr(args, "ablate", None)
    if raw:
        ablated = frozenset(get_code(name) for name in raw.split(","))
    return QueryStrategy(kind=kind, ablated_codes=ablated)


def _params(args) -> Bm25Params:
    return Bm25Params(k1=args.k1, b=args.b)


def _need_file(path, label: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"{label} file not found: {p}")
    return p


def _load_requests_cli(path, allow_unknown: bool):
    requests, report = load_requests(path, allow_unknown_codes=allow_unknown)
    if report.unknown_codes:
        print(
            f"warning: dropped {sum(report.unknown_codes.values())} unknown code "
            f"assignments: {sorted(report.unknown_codes)}",
            file=sys.stderr,
        )
    if report.zero_code_sentences:
        print(
            f"warning: {len(report.zero_code_sentences)} sentences carry no codes",
            file=sys.stderr,
        )
    return requests


def _format_table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def fmt(row):
        return "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
    lines = [fmt(headers), fmt(["-" * w for w in widths])]
    lines.extend(fmt(row) for row in rows)
    return "\n".join(lines)


# --- subcommands ------------------------------------------------------------


def cmd_synth(args) -> int:
    dataset = synthetic.generate_synthetic(
        seed=args.seed, num_docs=args.docs, num_requests=args.requests, profile=args.profile
    )
    paths = synthetic.write_synthetic(dataset, args.out)
    config_mod.write_manifest(
        args.out,
        "synth",
        {"seed": args.seed, "docs": args.docs, "requests": args.requests, "profile": args.profile},
        {},
    )
    for label, p in sorted(paths.items()):
        print(f"{label}: {p}")
    return 0


def cmd_ingest(args) -> int:
    corpus_path = _need_file(args.corpus, "corpus")
    requests_path = _need_file(args.requests, "requests")
    documents = load_corpus(corpus_path)
    requests = _load_requests_cli(requests_path, args.allow_unknown_codes)
    qrels, kept, report = build_qrels(requests, documents)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_qrels(qrels, out / "qrels.txt")
    save_requests(kept, out / "requests_evaluable.jsonl")
    (out / "join_report.json").write_text(
        json.dumps(
            {
                "num_requests": report.num_requests,
                "num_documents": report.num_documents,
                "matched": report.matched,
                "unmatched_requests": report.unmatched_requests,
                "ambiguous_requests": report.ambiguous_requests,
                "duplicate_catalog_ids": report.duplicate_catalog_ids,
            },
            sort_keys=True,
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    config_mod.write_manifest(
        args.out,
        "ingest",
        {"allow_unknown_codes": args.allow_unknown_codes},
        {"corpus": corpus_path, "requests": requests_path},
    )
    print(f"evaluable requests: {report.matched} of {report.num_requests}")
    return 0


def cmd_build_index(args) -> int:
    corpus_path = _need_file(args.corpus, "corpus")
    documents = load_corpus(corpus_path)
    index = build_index(documents, _pipeline(args), include_titles=not args.no_titles)
    save_index(index, args.out)
    print(
        f"indexed {index.num_docs} documents, vocabulary {index.vocabulary_size()}, "
        f"avgdl {index.stats.avgdl:.1f} -> {args.out}"
    )
    return 0


def cmd_stats(args) -> int:
    index = load_index(_need_file(args.index, "index"))
    print(
        json.dumps(
            {
                "num_docs": index.num_docs,
                "avgdl": index.stats.avgdl,
                "vocabulary_size": index.vocabulary_size(),
            },
            sort_keys=True,
        )
    )
    return 0


def cmd_search(args) -> int:
    index = load_index(_need_file(args.index, "index"))
    requests = _load_requests_cli(_need_file(args.requests, "requests"), args.allow_unknown_codes)
    strategy = _strategy(args)
    params = _params(args)
    from .retrieval import formulate_query, search

    lines: list[str] = []
    for request in requests:
        query = formulate_query(request, strategy)
        hits = search(index, params, query, args.k, use_query_tf=args.tf_query) if query.strip() else []
        lines.extend(trec_run_lines(request.request_id, hits, args.run_tag))
    text = "\n".join(lines) + ("\n" if lines else "")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_tune(args) -> int:
    index = load_index(_need_file(args.index, "index"))
    requests = _load_requests_cli(_need_file(args.requests, "requests"), args.allow_unknown_codes)
    qrels = load_qrels(_need_file(args.qrels, "qrels"))
    best = evaluation.tune(
        index,
        requests,
        qrels,
        QueryStrategy(kind=StrategyKind(args.strategy)),
        split_seed=args.seed,
        objective=args.objective,
        depth=args.depth,
        threads=_threads(args),
    )
    print(json.dumps({"k1": best.k1, "b": best.b, "objective": args.objective, "seed": args.seed}))
    return 0


def cmd_run(args) -> int:
    if args.config:
        cfg = config_mod.load_config(_need_file(args.config, "config"))
        cfg.validate()
    else:
        for flag in ("index", "requests", "out"):
            if getattr(args, flag) is None:
                raise UsageError(f"run requires --{flag} (or --config)")
        cfg = config_mod.ExperimentConfig(
            corpus_path="",
            requests_path=args.requests,
            index_path=args.index,
            output_dir=args.out,
            params=None if args.tuned else Bm25Params(k1=args.k1, b=args.b),
            strategy=StrategyKind(args.strategy),
            seed=args.seed,
            ks=tuple(args.k) if args.k else (10,),
            depth=args.depth,
            eval_split=args.eval_split,
            use_query_tf=args.tf_query,
        )
    index = load_index(_need_file(cfg.index_path, "index"))
    requests = _load_requests_cli(_need_file(cfg.requests_path, "requests"), args.allow_unknown_codes)
    qrels_path = args.qrels
    if qrels_path is not None:
        qrels = load_qrels(_need_file(qrels_path, "qrels"))
    elif cfg.corpus_path:
        # No qrels file: derive them from the catalog-id join.
        documents = load_corpus(_need_file(cfg.corpus_path, "corpus"))
        qrels, requests, _ = build_qrels(requests, documents)
        qrels_path = cfg.corpus_path
    else:
        raise UsageError("run requires --qrels (or a config with a corpus path)")
    strategy = QueryStrategy(kind=cfg.strategy)
    threads = _threads(args)

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    settings = {
        "strategy": cfg.strategy.value,
        "seed": cfg.seed,
        "ks": list(cfg.ks),
        "depth": cfg.depth,
        "eval_split": cfg.eval_split,
        "use_query_tf": cfg.use_query_tf,
        "params": None if cfg.params is None else [cfg.params.k1, cfg.params.b],
    }

    if cfg.params is None:
        params = evaluation.tune(
            index, requests, qrels, strategy,
            split_seed=cfg.seed, depth=cfg.depth, threads=threads,
        )
        (out / "tuned_params.json").write_text(
            json.dumps({"k1": params.k1, "b": params.b, "seed": cfg.seed}, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        eval_requests = requests
        if cfg.eval_split == "heldout":
            _, eval_requests = evaluation.split_requests(requests, 0.2, cfg.seed)
    else:
        params = cfg.params
        eval_requests = requests

    result = evaluation.run_experiment(
        index, params, eval_requests, qrels, strategy,
        ks=cfg.ks, depth=cfg.depth, threads=threads, keep_hits=True,
        use_query_tf=cfg.use_query_tf,
    )
    run_lines: list[str] = []
    assert result.hits is not None
    for request_id, hits in zip(result.request_ids, result.hits):
        run_lines.extend(trec_run_lines(request_id, hits, args.run_tag))
    (out / "run.txt").write_text("\n".join(run_lines) + ("\n" if run_lines else ""), encoding="utf-8")
    metrics = {
        "num_requests": len(result.request_ids),
        "params": {"k1": params.k1, "b": params.b},
        "mrr": result.mrr,
        **{f"success@{k}": v for k, v in sorted(result.success.items())},
    }
    (out / "metrics.json").write_text(json.dumps(metrics, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    config_mod.write_manifest(
        out, "run", settings,
        {"index": cfg.index_path, "requests": cfg.requests_path, "qrels": qrels_path},
    )
    for k, v in sorted(result.success.items()):
        print(f"success@{k} = {v:.4f}")
    print(f"MRR = {result.mrr:.4f}")
    return 0


def _ranks_from_run(run_path, qrels: Qrels) -> list[int | None]:
    best: dict[str, int] = {}
    with open(run_path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 6:
                raise DataError(f"{run_path}:{lineno}: expected 6 TREC run fields")
            request_id, _, doc_id, rank = parts[0], parts[1], parts[2], int(parts[3])
            if qrels.entries.get(request_id) == doc_id:
                if request_id not in best or rank < best[request_id]:
                    best[request_id] = rank
    return [best.get(request_id) for request_id in qrels.entries]


def cmd_eval(args) -> int:
    qrels = load_qrels(_need_file(args.qrels, "qrels"))
    ranks = _ranks_from_run(_need_file(args.run, "run"), qrels)
    for k in args.k or [10]:
        print(f"success@{k} = {evaluation.success_at_k(ranks, k):.4f}")
    print(f"MRR = {evaluation.mrr(ranks):.4f}")
    return 0


def cmd_ablate(args) -> int:
    index = load_index(_need_file(args.index, "index"))
    requests = _load_requests_cli(_need_file(args.requests, "requests"), args.allow_unknown_codes)
    qrels = load_qrels(_need_file(args.qrels, "qrels"))
    if args.codes:
        codes = [get_code(name) for name in args.codes.split(",")]
    else:
        codes = evaluation.codes_above_frequency(requests, args.min_freq)
    report = evaluation.run_ablation(
        index, _params(args), requests, qrels, codes,
        k=args.k, strategy=QueryStrategy(kind=StrategyKind(args.strategy)),
        depth=args.depth, threads=_threads(args),
    )

    def cell(v, fmt="{:.4f}"):
        return "-" if v is None else fmt.format(v)

    rows = [
        [
            row.code.name,
            f"{row.request_frequency * 100:.1f}%",
            cell(row.metric_all),
            cell(row.metric_ablated),
            cell(row.absolute_diff, "{:+.4f}"),
            cell(None if row.relative_diff is None else row.relative_diff * 100, "{:+.1f}%"),
        ]
        for row in report.rows
    ]
    table = _format_table(
        ["code", "frequency", "all", "ablated", "absolute", "relative"], rows
    )
    print(f"metric: {report.metric}, strategy: {report.strategy_kind}")
    print(table)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        payload = [
            {
                "code": row.code.name,
                "request_frequency": row.request_frequency,
                "subset_size": row.subset_size,
                "metric_all": row.metric_all,
                "metric_ablated": row.metric_ablated,
                "absolute_diff": row.absolute_diff,
                "relative_diff": row.relative_diff,
                "note": row.note,
            }
            for row in report.rows
        ]
        (out / "ablation.json").write_text(
            json.dumps({"metric": report.metric, "rows": payload}, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )
        (out / "ablation.txt").write_text(table + "\n", encoding="utf-8")
        config_mod.write_manifest(
            out, "ablate",
            {
                "k": args.k, "k1": args.k1, "b": args.b, "min_freq": args.min_freq,
                "codes": sorted(c.name for c in codes), "strategy": args.strategy,
            },
            {"index": args.index, "requests": args.requests, "qrels": args.qrels},
        )
    return 0


def cmd_agreement(args) -> int:
    rows = load_dual_annotations(_need_file(args.dual, "dual-annotation"))
    report = analytics.compute_agreement(rows)
    if args.json:
        payload = [
            {
                "code": cell.code.name,
                "both": cell.both,
                "only_a": cell.only_a,
                "only_b": cell.only_b,
                "neither": cell.neither,
                "kappa": None if cell.kappa != cell.kappa else cell.kappa,
            }
            for cell in report.cells
        ]
        print(json.dumps({"num_sentences": report.num_sentences, "codes": payload}, indent=2))
        return 0
    table_rows = [
        [
            cell.code.name,
            str(cell.both),
            str(cell.only_a),
            str(cell.only_b),
            str(cell.neither),
            "undefined" if cell.kappa != cell.kappa else f"{cell.kappa:.3f}",
        ]
        for cell in report.cells
    ]
    print(f"dually annotated sentences: {report.num_sentences}")
    print(_format_table(["code", "both", "only_a", "only_b", "neither", "kappa"], table_rows))
    return 0


def cmd_pmi(args) -> int:
    requests = _load_requests_cli(_need_file(args.requests, "requests"), args.allow_unknown_codes)
    anchor = get_code(args.anchor)
    report = analytics.pmi_table(requests, anchor, level=args.level)
    if args.json:
        payload = [
            {"code": row.code.name, "pmi": row.pmi, "n_code": row.n_code, "n_joint": row.n_joint}
            for row in report.rows
        ]
        print(
            json.dumps(
                {
                    "anchor": report.anchor.name,
                    "level": report.level,
                    "log_base": report.log_base,
                    "total_units": report.total_units,
                    "anchor_count": report.anchor_count,
                    "rows": payload,
                },
                indent=2,
            )
        )
        return 0
    print(
        f"anchor: {report.anchor.name} ({report.anchor_count} of {report.total_units} "
        f"{report.level}s), PMI log base {report.log_base}"
    )
    table_rows = [
        [row.code.name, f"{row.pmi:.3f}", str(row.n_joint), ""] for row in report.rows
    ]
    print(_format_table(["code", "pmi", "joint", "example"], table_rows))
    return 0


def cmd_ttest(args) -> int:
    qrels = load_qrels(_need_file(args.qrels, "qrels"))
    ranks_a = _ranks_from_run(_need_file(args.run_a, "run"), qrels)
    ranks_b = _ranks_from_run(_need_file(args.run_b, "run"), qrels)
    if args.metric == "rr":
        per_a = [0.0 if r is None else 1.0 / r for r in ranks_a]
        per_b = [0.0 if r is None else 1.0 / r for r in ranks_b]
    else:
        per_a = [1.0 if r is not None and r <= args.k else 0.0 for r in ranks_a]
        per_b = [1.0 if r is not None and r <= args.k else 0.0 for r in ranks_b]
    result = evaluation.paired_ttest(
        per_a, per_b, num_comparisons=args.pairs, alpha=args.alpha,
        label_a=str(args.run_a), label_b=str(args.run_b),
    )
    print(
        json.dumps(
            {
                "metric": args.metric,
                "t": result.t_statistic,
                "p": result.p_value,
                "alpha": result.alpha,
                "corrected_alpha": result.corrected_alpha,
                "significant": result.significant,
                "note": result.note,
            }
        )
    )
    return 0


# --- parser -----------------------------------------------------------------


def _add_common(p, *, threads=True, allow_unknown=True):
    if threads:
        p.add_argument("--threads", type=int, default=0, help="worker threads (0 = machine parallelism)")
    if allow_unknown:
        p.add_argument("--allow-unknown-codes", action="store_true")


def build_parser() -> _Parser:
    parser = _Parser(prog="tot-bench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--seed", type=int, default=synthetic.DEFAULT_SEED)
    p.add_argument("--docs", type=int, default=synthetic.DEFAULT_NUM_DOCS)
    p.add_argument("--requests", type=int, default=synthetic.DEFAULT_NUM_REQUESTS)
    p.add_argument("--profile", choices=synthetic.PROFILES, default="default")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="join requests to documents, write qrels")
    p.add_argument("--corpus", required=True)
    p.add_argument("--requests", required=True)
    p.add_argument("--out", required=True)
    _add_common(p, threads=False)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build-index", help="build and save an inverted index")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-titles", action="store_true", help="index plots without titles")
    p.add_argument("--stemmer", choices=("krovetz-light", "identity"), default="krovetz-light")
    p.add_argument("--stopwords", default=None, help="custom stopword file")
    p.set_defaults(func=cmd_build_index)

    p = sub.add_parser("stats", help="dump index statistics as JSON")
    p.add_argument("--index", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("search", help="run queries, emit TREC run lines")
    p.add_argument("--index", required=True)
    p.add_argument("--requests", required=True)
    p.add_argument("--k1", type=float, default=1.2)
    p.add_argument("--b", type=float, default=0.75)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--strategy", choices=[s.value for s in StrategyKind], default="both")
    p.add_argument("--ablate", default=None, help="comma-separated codes to drop")
    p.add_argument("--tf-query", action="store_true", help="weight query terms by multiplicity")
    p.add_argument("--run-tag", default="totbench")
    p.add_argument("--out", default=None)
    _add_common(p, threads=False)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("tune", help="grid-search BM25 parameters on a 20% split")
    p.add_argument("--index", required=True)
    p.add_argument("--requests", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--strategy", choices=[s.value for s in StrategyKind], default="both")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--objective", default="success@10", help="success@K or mrr")
    p.add_argument("--depth", type=int, default=evaluation.DEFAULT_DEPTH)
    _add_common(p)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("run", help="run an experiment, write run file and metrics")
    p.add_argument("--config", default=None, help="experiment config file")
    p.add_argument("--index", default=None)
    p.add_argument("--requests", default=None)
    p.add_argument("--qrels", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--k1", type=float, default=1.2)
    p.add_argument("--b", type=float, default=0.75)
    p.add_argument("--tuned", action="store_true", help="tune on the 20% split first")
    p.add_argument("--strategy", choices=[s.value for s in StrategyKind], default="both")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, action="append", default=None)
    p.add_argument("--depth", type=int, default=evaluation.DEFAULT_DEPTH)
    p.add_argument("--eval-split", choices=("heldout", "all"), default="heldout")
    p.add_argument("--tf-query", action="store_true")
    p.add_argument("--run-tag", default="totbench")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="score a TREC run file against qrels")
    p.add_argument("--run", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--k", type=int, action="append", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="per-code sentence ablation experiment")
    p.add_argument("--index", required=True)
    p.add_argument("--requests", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--k1", type=float, default=1.2)
    p.add_argument("--b", type=float, default=0.75)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--codes", default=None, help="comma-separated codes (default: frequent codes)")
    p.add_argument("--min-freq", type=float, default=0.2,
                   help="include codes in more than this fraction of requests")
    p.add_argument("--strategy", choices=[s.value for s in StrategyKind], default="both")
    p.add_argument("--depth", type=int, default=evaluation.DEFAULT_DEPTH)
    p.add_argument("--out", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("agreement", help="per-code Cohen's kappa from dual annotations")
    p.add_argument("--dual", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_agreement)

    p = sub.add_parser("pmi", help="positive-PMI co-occurrence table for an anchor code")
    p.add_argument("--requests", required=True)
    p.add_argument("--anchor", required=True)
    p.add_argument("--level", choices=("sentence", "request"), default="sentence")
    p.add_argument("--json", action="store_true")
    _add_common(p, threads=False)
    p.set_defaults(func=cmd_pmi)

    p = sub.add_parser("ttest", help="paired t-test between two run files")
    p.add_argument("--run-a", required=True)
    p.add_argument("--run-b", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--pairs", type=int, required=True, help="number of comparisons (Bonferroni)")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--metric", choices=("rr", "success"), default="rr")
    p.add_argument("--k", type=int, default=10)
    p.set_defaults(func=cmd_ttest)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, IndexFormatError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
