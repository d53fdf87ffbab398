"""Command-line driver: one verb per pipeline stage plus `pipeline` and
`serve`."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .align import (
    FileAdapterScorer,
    LexTable,
    NativeLexScorer,
    extract_extended_alignment,
    train_lex_table,
)
from .core import QERefError
from .corpus import (
    QECorpus,
    attach_refined,
    format_source_gap_line,
    generate_gap_pseudo_corpus,
    parse_qe_corpus,
    parse_source_gap_line,
    re_interleave,
    read_alignment_file,
    read_refined_jsonl,
    write_alignment_file,
    write_refined_jsonl,
)
from .gapcorr import train_gap_scorer
from .pipeline import (
    ModelBundle,
    PipelineConfig,
    StageError,
    evaluate_predictions,
    run_pipeline,
)
from .refine import assign_gap_tags, combine_refined, refine_word_tags
from .tagger import (
    FileAdapterTagger,
    NativeTagger,
    TagContext,
    apply_threshold,
    optimize_threshold,
    train_native_tagger,
)


def _load_corpus(args) -> QECorpus:
    return parse_qe_corpus(args.src, args.mt, getattr(args, "source_tags", None),
                           getattr(args, "mt_tags", None), getattr(args, "pe", None))


def _span_scorer(spec: str):
    if spec == "native":
        return None
    if spec.startswith("adapter:"):
        return FileAdapterScorer.load(spec.split(":", 1)[1])
    raise QERefError(f"unknown scorer spec {spec!r}")


def cmd_train_aligner(args) -> int:
    with open(args.src, encoding="utf-8") as f:
        src = [line.split() for line in f.read().splitlines()]
    with open(args.tgt, encoding="utf-8") as f:
        tgt = [line.split() for line in f.read().splitlines()]
    table = train_lex_table(list(zip(src, tgt)), iterations=args.iterations,
                            seed=args.seed)
    table.save(args.out)
    print(f"wrote {args.out}.src2mt.tsv and {args.out}.mt2src.tsv")
    return 0


def cmd_align(args) -> int:
    corpus = _load_corpus(args)
    scorer = _span_scorer(args.scorer)
    if scorer is None:
        scorer = NativeLexScorer(LexTable.load(args.lex))
    alignments = []
    for entry in corpus:
        links = extract_extended_alignment(entry.pair, scorer, scorer,
                                           args.threshold)
        alignments.append({(l.src_index, l.mt_index) for l in links})
    write_alignment_file(args.out, alignments)
    print(f"wrote {args.out}")
    return 0


def cmd_train_tagger(args) -> int:
    corpus = _load_corpus(args)
    lex = LexTable.load(args.lex)
    if args.alignments:
        link_sets = read_alignment_file(args.alignments)
        word_links = [frozenset(_as_links(s)) for s in link_sets]
    else:
        scorer = NativeLexScorer(lex)
        word_links = [extract_extended_alignment(e.pair, scorer, scorer, 0.4)
                      for e in corpus]
    training = [(e.pair, e.original) for e in corpus]
    tagger = train_native_tagger(training, word_links, lex, epochs=args.epochs,
                                 learning_rate=args.learning_rate, seed=args.seed)
    tagger.save(args.out)
    print(f"wrote {args.out} (final loss {tagger.loss_history[-1]:.6f})")
    return 0


def _as_links(pairs):
    from .core import AlignmentLink
    return [AlignmentLink(i, j) for i, j in pairs]


def cmd_tag(args) -> int:
    corpus = _load_corpus(args)
    lex = LexTable.load(args.lex) if args.lex else None
    if args.scorer == "native":
        tagger = NativeTagger.load(args.model)
    elif args.scorer.startswith("adapter:"):
        tagger = FileAdapterTagger.load(args.scorer.split(":", 1)[1])
    else:
        raise QERefError(f"unknown scorer spec {args.scorer!r}")
    scorer = NativeLexScorer(lex) if lex else None
    lines = []
    all_probs = []
    for entry in corpus:
        links = (extract_extended_alignment(entry.pair, scorer, scorer, 0.4)
                 if scorer else frozenset())
        probs = tagger.bad_probabilities(entry.pair,
                                         TagContext(word_links=links, lex_table=lex))
        all_probs.append(probs)
        lines.append(FileAdapterTagger.dump_entry(entry.pair.id, probs))
    with open(args.out, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    print(f"wrote {args.out}")
    if args.tags_out:
        # threshold into WMT-layout tag files; gaps default to OK
        tau = args.threshold
        src_lines, mt_lines = [], []
        for entry, probs in zip(corpus, all_probs):
            tags = apply_threshold(probs, tau)
            src_lines.append(" ".join(t.value for t in tags.source_tags))
            mt_lines.append(" ".join(re_interleave(
                [t.value for t in tags.mt_word_tags],
                ["OK"] * (entry.pair.n + 1))))
        with open(f"{args.tags_out}.source_tags", "w", encoding="utf-8") as f:
            f.write("\n".join(src_lines) + "\n")
        with open(f"{args.tags_out}.mt_tags", "w", encoding="utf-8") as f:
            f.write("\n".join(mt_lines) + "\n")
        print(f"wrote {args.tags_out}.source_tags and {args.tags_out}.mt_tags "
              f"(threshold {tau})")
    return 0


def cmd_optimize_threshold(args) -> int:
    corpus = _load_corpus(args)
    adapter = FileAdapterTagger.load(args.probs)
    dev = [(adapter.bad_probabilities(e.pair, TagContext()), e.original)
           for e in corpus]
    tau = optimize_threshold(dev)
    print(f"{tau!r}")
    return 0


def cmd_refine(args) -> int:
    corpus = _load_corpus(args)
    link_sets = read_alignment_file(args.alignments)
    gap_sets = (read_alignment_file(args.source_gaps, parser=parse_source_gap_line)
                if args.source_gaps else [set()] * len(corpus))
    from dataclasses import replace
    from .core import CorrespondenceSet, SourceGapLink
    entries = []
    for entry, links, gaps in zip(corpus, link_sets, gap_sets):
        refined_words = refine_word_tags(entry.original, links)
        gap_tags = assign_gap_tags({SourceGapLink(i, k) for i, k in gaps},
                                   entry.pair.n)
        refined = combine_refined(refined_words, gap_tags)
        corr = CorrespondenceSet(_as_links(links),
                                 [SourceGapLink(i, k) for i, k in gaps])
        entries.append(replace(entry, refined=refined, correspondences=corr))
    write_refined_jsonl(QECorpus(entries), args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    from .pipeline import Analysis
    from .corpus import degenerate_tags
    from .tagger import TagProbabilities
    corpus = _load_corpus(args)
    pred = attach_refined(corpus, read_refined_jsonl(args.pred))
    gold = attach_refined(QECorpus([e for e in corpus.entries]),
                          read_refined_jsonl(args.gold)) if args.gold else None
    analyses = []
    for entry in pred:
        if entry.refined is None:
            raise QERefError(f"entry {entry.pair.id} missing from predictions")
        original = degenerate_tags(entry.refined)
        corr = entry.correspondences
        probs = TagProbabilities(
            [1.0 if t.value != "OK" else 0.0 for t in entry.refined.source_tags],
            [1.0 if t.value != "OK" else 0.0 for t in entry.refined.mt_word_tags])
        analyses.append(Analysis(entry.pair, probs, original,
                                 corr.word_links, corr.gap_links, entry.refined))
    base = QECorpus([e for e in corpus.entries])
    report = evaluate_predictions(base, analyses, gold)
    text = report.to_text()
    print(text, end="")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(report.to_json())
        print(f"wrote {args.out}")
    return 0


def cmd_pseudo_gaps(args) -> int:
    corpus = _load_corpus(args)
    alignments = read_alignment_file(args.src_pe_alignment)
    for entry, pairs in zip(corpus, alignments):
        entry.src_pe_alignment = frozenset(pairs)
    examples = generate_gap_pseudo_corpus(corpus, args.drop_rate, args.seed)
    with open(args.out_mt, "w", encoding="utf-8") as f:
        for ex in examples:
            f.write(" ".join(ex.pair.mt) + "\n")
    with open(args.out_links, "w", encoding="utf-8") as f:
        for ex in examples:
            f.write(format_source_gap_line(
                {(l.src_index, l.gap_index) for l in ex.gold_gap_links}) + "\n")
    print(f"wrote {len(examples)} pseudo examples to {args.out_mt} / {args.out_links}")
    return 0


def cmd_train_gaps(args) -> int:
    corpus = _load_corpus(args)
    alignments = read_alignment_file(args.src_pe_alignment)
    for entry, pairs in zip(corpus, alignments):
        entry.src_pe_alignment = frozenset(pairs)
    examples = generate_gap_pseudo_corpus(corpus, args.drop_rate, args.seed)
    scorer = train_gap_scorer(examples, iterations=args.iterations, seed=args.seed)
    scorer.table.save(args.out)
    print(f"wrote {args.out}.src2mt.tsv ({len(examples)} pseudo examples)")
    return 0


def cmd_pipeline(args) -> int:
    overrides = {}
    if args.gaps_all_ok:
        overrides["gaps_all_ok"] = True
    if args.out_dir:
        overrides["out_dir"] = args.out_dir
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    config = PipelineConfig.from_toml(args.config, overrides)
    result = run_pipeline(config)
    print(result.report.to_text(), end="")
    print(f"threshold {result.tau!r}")
    for name, path in sorted(result.artifacts.items()):
        print(f"{name}: {path}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn
    from .service.app import create_app
    bundle = ModelBundle.load(args.model_dir)
    app = create_app(bundle)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qeref",
        description="Refined word-level QE: extended alignment, REP/INS/DEL "
                    "tags, gap correspondences, evaluation, and a service.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def corpus_args(p, tags=True, pe=False):
        p.add_argument("--src", required=True)
        p.add_argument("--mt", required=True)
        if tags:
            p.add_argument("--source-tags", dest="source_tags")
            p.add_argument("--mt-tags", dest="mt_tags")
        if pe:
            p.add_argument("--pe")

    p = sub.add_parser("train-aligner", help="EM-train the lexical table")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--iterations", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_train_aligner)

    p = sub.add_parser("align", help="extract extended word alignment")
    corpus_args(p, tags=False)
    p.add_argument("--scorer", default="native", help="native | adapter:PATH")
    p.add_argument("--lex", help="lexical table prefix for the native scorer")
    p.add_argument("--threshold", type=float, default=0.4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("train-tagger", help="train the native tagger")
    corpus_args(p)
    p.add_argument("--lex", required=True)
    p.add_argument("--alignments", help="pharaoh word links; extracted natively if absent")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--learning-rate", type=float, default=0.1, dest="learning_rate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_tagger)

    p = sub.add_parser("tag", help="emit BAD probabilities as JSONL")
    corpus_args(p, tags=False)
    p.add_argument("--scorer", default="native", help="native | adapter:PATH")
    p.add_argument("--model", help="native tagger JSON")
    p.add_argument("--lex", help="lexical table prefix (native features)")
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float, default=0.5,
                   help="cut used when --tags-out is given")
    p.add_argument("--tags-out", dest="tags_out",
                   help="also write thresholded WMT-layout tag files "
                        "(<prefix>.source_tags, <prefix>.mt_tags)")
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("optimize-threshold", help="MCC-optimal threshold search")
    corpus_args(p)
    p.add_argument("--probs", required=True, help="probabilities JSONL")
    p.set_defaults(func=cmd_optimize_threshold)

    p = sub.add_parser("refine", help="refine OK/BAD tags with alignments")
    corpus_args(p)
    p.add_argument("--alignments", required=True, help="pharaoh word links")
    p.add_argument("--source-gaps", dest="source_gaps", help="i-gK gap links")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("evaluate", help="score refined predictions")
    corpus_args(p)
    p.add_argument("--pred", required=True, help="predicted refined JSONL")
    p.add_argument("--gold", help="gold refined JSONL")
    p.add_argument("--out", help="report JSON path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pseudo-gaps", help="generate source-gap pseudo data")
    corpus_args(p, tags=False, pe=True)
    p.add_argument("--src-pe-alignment", required=True, dest="src_pe_alignment")
    p.add_argument("--drop-rate", type=float, default=0.15, dest="drop_rate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-mt", required=True, dest="out_mt")
    p.add_argument("--out-links", required=True, dest="out_links")
    p.set_defaults(func=cmd_pseudo_gaps)

    p = sub.add_parser("train-gaps", help="train the native gap scorer")
    corpus_args(p, tags=False, pe=True)
    p.add_argument("--src-pe-alignment", required=True, dest="src_pe_alignment")
    p.add_argument("--drop-rate", type=float, default=0.15, dest="drop_rate")
    p.add_argument("--iterations", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_gaps)

    p = sub.add_parser("pipeline", help="run align -> tag -> refine -> gaps -> eval")
    p.add_argument("config", help="TOML config file")
    p.add_argument("--gaps-all-ok", action="store_true", dest="gaps_all_ok",
                   help="emit OK for every MT gap")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("serve", help="start the analysis service")
    p.add_argument("--model-dir", required=True, dest="model_dir")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"pipeline failed at stage {exc.stage}: {exc.cause}", file=sys.stderr)
        return 2
    except QERefError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
