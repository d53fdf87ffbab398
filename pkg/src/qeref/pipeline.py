"""End-to-end driver: align -> tag -> refine -> gapcorr -> eval.

A pipeline run is configured by a TOML file (every value overridable on
the command line), trains or loads the scorers, writes the refined
JSONL plus the evaluation report, and optionally saves a model bundle
that the analysis service can serve. Runs are deterministic for a fixed
seed and worker count independent.
"""

from __future__ import annotations

import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from .align import (
    FileAdapterScorer,
    LexTable,
    NativeLexScorer,
    extract_extended_alignment,
    train_lex_table,
)
from .core import (
    CorrespondenceSet,
    OriginalTag,
    QERefError,
    RefinedTag,
    SentencePair,
    TagAssignment,
)
from .corpus import (
    QECorpus,
    attach_refined,
    degenerate_tags,
    generate_gap_pseudo_corpus,
    parse_qe_corpus,
    read_alignment_file,
    read_refined_jsonl,
    write_refined_jsonl,
)
from .gapcorr import GapFileAdapter, NativeGapScorer, extract_source_gap, train_gap_scorer
from .metrics import (
    DegenerateLabels,
    EvalReport,
    MT_REFINED_CLASSES,
    SOURCE_REFINED_CLASSES,
    confusion,
    interleave_mt,
    mcc,
    per_class_prf,
    roc_auc,
    set_prf,
    weighted_mean_f1_sequences,
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

SEED_ENV_VAR = "QEREF_SEED"


class StageError(QERefError):
    """Wraps a failure with the pipeline stage it happened in."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")


@dataclass
class PipelineConfig:
    src: str = ""
    mt: str = ""
    source_tags: Optional[str] = None
    mt_tags: Optional[str] = None
    pe: Optional[str] = None
    src_pe_alignment: Optional[str] = None
    refined_gold: Optional[str] = None

    align_scorer: str = "native"  # "native" | "adapter:<path>"
    align_iterations: int = 5
    align_threshold: float = 0.4

    tag_scorer: str = "native"
    tag_epochs: int = 50
    tag_learning_rate: float = 0.1
    tag_threshold: str = "optimize"  # "optimize" | numeric string

    gap_scorer: str = "native"  # "native" | "adapter:<path>" | "none"
    gap_threshold: float = 0.4
    gap_iterations: int = 5
    drop_rate: float = 0.15

    gaps_all_ok: bool = False
    seed: int = 0
    workers: int = 1
    out_dir: str = "out"
    save_model: bool = True

    @classmethod
    def from_toml(cls, path: str, overrides: Optional[dict] = None) -> "PipelineConfig":
        with open(path, "rb") as f:
            raw = tomllib.load(f)
        cfg = cls()
        data = raw.get("data", {})
        for key in ("src", "mt", "source_tags", "mt_tags", "pe",
                    "src_pe_alignment", "refined_gold"):
            if key in data:
                setattr(cfg, key, data[key])
        al = raw.get("align", {})
        cfg.align_scorer = al.get("scorer", cfg.align_scorer)
        cfg.align_iterations = al.get("iterations", cfg.align_iterations)
        cfg.align_threshold = al.get("threshold", cfg.align_threshold)
        tg = raw.get("tagger", {})
        cfg.tag_scorer = tg.get("scorer", cfg.tag_scorer)
        cfg.tag_epochs = tg.get("epochs", cfg.tag_epochs)
        cfg.tag_learning_rate = tg.get("learning_rate", cfg.tag_learning_rate)
        cfg.tag_threshold = str(tg.get("threshold", cfg.tag_threshold))
        gp = raw.get("gaps", {})
        cfg.gap_scorer = gp.get("scorer", cfg.gap_scorer)
        cfg.gap_threshold = gp.get("threshold", cfg.gap_threshold)
        cfg.gap_iterations = gp.get("iterations", cfg.gap_iterations)
        cfg.drop_rate = gp.get("drop_rate", cfg.drop_rate)
        cfg.gaps_all_ok = raw.get("gaps_all_ok", cfg.gaps_all_ok)
        cfg.seed = raw.get("seed", cfg.seed)
        cfg.workers = raw.get("workers", cfg.workers)
        out = raw.get("output", {})
        cfg.out_dir = out.get("dir", cfg.out_dir)
        cfg.save_model = out.get("save_model", cfg.save_model)
        for key, value in (overrides or {}).items():
            if value is not None:
                setattr(cfg, key, value)
        if SEED_ENV_VAR in os.environ:
            cfg.seed = int(os.environ[SEED_ENV_VAR])
        return cfg


@dataclass
class ModelBundle:
    """Everything the analysis service needs to process one sentence pair."""

    align_fwd: object = None
    align_bwd: object = None
    tag_scorer: object = None
    gap_scorer: object = None
    lex_table: Optional[LexTable] = None
    tau: float = 0.5
    align_threshold: float = 0.4
    gap_threshold: float = 0.4
    gaps_all_ok: bool = False

    def save(self, out_dir: str, meta_extra: Optional[dict] = None) -> None:
        os.makedirs(out_dir, exist_ok=True)
        meta = {
            "version": __version__,
            "tau": self.tau,
            "align_threshold": self.align_threshold,
            "gap_threshold": self.gap_threshold,
            "gaps_all_ok": self.gaps_all_ok,
            "align": "native" if isinstance(self.align_fwd, NativeLexScorer) else "adapter",
            "tagger": "native" if isinstance(self.tag_scorer, NativeTagger) else "adapter",
            "gaps": ("none" if self.gap_scorer is None
                     else "native" if isinstance(self.gap_scorer, NativeGapScorer)
                     else "adapter"),
        }
        meta.update(meta_extra or {})
        if self.lex_table is not None:
            self.lex_table.save(os.path.join(out_dir, "lex"))
        if isinstance(self.tag_scorer, NativeTagger):
            self.tag_scorer.save(os.path.join(out_dir, "tagger.json"))
        if isinstance(self.gap_scorer, NativeGapScorer):
            self.gap_scorer.table.save(os.path.join(out_dir, "gap_lex"))
        with open(os.path.join(out_dir, "meta.json"), "w", encoding="utf-8") as f:
            json.dump(meta, f, indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, model_dir: str) -> "ModelBundle":
        with open(os.path.join(model_dir, "meta.json"), encoding="utf-8") as f:
            meta = json.load(f)
        bundle = cls(tau=meta["tau"], align_threshold=meta["align_threshold"],
                     gap_threshold=meta["gap_threshold"],
                     gaps_all_ok=meta.get("gaps_all_ok", False))
        if meta["align"] == "native":
            bundle.lex_table = LexTable.load(os.path.join(model_dir, "lex"))
            scorer = NativeLexScorer(bundle.lex_table)
            bundle.align_fwd = bundle.align_bwd = scorer
        else:
            scorer = FileAdapterScorer.load(os.path.join(model_dir, meta["align_path"]))
            bundle.align_fwd = bundle.align_bwd = scorer
        if meta["tagger"] == "native":
            bundle.tag_scorer = NativeTagger.load(os.path.join(model_dir, "tagger.json"))
        else:
            bundle.tag_scorer = FileAdapterTagger.load(
                os.path.join(model_dir, meta["tagger_path"]))
        if meta["gaps"] == "native":
            bundle.gap_scorer = NativeGapScorer(
                LexTable.load(os.path.join(model_dir, "gap_lex")))
        elif meta["gaps"] == "adapter":
            bundle.gap_scorer = GapFileAdapter.load(
                os.path.join(model_dir, meta["gaps_path"]))
        return bundle


@dataclass
class Analysis:
    pair: SentencePair
    probs: object
    original: TagAssignment
    word_links: frozenset
    gap_links: frozenset
    refined: TagAssignment


def analyze_pair(pair: SentencePair, bundle: ModelBundle) -> Analysis:
    """Run the full per-sentence pipeline against a model bundle.

    Failures surface as StageError naming the stage that broke.
    """
    stage = "align"
    try:
        word_links = extract_extended_alignment(pair, bundle.align_fwd,
                                                bundle.align_bwd,
                                                bundle.align_threshold)
        stage = "tag"
        context = TagContext(word_links=word_links, lex_table=bundle.lex_table)
        probs = bundle.tag_scorer.bad_probabilities(pair, context)
        original = apply_threshold(probs, bundle.tau)
        stage = "refine"
        refined_words = refine_word_tags(original, word_links)
        stage = "gapcorr"
        if bundle.gap_scorer is not None:
            gap_links = extract_source_gap(pair, bundle.gap_scorer,
                                           bundle.gap_threshold)
        else:
            gap_links = frozenset()
        if bundle.gaps_all_ok:
            gap_tags = (RefinedTag.OK,) * (pair.n + 1)
        else:
            gap_tags = assign_gap_tags(gap_links, pair.n)
        refined = combine_refined(refined_words, gap_tags)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(stage, exc) from exc
    return Analysis(pair, probs, original, word_links, gap_links, refined)


@dataclass
class PipelineResult:
    corpus: QECorpus
    analyses: list[Analysis]
    tau: float
    report: EvalReport
    bundle: ModelBundle
    artifacts: dict = field(default_factory=dict)


def _scorer_spec(value: str) -> tuple[str, Optional[str]]:
    if value == "native" or value == "none":
        return value, None
    if value.startswith("adapter:"):
        return "adapter", value.split(":", 1)[1]
    raise ValueError(f"unknown scorer spec {value!r}")


def _parallel_map(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def evaluate_predictions(corpus: QECorpus, analyses: list[Analysis],
                         gold_refined: Optional[QECorpus] = None) -> EvalReport:
    """Score predictions against the corpus's original tags and, when
    available, gold refined tags and correspondences."""
    report = EvalReport()
    golds = [e.original for e in corpus]
    if all(g is not None for g in golds):
        src_pred, src_gold = [], []
        mt_pred, mt_gold = [], []
        inter_pred, inter_gold = [], []
        probs_src, probs_mt = [], []
        for entry, gold, analysis in zip(corpus, golds, analyses):
            src_pred.extend(analysis.original.source_tags)
            src_gold.extend(gold.source_tags)
            mt_pred.extend(analysis.original.mt_word_tags)
            mt_gold.extend(gold.mt_word_tags)
            probs_src.extend(analysis.probs.source_probs)
            probs_mt.extend(analysis.probs.mt_word_probs)
            if gold.gap_tags is not None:
                pred_all = degenerate_tags(analysis.refined)
                inter_pred.extend(
                    OriginalTag(t) for t in interleave_mt(pred_all))
                inter_gold.extend(OriginalTag(t) for t in interleave_mt(gold))
        report.source_confusion = confusion(src_pred, src_gold)
        report.mt_confusion = confusion(mt_pred, mt_gold)
        report.source_mcc = mcc(report.source_confusion)
        report.mt_word_mcc = mcc(report.mt_confusion)
        if inter_gold:
            report.mt_mcc = mcc(confusion(inter_pred, inter_gold))
        for side, probs, refs in (("source", probs_src, src_gold),
                                  ("mt", probs_mt, mt_gold)):
            try:
                points, auc = roc_auc(probs, refs)
            except DegenerateLabels:
                continue
            report.roc[side] = points
            report.auc[side] = auc
    if gold_refined is not None:
        gold_entries = {e.pair.id: e for e in gold_refined}
        pred_corr, gold_corr = set(), set()
        src_pred_seq, src_gold_seq = [], []
        mt_pred_seq, mt_gold_seq = [], []
        for entry, analysis in zip(corpus, analyses):
            gold_entry = gold_entries.get(entry.pair.id)
            if gold_entry is None or gold_entry.refined is None:
                continue
            src_pred_seq.extend(t.value for t in analysis.refined.source_tags)
            src_gold_seq.extend(t.value for t in gold_entry.refined.source_tags)
            mt_pred_seq.extend(interleave_mt(analysis.refined))
            mt_gold_seq.extend(interleave_mt(gold_entry.refined))
            if gold_entry.correspondences is not None:
                eid = entry.pair.id
                pred_corr |= {(eid, "w", i, j) for (i, j)
                              in CorrespondenceSet(analysis.word_links).word_pairs()}
                pred_corr |= {(eid, "g", i, k) for (i, k)
                              in CorrespondenceSet(gap_links=analysis.gap_links).gap_pairs()}
                gold_corr |= {(eid, "w", i, j) for (i, j)
                              in gold_entry.correspondences.word_pairs()}
                gold_corr |= {(eid, "g", i, k) for (i, k)
                              in gold_entry.correspondences.gap_pairs()}
        if src_pred_seq:
            # corpus-level weighted mean over the pooled sequences
            report.weighted_f1_source = weighted_mean_f1_sequences(
                src_pred_seq, src_gold_seq, SOURCE_REFINED_CLASSES)
            report.weighted_f1_mt = weighted_mean_f1_sequences(
                mt_pred_seq, mt_gold_seq, MT_REFINED_CLASSES)
            report.per_class_f1 = {
                "source": per_class_prf(src_pred_seq, src_gold_seq,
                                        SOURCE_REFINED_CLASSES),
                "mt": per_class_prf(mt_pred_seq, mt_gold_seq, MT_REFINED_CLASSES),
            }
        if gold_corr or pred_corr:
            report.alignment = set_prf(pred_corr, gold_corr)
    return report


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    stage = "load"
    try:
        corpus = parse_qe_corpus(config.src, config.mt, config.source_tags,
                                 config.mt_tags, config.pe)
        if config.src_pe_alignment:
            alignments = read_alignment_file(config.src_pe_alignment)
            for entry, pairs in zip(corpus, alignments):
                entry.src_pe_alignment = frozenset(pairs)
        gold_refined = None
        if config.refined_gold:
            records = read_refined_jsonl(config.refined_gold)
            gold_refined = attach_refined(
                QECorpus([replace(e, refined=None, correspondences=None)
                          for e in corpus.entries]), records)

        stage = "align"
        kind, path = _scorer_spec(config.align_scorer)
        lex_table = None
        if kind == "native":
            lex_table = train_lex_table([(e.pair.source, e.pair.mt) for e in corpus],
                                        iterations=config.align_iterations,
                                        seed=config.seed)
            fwd = bwd = NativeLexScorer(lex_table)
        else:
            fwd = bwd = FileAdapterScorer.load(path)
        word_links = _parallel_map(
            lambda e: extract_extended_alignment(e.pair, fwd, bwd,
                                                 config.align_threshold),
            corpus.entries, config.workers)

        stage = "tag"
        kind, path = _scorer_spec(config.tag_scorer)
        if kind == "native":
            training = [(e.pair, e.original) for e in corpus]
            if any(t is None for _, t in training):
                raise QERefError("native tagger needs original tags in the corpus")
            tag_scorer = train_native_tagger(training, word_links, lex_table,
                                             epochs=config.tag_epochs,
                                             learning_rate=config.tag_learning_rate,
                                             seed=config.seed)
        else:
            tag_scorer = FileAdapterTagger.load(path)
        probs = [tag_scorer.bad_probabilities(
                     e.pair, TagContext(word_links=links, lex_table=lex_table))
                 for e, links in zip(corpus, word_links)]
        if config.tag_threshold == "optimize":
            dev = [(p, e.original) for p, e in zip(probs, corpus)
                   if e.original is not None]
            if not dev:
                raise QERefError("threshold optimization needs original tags")
            tau = optimize_threshold(dev)
        else:
            tau = float(config.tag_threshold)

        stage = "gapcorr"
        kind, path = _scorer_spec(config.gap_scorer)
        gap_scorer = None
        if kind == "native":
            pseudo = generate_gap_pseudo_corpus(corpus, config.drop_rate,
                                                config.seed)
            if pseudo:
                gap_scorer = train_gap_scorer(pseudo, iterations=config.gap_iterations,
                                              seed=config.seed)
        elif kind == "adapter":
            gap_scorer = GapFileAdapter.load(path)

        stage = "refine"
        bundle = ModelBundle(align_fwd=fwd, align_bwd=bwd, tag_scorer=tag_scorer,
                             gap_scorer=gap_scorer, lex_table=lex_table, tau=tau,
                             align_threshold=config.align_threshold,
                             gap_threshold=config.gap_threshold,
                             gaps_all_ok=config.gaps_all_ok)
        analyses = []
        for entry, links, p in zip(corpus, word_links, probs):
            original = apply_threshold(p, tau)
            refined_words = refine_word_tags(original, links)
            if gap_scorer is not None:
                gap_links = extract_source_gap(entry.pair, gap_scorer,
                                               config.gap_threshold)
            else:
                gap_links = frozenset()
            if config.gaps_all_ok:
                gap_tags = (RefinedTag.OK,) * (entry.pair.n + 1)
            else:
                gap_tags = assign_gap_tags(gap_links, entry.pair.n)
            analyses.append(Analysis(entry.pair, p, original, links, gap_links,
                                     combine_refined(refined_words, gap_tags)))

        stage = "eval"
        report = evaluate_predictions(corpus, analyses, gold_refined)

        stage = "write"
        artifacts = {}
        os.makedirs(config.out_dir, exist_ok=True)
        refined_corpus = QECorpus([
            replace(e, refined=a.refined,
                    correspondences=CorrespondenceSet(a.word_links, a.gap_links))
            for e, a in zip(corpus.entries, analyses)])
        refined_path = os.path.join(config.out_dir, "refined.jsonl")
        write_refined_jsonl(refined_corpus, refined_path)
        artifacts["refined"] = refined_path
        report_json = os.path.join(config.out_dir, "report.json")
        with open(report_json, "w", encoding="utf-8") as f:
            f.write(report.to_json())
        artifacts["report_json"] = report_json
        report_txt = os.path.join(config.out_dir, "report.txt")
        with open(report_txt, "w", encoding="utf-8") as f:
            f.write(report.to_text())
        artifacts["report_txt"] = report_txt
        for side in sorted(report.roc):
            roc_path = os.path.join(config.out_dir, f"roc_{side}.csv")
            report.write_roc_csv(roc_path, side)
            artifacts[f"roc_{side}"] = roc_path
        if config.save_model:
            model_dir = os.path.join(config.out_dir, "model")
            meta_extra = {}
            kind, path = _scorer_spec(config.align_scorer)
            if kind == "adapter":
                meta_extra["align_path"] = os.path.relpath(path, model_dir)
            kind, path = _scorer_spec(config.tag_scorer)
            if kind == "adapter":
                meta_extra["tagger_path"] = os.path.relpath(path, model_dir)
            kind, path = _scorer_spec(config.gap_scorer)
            if kind == "adapter":
                meta_extra["gaps_path"] = os.path.relpath(path, model_dir)
            bundle.save(model_dir, meta_extra)
            artifacts["model"] = model_dir
        return PipelineResult(corpus, analyses, tau, report, bundle, artifacts)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(stage, exc) from exc
