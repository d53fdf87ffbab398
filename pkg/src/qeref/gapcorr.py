"""Source-gap correspondence extraction.

A gap is scored through the two-word window around it: window k is
(t_k, t_{k+1}) with virtual boundary tokens at the sentence edges. Gap
queries reuse the span scorer interface with the n+1 windows as answer
positions; extraction runs over all source words independently of any
predicted tags and keeps links whose coverage probability exceeds the
threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .align import (
    LexTable,
    SRC2GAP,
    SRC2MT,
    SpanDistribution,
    SpanQuery,
    SpanScorer,
    mark_word,
    pair_probabilities,
    score_spans,
    train_lex_table,
)
from .core import (
    BOS_TOKEN,
    EOS_TOKEN,
    EmptyCorpus,
    IndexOutOfRange,
    MissingPrecomputedEntry,
    NULL_TOKEN,
    SentencePair,
    SourceGapLink,
)
from .corpus import GapPseudoExample

GAP_ADAPTER_HEADER = {
    "header": "gap-window adapter: arrays index 0..n are windows g_0..g_n, "
              "last element is the null mass",
}


@dataclass(frozen=True)
class GapWindow:
    gap_index: int
    left: str
    right: str


def gap_window(gap_index: int, mt: Sequence[str]) -> GapWindow:
    """The two MT words surrounding a gap, with BOS/EOS at the edges."""
    n = len(mt)
    if not 0 <= gap_index <= n:
        raise IndexOutOfRange(f"gap index {gap_index} outside 0..{n}")
    left = mt[gap_index - 1] if gap_index > 0 else BOS_TOKEN
    right = mt[gap_index] if gap_index < n else EOS_TOKEN
    return GapWindow(gap_index, left, right)


class NativeGapScorer:
    """Scores each gap window by the product of the marked word's lexical
    affinities to the two window tokens; the window table lives in the
    src2mt slot of a LexTable.

    The product makes the evidence conjunctive: a window only scores when
    both its boundary tokens are plausible context for the source word,
    which is what separates a gap from the neighbouring gaps that share
    one of its tokens.
    """

    def __init__(self, table: LexTable):
        self.table = table

    def score_spans(self, query: SpanQuery) -> SpanDistribution:
        row = self.table.row(SRC2MT, query.marked_word)
        n = len(query.context_sentence)
        scores = np.zeros(n + 2)
        scores[0] = row.get(NULL_TOKEN, 0.0)
        for k in range(n + 1):
            w = gap_window(k, query.context_sentence)
            scores[k + 1] = row.get(w.left, 0.0) * row.get(w.right, 0.0)
        total = scores.sum()
        if total <= 0.0:
            scores[0] = 1.0
            total = 1.0
        v = scores / total
        return SpanDistribution(v, v)


def train_gap_scorer(examples: Sequence[GapPseudoExample], iterations: int = 10,
                     seed: int = 0) -> NativeGapScorer:
    """Learn window-token affinities from gold gap links by EM.

    Each gold link contributes one (source word, window tokens) pair;
    zero iterations leave the uniform co-occurrence table.
    """
    if not examples:
        raise EmptyCorpus("no pseudo examples to train on")
    pairs = []
    for ex in examples:
        for link in sorted(ex.gold_gap_links):
            w = gap_window(link.gap_index, ex.pair.mt)
            pairs.append(((ex.pair.source[link.src_index],), (w.left, w.right)))
    table = train_lex_table(pairs, iterations=iterations, seed=seed)
    return NativeGapScorer(table)


def extract_source_gap(pair: SentencePair, scorer: SpanScorer,
                       threshold: float = 0.4) -> frozenset[SourceGapLink]:
    """Link every source word to each gap whose window coverage
    probability exceeds the threshold (strict)."""
    links = []
    for i in range(pair.m):
        query = SpanQuery(mark_word(pair.source, i), pair.mt, SRC2GAP,
                          sentence_id=pair.id)
        coverage = pair_probabilities(score_spans(scorer, query))
        for k in range(pair.n + 1):
            p = float(coverage[k + 1])
            if p > threshold:
                links.append(SourceGapLink(i, k, prob=p))
    return frozenset(links)


def dump_gap_adapter_entry(sentence_id: str, word_index: int,
                           dist: SpanDistribution) -> str:
    """Serialize one gap distribution to the adapter file layout: windows
    first (indices 0..n), null mass last."""
    ps = list(dist.p_start[1:]) + [dist.p_start[0]]
    pe = list(dist.p_end[1:]) + [dist.p_end[0]]
    return json.dumps({
        "id": sentence_id,
        "direction": SRC2GAP,
        "word_index": word_index,
        "p_start": [float(x) for x in ps],
        "p_end": [float(x) for x in pe],
    }, ensure_ascii=False)


def write_gap_adapter(path: str, entries: Iterable[tuple[str, int, SpanDistribution]]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(GAP_ADAPTER_HEADER, ensure_ascii=False) + "\n")
        for sentence_id, word_index, dist in entries:
            f.write(dump_gap_adapter_entry(sentence_id, word_index, dist) + "\n")


class GapFileAdapter:
    """Precomputed gap distributions keyed by (sentence id, word index)."""

    def __init__(self, entries: dict[tuple[str, int], SpanDistribution]):
        self.entries = entries

    @classmethod
    def load(cls, path: str) -> "GapFileAdapter":
        entries = {}
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                if "header" in obj:
                    continue
                ps = [obj["p_start"][-1]] + list(obj["p_start"][:-1])
                pe = [obj["p_end"][-1]] + list(obj["p_end"][:-1])
                entries[(obj["id"], int(obj["word_index"]))] = SpanDistribution(ps, pe)
        return cls(entries)

    def score_spans(self, query: SpanQuery) -> SpanDistribution:
        key = (query.sentence_id, query.marked_index)
        if key not in self.entries:
            raise MissingPrecomputedEntry(key)
        return self.entries[key]
