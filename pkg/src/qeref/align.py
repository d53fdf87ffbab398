"""Extended word alignment via cross-lingual span scoring.

Each word of one sentence is marked and scored against the other
sentence, yielding start/end distributions over target positions plus a
reserved null position (index 0 of every distribution vector). Word
pair probabilities are the summed mass of spans covering a position,
and links survive when the mean of both directions exceeds the
threshold (default 0.4, strict).

Scorers are pluggable: NativeLexScorer backs the distribution with a
lexical translation table trained by EM; FileAdapterScorer replays
precomputed distributions (e.g. exported from a fine-tuned encoder).
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

import numpy as np

from .core import (
    AlignmentLink,
    EmptyCorpus,
    InfiniteLoss,
    MARK_TOKEN,
    MissingPrecomputedEntry,
    NULL_TOKEN,
    SentencePair,
    ValidationError,
)

SRC2MT = "src2mt"
MT2SRC = "mt2src"
SRC2GAP = "src2gap"  # answer positions are the n+1 gap windows

PROB_SUM_TOL = 1e-9
LOSS_EPS = 1e-12


@dataclass(frozen=True)
class SpanQuery:
    """One marked word of the query side against the full answer side."""

    marked_sentence: tuple[str, ...]
    context_sentence: tuple[str, ...]
    direction: str
    sentence_id: Optional[str] = None

    def __init__(self, marked_sentence: Sequence[str], context_sentence: Sequence[str],
                 direction: str, sentence_id: Optional[str] = None):
        object.__setattr__(self, "marked_sentence", tuple(marked_sentence))
        object.__setattr__(self, "context_sentence", tuple(context_sentence))
        object.__setattr__(self, "direction", direction)
        object.__setattr__(self, "sentence_id", sentence_id)
        marks = [i for i, t in enumerate(self.marked_sentence) if t == MARK_TOKEN]
        if len(marks) != 2 or marks[1] - marks[0] != 2:
            raise ValidationError("query must mark exactly one word")
        if direction not in (SRC2MT, MT2SRC, SRC2GAP):
            raise ValidationError(f"unknown direction {direction!r}")

    @property
    def answer_positions(self) -> int:
        """Number of real answer positions: context words, or the n+1 gap
        windows when querying against gaps."""
        n = len(self.context_sentence)
        return n + 1 if self.direction == SRC2GAP else n

    @property
    def marked_index(self) -> int:
        """Index of the marked word in the unmarked sentence."""
        return self.marked_sentence.index(MARK_TOKEN)

    @property
    def marked_word(self) -> str:
        return self.marked_sentence[self.marked_index + 1]


def mark_word(tokens: Sequence[str], index: int) -> tuple[str, ...]:
    toks = list(tokens)
    return tuple(toks[:index] + [MARK_TOKEN, toks[index], MARK_TOKEN] + toks[index + 1:])


@dataclass(frozen=True)
class SpanDistribution:
    """Start/end probabilities over {NULL, 1..L}; index 0 is NULL."""

    p_start: np.ndarray
    p_end: np.ndarray

    def __init__(self, p_start: Sequence[float], p_end: Sequence[float]):
        ps = np.asarray(p_start, dtype=float)
        pe = np.asarray(p_end, dtype=float)
        if ps.shape != pe.shape or ps.ndim != 1 or len(ps) < 2:
            raise ValidationError("start/end vectors must share a length of at least 2")
        for name, v in (("p_start", ps), ("p_end", pe)):
            if np.any(v < 0):
                raise ValidationError(f"{name} has negative mass")
            if abs(v.sum() - 1.0) > PROB_SUM_TOL:
                raise ValidationError(f"{name} sums to {v.sum()!r}, not 1")
        ps.setflags(write=False)
        pe.setflags(write=False)
        object.__setattr__(self, "p_start", ps)
        object.__setattr__(self, "p_end", pe)

    @property
    def length(self) -> int:
        """Number of real answer positions (excluding NULL)."""
        return len(self.p_start) - 1


def pair_probabilities(dist: SpanDistribution) -> np.ndarray:
    """Per-position coverage probability, index 0 = NULL.

    Position p is covered by every span (a, b) with a <= p <= b, so its
    probability is (sum of start mass up to p) * (sum of end mass from p).
    NULL is covered only by the null span.
    """
    ps, pe = dist.p_start, dist.p_end
    out = np.empty(len(ps))
    out[0] = ps[0] * pe[0]
    prefix = np.cumsum(ps[1:])
    suffix = np.cumsum(pe[1:][::-1])[::-1]
    out[1:] = prefix * suffix
    return out


def argmax_span(dist: SpanDistribution) -> Optional[tuple[int, int]]:
    """Most probable span (start, end), or None for the null span.

    Ties break toward the smallest start, then the smallest end.
    """
    ps, pe = dist.p_start, dist.p_end
    best = ps[0] * pe[0]
    best_span: Optional[tuple[int, int]] = None
    for a in range(1, len(ps)):
        for b in range(a, len(ps)):
            mass = ps[a] * pe[b]
            if mass > best:
                best = mass
                best_span = (a, b)
    return best_span


def span_loss(dist: SpanDistribution, gold_span: Optional[tuple[int, int]],
              clamp: bool = True) -> float:
    """Cross entropy of the gold endpoints: -(log p_start + log p_end)/2.

    gold_span is (start, end) in 1-based answer positions, or None for
    the null span. Zero-probability endpoints are clamped to 1e-12 when
    clamp is set; otherwise they raise InfiniteLoss.
    """
    if gold_span is None:
        j = k = 0
    else:
        j, k = gold_span
        if not (1 <= j <= k <= dist.length):
            raise ValidationError(f"gold span {gold_span} outside support 1..{dist.length}")
    p_j = float(dist.p_start[j])
    p_k = float(dist.p_end[k])
    if (p_j == 0.0 or p_k == 0.0) and not clamp:
        raise InfiniteLoss(f"gold endpoint has zero probability (start={p_j}, end={p_k})")
    return -0.5 * (math.log(max(p_j, LOSS_EPS)) + math.log(max(p_k, LOSS_EPS)))


class SpanScorer(Protocol):
    def score_spans(self, query: SpanQuery) -> SpanDistribution: ...


def score_spans(scorer: SpanScorer, query: SpanQuery) -> SpanDistribution:
    dist = scorer.score_spans(query)
    if dist.length != query.answer_positions:
        raise ValidationError(
            f"scorer returned {dist.length} positions for a query with "
            f"{query.answer_positions} answer positions")
    return dist


class LexTable:
    """Lexical translation probabilities for both directions.

    Rows map a conditioning token (including the reserved null token) to
    a distribution over co-occurring outcome tokens. Rows may contain
    the null token as an outcome; EM training does not produce such
    entries, but hand-built or fine-tuned tables may.
    """

    def __init__(self, src2mt: dict[str, dict[str, float]],
                 mt2src: dict[str, dict[str, float]]):
        self.src2mt = src2mt
        self.mt2src = mt2src
        for name, table in (("src2mt", src2mt), ("mt2src", mt2src)):
            for cond, row in table.items():
                total = sum(row.values())
                if row and abs(total - 1.0) > PROB_SUM_TOL:
                    raise ValidationError(f"{name} row {cond!r} sums to {total!r}")

    def row(self, direction: str, cond: str) -> dict[str, float]:
        if direction == SRC2MT:
            table = self.src2mt
        elif direction == MT2SRC:
            table = self.mt2src
        else:
            raise ValidationError(f"lexical table has no {direction!r} direction")
        return table.get(cond, {})

    def prob(self, direction: str, cond: str, out: str) -> float:
        return self.row(direction, cond).get(out, 0.0)

    def save(self, prefix: str) -> None:
        for direction, table in ((SRC2MT, self.src2mt), (MT2SRC, self.mt2src)):
            with open(f"{prefix}.{direction}.tsv", "w", encoding="utf-8") as f:
                for cond in table:
                    for out, p in table[cond].items():
                        f.write(f"{cond}\t{out}\t{p!r}\n")

    @classmethod
    def load(cls, prefix: str) -> "LexTable":
        tables = {}
        for direction in (SRC2MT, MT2SRC):
            table: dict[str, dict[str, float]] = defaultdict(dict)
            with open(f"{prefix}.{direction}.tsv", encoding="utf-8") as f:
                for line in f:
                    line = line.rstrip("\n")
                    if not line:
                        continue
                    cond, out, p = line.split("\t")
                    table[cond][out] = float(p)
            tables[direction] = dict(table)
        return cls(tables[SRC2MT], tables[MT2SRC])


def _em_direction(pairs: Sequence[tuple[Sequence[str], Sequence[str]]],
                  iterations: int) -> tuple[dict[str, dict[str, float]], list[float]]:
    """One EM run of the lexical model: conditioning tokens (plus a null
    source token) generate outcome tokens under a uniform alignment prior.

    Starts from the uniform distribution over co-occurring outcomes and
    returns the table plus the per-iteration corpus log-likelihood.
    """
    cooc: dict[str, set[str]] = defaultdict(set)
    for conds, outs in pairs:
        for c in list(conds) + [NULL_TOKEN]:
            cooc[c].update(outs)
    table = {c: {o: 1.0 / len(outs) for o in sorted(outs)} for c, outs in cooc.items()}

    def loglik() -> float:
        ll = 0.0
        for conds, outs in pairs:
            cs = list(conds) + [NULL_TOKEN]
            for o in outs:
                total = sum(table[c].get(o, 0.0) for c in cs)
                ll += math.log(max(total / len(cs), LOSS_EPS))
        return ll

    history = []
    prev = loglik()
    for _ in range(iterations):
        counts: dict[str, dict[str, float]] = defaultdict(lambda: defaultdict(float))
        totals: dict[str, float] = defaultdict(float)
        for conds, outs in pairs:
            cs = list(conds) + [NULL_TOKEN]
            for o in outs:
                posterior = [table[c].get(o, 0.0) for c in cs]
                z = sum(posterior)
                if z == 0.0:
                    continue
                for c, p in zip(cs, posterior):
                    w = p / z
                    counts[c][o] += w
                    totals[c] += w
        table = {c: {o: cnt / totals[c] for o, cnt in by_out.items()}
                 for c, by_out in counts.items()}
        cur = loglik()
        if cur < prev - 1e-9:
            raise AssertionError(f"EM log-likelihood decreased: {prev} -> {cur}")
        history.append(cur)
        prev = cur
    return table, history


def train_lex_table(corpus: Sequence[tuple[Sequence[str], Sequence[str]]],
                    iterations: int = 10, seed: int = 0) -> LexTable:
    """EM-train lexical translation tables in both directions.

    The corpus is a sequence of (source tokens, target tokens) pairs.
    Initialization is uniform, so the result is deterministic and the
    seed only exists for interface stability.
    """
    del seed
    if not corpus:
        raise EmptyCorpus("cannot train a lexical table on an empty corpus")
    if iterations < 0:
        raise ValidationError("iterations must be >= 0")
    src2mt, fwd_ll = _em_direction([(s, t) for s, t in corpus], iterations)
    mt2src, bwd_ll = _em_direction([(t, s) for s, t in corpus], iterations)
    table = LexTable(src2mt, mt2src)
    table.loglik_history = {SRC2MT: fwd_ll, MT2SRC: bwd_ll}
    return table


class NativeLexScorer:
    """Span scorer backed by a lexical table; emits single-word spans.

    The marked word's table row is evaluated over the context words plus
    the null share (the row's mass on the reserved null token, zero when
    absent), normalized, and used for both the start and end vectors.
    """

    def __init__(self, table: LexTable):
        self.table = table

    def score_spans(self, query: SpanQuery) -> SpanDistribution:
        row = self.table.row(query.direction, query.marked_word)
        scores = np.array([row.get(NULL_TOKEN, 0.0)]
                          + [row.get(tok, 0.0) for tok in query.context_sentence])
        total = scores.sum()
        if total <= 0.0:
            # Unknown word: no lexical evidence at all, fall back to null.
            scores[0] = 1.0
            total = 1.0
        v = scores / total
        return SpanDistribution(v, v)


class FileAdapterScorer:
    """Replays precomputed span distributions from a JSONL file.

    One object per (sentence id, direction, word index) with arrays
    p_start / p_end whose index 0 is the null position.
    """

    def __init__(self, entries: dict[tuple[str, str, int], SpanDistribution]):
        self.entries = entries

    @classmethod
    def load(cls, path: str) -> "FileAdapterScorer":
        entries = {}
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                if "header" in obj:
                    continue
                key = (obj["id"], obj["direction"], int(obj["word_index"]))
                entries[key] = SpanDistribution(obj["p_start"], obj["p_end"])
        return cls(entries)

    @staticmethod
    def dump_entry(sentence_id: str, direction: str, word_index: int,
                   dist: SpanDistribution) -> str:
        return json.dumps({
            "id": sentence_id,
            "direction": direction,
            "word_index": word_index,
            "p_start": [float(x) for x in dist.p_start],
            "p_end": [float(x) for x in dist.p_end],
        }, ensure_ascii=False)

    def score_spans(self, query: SpanQuery) -> SpanDistribution:
        key = (query.sentence_id, query.direction, query.marked_index)
        if key not in self.entries:
            raise MissingPrecomputedEntry(key)
        return self.entries[key]


def symmetrize(fwd: dict[tuple[int, int], float], bwd: dict[tuple[int, int], float],
               threshold: float = 0.4) -> frozenset[AlignmentLink]:
    """Keep (i, j) when the mean of fwd(i, j) and bwd(j, i) exceeds the
    threshold (strict). Words left out of every kept link are null-aligned.
    """
    links = []
    for (i, j), f in fwd.items():
        b = bwd.get((j, i), 0.0)
        if (f + b) / 2.0 > threshold:
            links.append(AlignmentLink(i, j, fwd_prob=f, bwd_prob=b))
    return frozenset(links)


def directional_word_probs(pair: SentencePair, scorer: SpanScorer,
                           direction: str) -> dict[tuple[int, int], float]:
    """Coverage probability of every (query word, answer word) pair in one
    direction; keys are (query index, answer index).
    """
    if direction == SRC2MT:
        query_side, answer_side = pair.source, pair.mt
    else:
        query_side, answer_side = pair.mt, pair.source
    probs: dict[tuple[int, int], float] = {}
    for qi in range(len(query_side)):
        query = SpanQuery(mark_word(query_side, qi), answer_side, direction,
                          sentence_id=pair.id)
        coverage = pair_probabilities(score_spans(scorer, query))
        for aj in range(len(answer_side)):
            probs[(qi, aj)] = float(coverage[aj + 1])
    return probs


def extract_extended_alignment(pair: SentencePair, scorer_fwd: SpanScorer,
                               scorer_bwd: SpanScorer,
                               threshold: float = 0.4) -> frozenset[AlignmentLink]:
    """Score every word in both directions and symmetrize."""
    fwd = directional_word_probs(pair, scorer_fwd, SRC2MT)
    bwd = directional_word_probs(pair, scorer_bwd, MT2SRC)
    return symmetrize(fwd, bwd, threshold)
