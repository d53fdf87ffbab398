"""Per-token BAD probabilities, thresholding, and MCC threshold search.

Probabilities come from a TagScorer: FileAdapterTagger replays
precomputed values (e.g. exported from a fine-tuned encoder regression
head), NativeTagger is a logistic regression over a small handcrafted
feature set so the thresholding and loss machinery can be exercised end
to end without any encoder.

There is no separate classification variant: a fixed 0.5 threshold over
the same probabilities reproduces one, and the adjustable threshold is
exactly what the regression path adds.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

import numpy as np

from .align import LexTable, MT2SRC, SRC2MT
from .core import (
    AlignmentLink,
    EmptyCorpus,
    LengthMismatch,
    MissingPrecomputedEntry,
    OriginalTag,
    SentencePair,
    TagAssignment,
)

PROB_EPS = 1e-12

FEATURE_NAMES = (
    "max_lex_prob",
    "has_link",
    "len_1",
    "len_2_4",
    "len_5p",
    "rel_pos",
    "freq_oov",
    "freq_rare",
    "freq_frequent",
)
RARE_CUTOFF = 5  # counts below this are "rare", 0 is OOV


class DegenerateLabelsWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TagProbabilities:
    source_probs: tuple[float, ...]
    mt_word_probs: tuple[float, ...]

    def __init__(self, source_probs: Sequence[float], mt_word_probs: Sequence[float]):
        for name, probs in (("source", source_probs), ("mt", mt_word_probs)):
            for p in probs:
                if not 0.0 <= p <= 1.0:
                    raise ValueError(f"{name} probability {p} outside [0, 1]")
        object.__setattr__(self, "source_probs", tuple(float(p) for p in source_probs))
        object.__setattr__(self, "mt_word_probs", tuple(float(p) for p in mt_word_probs))


@dataclass(frozen=True)
class TagContext:
    """What the native feature set needs at scoring time."""
    word_links: frozenset[AlignmentLink] = frozenset()
    lex_table: Optional[LexTable] = None


class TagScorer(Protocol):
    def bad_probabilities(self, pair: SentencePair, context: TagContext) -> TagProbabilities: ...


def tag_bce_loss(probs: TagProbabilities, refs: TagAssignment) -> float:
    """Mean binary cross entropy over the m+n word tags (gaps excluded)."""
    if len(probs.source_probs) != len(refs.source_tags):
        raise LengthMismatch("source", len(refs.source_tags), len(probs.source_probs))
    if len(probs.mt_word_probs) != len(refs.mt_word_tags):
        raise LengthMismatch("mt", len(refs.mt_word_tags), len(probs.mt_word_probs))
    total = 0.0
    count = 0
    for ps, tags in ((probs.source_probs, refs.source_tags),
                     (probs.mt_word_probs, refs.mt_word_tags)):
        for p, tag in zip(ps, tags):
            p = min(max(p, PROB_EPS), 1.0 - PROB_EPS)
            y = 1.0 if tag is OriginalTag.BAD else 0.0
            total += -(y * math.log(p) + (1.0 - y) * math.log(1.0 - p))
            count += 1
    return total / count


def apply_threshold(probs: TagProbabilities, tau: float) -> TagAssignment:
    """BAD iff probability strictly exceeds tau; gap policy is the caller's."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    to_tag = lambda p: OriginalTag.BAD if p > tau else OriginalTag.OK
    return TagAssignment([to_tag(p) for p in probs.source_probs],
                         [to_tag(p) for p in probs.mt_word_probs])


def _mcc_from_counts(tp, fp, tn, fn):
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    out = np.zeros_like(tp, dtype=float)
    nz = denom > 0
    out[nz] = (tp[nz] * tn[nz] - fp[nz] * fn[nz]) / np.sqrt(denom[nz].astype(float))
    return out


def threshold_objective(dev: Sequence[tuple[TagProbabilities, TagAssignment]],
                        taus: np.ndarray) -> np.ndarray:
    """Source MCC + MT word MCC, micro-pooled over the dev set, for each
    candidate threshold."""
    obj = np.zeros(len(taus))
    for probs_attr, tags_attr in (("source_probs", "source_tags"),
                                  ("mt_word_probs", "mt_word_tags")):
        ps, ys = [], []
        for probs, refs in dev:
            ps.extend(getattr(probs, probs_attr))
            ys.extend(1.0 if t is OriginalTag.BAD else 0.0 for t in getattr(refs, tags_attr))
        if not ps:
            continue
        p = np.asarray(ps)
        y = np.asarray(ys, dtype=bool)
        pred = p[None, :] > taus[:, None]
        tp = (pred & y).sum(axis=1)
        fp = (pred & ~y).sum(axis=1)
        fn = (~pred & y).sum(axis=1)
        tn = (~pred & ~y).sum(axis=1)
        obj += _mcc_from_counts(tp, fp, tn, fn)
    return obj


def candidate_thresholds(dev: Sequence[tuple[TagProbabilities, TagAssignment]]) -> np.ndarray:
    """0, 1, and the midpoints of consecutive distinct pooled probabilities."""
    pooled = sorted({p for probs, _ in dev
                     for p in probs.source_probs + probs.mt_word_probs})
    mids = [(a + b) / 2.0 for a, b in zip(pooled, pooled[1:])]
    return np.array(sorted({0.0, 1.0, *mids}))


def optimize_threshold(dev: Sequence[tuple[TagProbabilities, TagAssignment]]) -> float:
    """Threshold maximizing source MCC + MT word MCC on the dev set.

    Ties resolve to the smallest candidate. If no side of the reference
    carries both classes the search is meaningless: a warning is issued
    and 0.5 returned.
    """
    if not dev:
        raise EmptyCorpus("empty dev set")
    both_present = False
    for tags_attr in ("source_tags", "mt_word_tags"):
        labels = {t for _, refs in dev for t in getattr(refs, tags_attr)}
        if len(labels) == 2:
            both_present = True
    if not both_present:
        warnings.warn("reference labels are single-class on every side",
                      DegenerateLabelsWarning, stacklevel=2)
        return 0.5
    taus = candidate_thresholds(dev)
    obj = threshold_objective(dev, taus)
    return float(taus[int(np.argmax(obj))])


class FileAdapterTagger:
    """Replays precomputed BAD probabilities from a JSONL file keyed by
    sentence id."""

    def __init__(self, entries: dict[str, TagProbabilities]):
        self.entries = entries

    @classmethod
    def load(cls, path: str) -> "FileAdapterTagger":
        entries = {}
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                entries[obj["id"]] = TagProbabilities(obj["source_probs"],
                                                      obj["mt_word_probs"])
        return cls(entries)

    @staticmethod
    def dump_entry(sentence_id: str, probs: TagProbabilities) -> str:
        return json.dumps({
            "id": sentence_id,
            "source_probs": list(probs.source_probs),
            "mt_word_probs": list(probs.mt_word_probs),
        }, ensure_ascii=False)

    def bad_probabilities(self, pair: SentencePair, context: TagContext) -> TagProbabilities:
        if pair.id not in self.entries:
            raise MissingPrecomputedEntry(pair.id)
        probs = self.entries[pair.id]
        if len(probs.source_probs) != pair.m or len(probs.mt_word_probs) != pair.n:
            raise LengthMismatch("adapter", pair.m + pair.n,
                                 len(probs.source_probs) + len(probs.mt_word_probs))
        return probs


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


def _length_bucket(token: str) -> tuple[float, float, float]:
    l = len(token)
    return (1.0 if l == 1 else 0.0,
            1.0 if 2 <= l <= 4 else 0.0,
            1.0 if l >= 5 else 0.0)


def _freq_bucket(count: int) -> tuple[float, float, float]:
    return (1.0 if count == 0 else 0.0,
            1.0 if 1 <= count < RARE_CUTOFF else 0.0,
            1.0 if count >= RARE_CUTOFF else 0.0)


@dataclass
class NativeTagger:
    """Logistic regression per side over the fixed feature set."""

    source_weights: np.ndarray
    source_bias: float
    mt_weights: np.ndarray
    mt_bias: float
    source_counts: dict[str, int] = field(default_factory=dict)
    mt_counts: dict[str, int] = field(default_factory=dict)
    seed: int = 0
    loss_history: list[float] = field(default_factory=list)

    @classmethod
    def zeros(cls, seed: int = 0) -> "NativeTagger":
        k = len(FEATURE_NAMES)
        return cls(np.zeros(k), 0.0, np.zeros(k), 0.0, seed=seed)

    def features(self, pair: SentencePair, context: TagContext,
                 side: str) -> np.ndarray:
        if context.lex_table is None:
            raise ValueError("native tagging needs a lexical table in the context")
        if side == "source":
            tokens, opposite = pair.source, pair.mt
            direction = SRC2MT
            counts = self.source_counts
            linked = {l.src_index for l in context.word_links}
        else:
            tokens, opposite = pair.mt, pair.source
            direction = MT2SRC
            counts = self.mt_counts
            linked = {l.mt_index for l in context.word_links}
        rows = []
        denom = max(len(tokens) - 1, 1)
        for i, tok in enumerate(tokens):
            row = context.lex_table.row(direction, tok)
            max_lex = max((row.get(o, 0.0) for o in opposite), default=0.0)
            rows.append((max_lex, 1.0 if i in linked else 0.0,
                         *_length_bucket(tok), i / denom,
                         *_freq_bucket(counts.get(tok, 0))))
        return np.array(rows, dtype=float)

    def bad_probabilities(self, pair: SentencePair, context: TagContext) -> TagProbabilities:
        xs = self.features(pair, context, "source")
        xm = self.features(pair, context, "mt")
        src = _sigmoid(xs @ self.source_weights + self.source_bias)
        mt = _sigmoid(xm @ self.mt_weights + self.mt_bias)
        return TagProbabilities(src.tolist(), mt.tolist())

    def to_json(self) -> str:
        return json.dumps({
            "source": {"weights": dict(zip(FEATURE_NAMES, self.source_weights.tolist())),
                       "bias": self.source_bias},
            "mt": {"weights": dict(zip(FEATURE_NAMES, self.mt_weights.tolist())),
                   "bias": self.mt_bias},
            "counts": {"source": self.source_counts, "mt": self.mt_counts},
            "seed": self.seed,
        }, ensure_ascii=False, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "NativeTagger":
        obj = json.loads(text)
        return cls(
            np.array([obj["source"]["weights"][n] for n in FEATURE_NAMES]),
            float(obj["source"]["bias"]),
            np.array([obj["mt"]["weights"][n] for n in FEATURE_NAMES]),
            float(obj["mt"]["bias"]),
            source_counts=dict(obj["counts"]["source"]),
            mt_counts=dict(obj["counts"]["mt"]),
            seed=int(obj.get("seed", 0)),
        )

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_json() + "\n")

    @classmethod
    def load(cls, path: str) -> "NativeTagger":
        with open(path, encoding="utf-8") as f:
            return cls.from_json(f.read())


def train_native_tagger(corpus: Sequence[tuple[SentencePair, TagAssignment]],
                        word_links: Sequence[frozenset[AlignmentLink]],
                        lex_table: LexTable,
                        epochs: int = 50,
                        learning_rate: float = 0.1,
                        seed: int = 0) -> NativeTagger:
    """Full-batch gradient descent from zero weights on the mean tag BCE.

    The training loss may never rise by more than 1e-6 between epochs;
    an uptick means the step size is unstable and raises immediately.
    """
    if not corpus:
        raise EmptyCorpus("cannot train the tagger on an empty corpus")
    if len(word_links) != len(corpus):
        raise LengthMismatch("word_links", len(corpus), len(word_links))

    tagger = NativeTagger.zeros(seed=seed)
    for pair, _tags in corpus:
        for tok in pair.source:
            tagger.source_counts[tok] = tagger.source_counts.get(tok, 0) + 1
        for tok in pair.mt:
            tagger.mt_counts[tok] = tagger.mt_counts.get(tok, 0) + 1

    feats, labels, weights_per_tok = {"source": [], "mt": []}, {"source": [], "mt": []}, {"source": [], "mt": []}
    for (pair, tags), links in zip(corpus, word_links):
        context = TagContext(word_links=links, lex_table=lex_table)
        per_tok = 1.0 / ((pair.m + pair.n) * len(corpus))
        for side, side_tags in (("source", tags.source_tags), ("mt", tags.mt_word_tags)):
            x = tagger.features(pair, context, side)
            y = np.array([1.0 if t is OriginalTag.BAD else 0.0 for t in side_tags])
            feats[side].append(x)
            labels[side].append(y)
            weights_per_tok[side].append(np.full(len(y), per_tok))

    x = {s: np.concatenate(feats[s]) for s in feats}
    y = {s: np.concatenate(labels[s]) for s in labels}
    w_tok = {s: np.concatenate(weights_per_tok[s]) for s in weights_per_tok}
    params = {"source": (tagger.source_weights, tagger.source_bias),
              "mt": (tagger.mt_weights, tagger.mt_bias)}

    def loss() -> float:
        total = 0.0
        for s in ("source", "mt"):
            w, b = params[s]
            p = np.clip(_sigmoid(x[s] @ w + b), PROB_EPS, 1.0 - PROB_EPS)
            total += float(np.sum(w_tok[s] * -(y[s] * np.log(p) + (1 - y[s]) * np.log(1 - p))))
        return total

    history = [loss()]
    for _ in range(epochs):
        for s in ("source", "mt"):
            w, b = params[s]
            p = _sigmoid(x[s] @ w + b)
            err = w_tok[s] * (p - y[s])
            params[s] = (w - learning_rate * (x[s].T @ err),
                         b - learning_rate * float(err.sum()))
        cur = loss()
        if cur > history[-1] + 1e-6:
            raise AssertionError(f"training loss increased: {history[-1]} -> {cur}")
        history.append(cur)

    tagger.source_weights, tagger.source_bias = params["source"]
    tagger.mt_weights, tagger.mt_bias = params["mt"]
    tagger.loss_history = history
    return tagger
