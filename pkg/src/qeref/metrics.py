"""Evaluation metrics: MCC, per-class P/R/F1, weighted mean F1 over
refined tags, joint correspondence P/R/F1, and ROC/AUC.

BAD is the positive class wherever original OK/BAD tags are scored.
The MT side of the refined weighted mean pools word and gap positions
into the interleaved sequence g_0, t_1, g_1, ..., t_n, g_n so that one
weighted mean covers OK/REP/DEL/INS together.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .core import (
    LengthMismatch,
    OriginalTag,
    QERefError,
    CorrespondenceSet,
    Tag,
    TagAssignment,
)


class DegenerateLabels(QERefError):
    pass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp,
                               self.tn + other.tn, self.fn + other.fn)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(pred: Sequence[OriginalTag], ref: Sequence[OriginalTag]) -> ConfusionCounts:
    """Binary confusion counts with BAD as the positive class."""
    if len(pred) != len(ref):
        raise LengthMismatch("confusion", len(ref), len(pred))
    tp = fp = tn = fn = 0
    for p, r in zip(pred, ref):
        if r is OriginalTag.BAD:
            if p is OriginalTag.BAD:
                tp += 1
            else:
                fn += 1
        else:
            if p is OriginalTag.BAD:
                fp += 1
            else:
                tn += 1
    return ConfusionCounts(tp, fp, tn, fn)


def mcc(c: ConfusionCounts) -> float:
    """Matthews correlation coefficient; 0 whenever a margin is empty."""
    denom = (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn)
    if denom == 0:
        return 0.0
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(denom)


def per_class_prf(pred: Sequence[Tag], ref: Sequence[Tag],
                  classes: Sequence[Tag]) -> dict[Tag, Optional[tuple[float, float, float]]]:
    """One-vs-rest precision/recall/F1 for each class.

    A class absent from both pred and ref is undefined (None) and gets
    weight 0 downstream; a class present in ref but never predicted has
    precision defined as 0.
    """
    if len(pred) != len(ref):
        raise LengthMismatch("tags", len(ref), len(pred))
    out: dict[Tag, Optional[tuple[float, float, float]]] = {}
    for cls in classes:
        tp = sum(1 for p, r in zip(pred, ref) if p == cls and r == cls)
        fp = sum(1 for p, r in zip(pred, ref) if p == cls and r != cls)
        fn = sum(1 for p, r in zip(pred, ref) if p != cls and r == cls)
        if tp + fp + fn == 0:
            out[cls] = None
            continue
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * p * r / (p + r) if p + r else 0.0
        out[cls] = (p, r, f1)
    return out


SOURCE_REFINED_CLASSES = ("OK", "REP", "INS")
MT_REFINED_CLASSES = ("OK", "REP", "DEL", "INS")


def _tag_values(tags: Sequence[Tag]) -> list[str]:
    return [t.value if hasattr(t, "value") else str(t) for t in tags]


def interleave_mt(assignment: TagAssignment) -> list[str]:
    """Pool MT word and gap tags into g_0, t_1, g_1, ..., t_n, g_n."""
    if assignment.gap_tags is None:
        raise LengthMismatch("gap", len(assignment.mt_word_tags) + 1, 0)
    words = _tag_values(assignment.mt_word_tags)
    gaps = _tag_values(assignment.gap_tags)
    if len(gaps) != len(words) + 1:
        raise LengthMismatch("gap", len(words) + 1, len(gaps))
    seq = [gaps[0]]
    for w, g in zip(words, gaps[1:]):
        seq.append(w)
        seq.append(g)
    return seq


def weighted_mean_f1(pred: TagAssignment, ref: TagAssignment, side: str) -> float:
    """Mean of per-class F1 weighted by each class's share of the reference.

    side="source" scores source words over OK/REP/INS; side="mt" scores
    the interleaved word+gap sequence over OK/REP/DEL/INS.
    """
    if side == "source":
        pred_seq = _tag_values(pred.source_tags)
        ref_seq = _tag_values(ref.source_tags)
        classes = SOURCE_REFINED_CLASSES
    elif side == "mt":
        pred_seq = interleave_mt(pred)
        ref_seq = interleave_mt(ref)
        classes = MT_REFINED_CLASSES
    else:
        raise ValueError(f"unknown side {side!r}")
    return weighted_mean_f1_sequences(pred_seq, ref_seq, classes)


def weighted_mean_f1_sequences(pred_seq: Sequence[str], ref_seq: Sequence[str],
                               classes: Sequence[str]) -> float:
    if len(pred_seq) != len(ref_seq):
        raise LengthMismatch("tags", len(ref_seq), len(pred_seq))
    prf = per_class_prf(pred_seq, ref_seq, classes)
    total = len(ref_seq)
    score = 0.0
    for cls in classes:
        weight = sum(1 for t in ref_seq if t == cls) / total
        if weight == 0.0:
            continue
        entry = prf[cls]
        f1 = entry[2] if entry is not None else 0.0
        score += weight * f1
    return score


def alignment_prf(pred: CorrespondenceSet, gold: CorrespondenceSet) -> tuple[float, float, float]:
    """Set precision/recall/F1 over word links and gap links jointly."""
    pred_set = {("w",) + p for p in pred.word_pairs()} | {("g",) + p for p in pred.gap_pairs()}
    gold_set = {("w",) + p for p in gold.word_pairs()} | {("g",) + p for p in gold.gap_pairs()}
    return set_prf(pred_set, gold_set)


def set_prf(pred_set: set, gold_set: set) -> tuple[float, float, float]:
    if not pred_set and not gold_set:
        return 1.0, 1.0, 1.0
    hit = len(pred_set & gold_set)
    p = hit / len(pred_set) if pred_set else 0.0
    r = hit / len(gold_set) if gold_set else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


def roc_auc(probs: Sequence[float], labels: Sequence[OriginalTag]) -> tuple[list[tuple[float, float, float]], float]:
    """ROC points (fpr, tpr, threshold) over all distinct score cuts, and
    the trapezoidal AUC.

    Tied scores move along the curve together, so the AUC equals the
    Mann-Whitney pair statistic with ties counted half.
    """
    if len(probs) != len(labels):
        raise LengthMismatch("probs", len(labels), len(probs))
    pos = sum(1 for y in labels if y is OriginalTag.BAD)
    neg = len(labels) - pos
    if pos == 0 or neg == 0:
        raise DegenerateLabels("ROC needs both classes present")
    order = sorted(range(len(probs)), key=lambda i: -probs[i])
    points = [(0.0, 0.0, math.inf)]
    tp = fp = 0
    i = 0
    while i < len(order):
        thr = probs[order[i]]
        while i < len(order) and probs[order[i]] == thr:
            if labels[order[i]] is OriginalTag.BAD:
                tp += 1
            else:
                fp += 1
            i += 1
        points.append((fp / neg, tp / pos, thr))
    auc = 0.0
    for (x0, y0, _), (x1, y1, _) in zip(points, points[1:]):
        auc += (x1 - x0) * (y0 + y1) / 2.0
    return points, auc


@dataclass
class EvalReport:
    """Bundled metrics for one evaluation run; sections are optional."""

    source_mcc: Optional[float] = None
    mt_word_mcc: Optional[float] = None
    mt_mcc: Optional[float] = None  # interleaved MT words + gaps
    source_confusion: Optional[ConfusionCounts] = None
    mt_confusion: Optional[ConfusionCounts] = None
    per_class_f1: dict = field(default_factory=dict)  # side -> class -> (p, r, f1) | None
    weighted_f1_source: Optional[float] = None
    weighted_f1_mt: Optional[float] = None
    alignment: Optional[tuple[float, float, float]] = None
    roc: dict = field(default_factory=dict)  # side -> list of (fpr, tpr, thr)
    auc: dict = field(default_factory=dict)  # side -> float

    def to_dict(self) -> dict:
        d: dict = {}
        if self.source_mcc is not None:
            d["source_mcc"] = self.source_mcc
        if self.mt_word_mcc is not None:
            d["mt_word_mcc"] = self.mt_word_mcc
        if self.mt_mcc is not None:
            d["mt_mcc"] = self.mt_mcc
        for name, c in (("source_confusion", self.source_confusion),
                        ("mt_confusion", self.mt_confusion)):
            if c is not None:
                d[name] = {"tp": c.tp, "fp": c.fp, "tn": c.tn, "fn": c.fn}
        if self.per_class_f1:
            d["per_class_f1"] = {
                side: {cls: (None if v is None else {"precision": v[0], "recall": v[1], "f1": v[2]})
                       for cls, v in by_cls.items()}
                for side, by_cls in self.per_class_f1.items()
            }
        if self.weighted_f1_source is not None:
            d["weighted_f1_source"] = self.weighted_f1_source
        if self.weighted_f1_mt is not None:
            d["weighted_f1_mt"] = self.weighted_f1_mt
        if self.alignment is not None:
            p, r, f1 = self.alignment
            d["alignment"] = {"precision": p, "recall": r, "f1": f1}
        if self.auc:
            d["auc"] = dict(self.auc)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def to_text(self) -> str:
        rows: list[tuple[str, str]] = []
        for label, val in (("source MCC", self.source_mcc),
                           ("MT word MCC", self.mt_word_mcc),
                           ("MT MCC (words+gaps)", self.mt_mcc),
                           ("weighted F1 source", self.weighted_f1_source),
                           ("weighted F1 MT", self.weighted_f1_mt)):
            if val is not None:
                rows.append((label, f"{val:.4f}"))
        if self.alignment is not None:
            p, r, f1 = self.alignment
            rows.append(("correspondence P/R/F1", f"{p:.4f}/{r:.4f}/{f1:.4f}"))
        for side, a in sorted(self.auc.items()):
            rows.append((f"AUC {side}", f"{a:.4f}"))
        for side, by_cls in sorted(self.per_class_f1.items()):
            for cls, v in by_cls.items():
                if v is None:
                    continue
                rows.append((f"F1 {side} {cls}", f"{v[2]:.4f}"))
        if not rows:
            return "(empty report)\n"
        width = max(len(label) for label, _ in rows)
        return "".join(f"{label.ljust(width)}  {val}\n" for label, val in rows)

    def write_roc_csv(self, path, side: str) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["fpr", "tpr", "threshold"])
            for fpr, tpr, thr in self.roc.get(side, []):
                writer.writerow([repr(fpr), repr(tpr), "inf" if math.isinf(thr) else repr(thr)])
