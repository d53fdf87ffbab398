"""Corpus I/O and pseudo-data generation.

File conventions (all UTF-8, newline-terminated, one sentence per line):

* sentence files: whitespace-separated tokens;
* source tag files: m tags per line; MT tag files: 2n+1 tags per line
  interleaved gap, word, gap, ..., word, gap;
* word alignment: ``i-j`` pairs, 0-based;
* source-gap correspondences: ``i-gK`` tokens, 0-based;
* refined output: JSON lines with keys id, source_tags, mt_word_tags,
  gap_tags, alignment, source_gap.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .core import (
    AlignmentLink,
    CorrespondenceSet,
    MalformedToken,
    NoAlignedWords,
    OriginalTag,
    RefinedTag,
    RESERVED_TOKENS,
    ReservedTokenError,
    SentencePair,
    SourceGapLink,
    Tag,
    TagAssignment,
    TagCountMismatch,
    validate_correspondences,
    validate_pair,
)

_PHARAOH_RE = re.compile(r"^(\d+)-(\d+)$")
_SOURCE_GAP_RE = re.compile(r"^(\d+)-g(\d+)$")


@dataclass
class QEEntry:
    pair: SentencePair
    original: Optional[TagAssignment] = None
    refined: Optional[TagAssignment] = None
    correspondences: Optional[CorrespondenceSet] = None
    src_pe_alignment: Optional[frozenset[tuple[int, int]]] = None

    def validated(self) -> "QEEntry":
        for tags in (self.original, self.refined):
            if tags is not None:
                validate_pair(self.pair, tags)
        if self.correspondences is not None:
            validate_correspondences(self.pair, self.correspondences)
        if self.src_pe_alignment is not None:
            if self.pair.pe is None:
                raise ReservedTokenError("source-PE alignment without a PE sentence")
            for i, j in self.src_pe_alignment:
                if not (0 <= i < self.pair.m and 0 <= j < len(self.pair.pe)):
                    raise MalformedToken(0, f"{i}-{j}")
        return self


@dataclass
class QECorpus:
    entries: list[QEEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def _read_token_lines(path: str) -> list[list[str]]:
    with open(path, encoding="utf-8") as f:
        return [line.split() for line in f.read().splitlines()]


def _check_reserved(tokens: Sequence[str], path: str, line_no: int) -> None:
    for t in tokens:
        if t in RESERVED_TOKENS:
            raise ReservedTokenError(f"{path}:{line_no}: reserved token {t!r} in corpus")


def de_interleave(tags: Sequence[Tag]) -> tuple[list[Tag], list[Tag]]:
    """Split a 2n+1 MT tag line into (word tags, gap tags)."""
    if len(tags) % 2 != 1:
        raise TagCountMismatch(0, f"interleaved length {len(tags)} is even")
    return list(tags[1::2]), list(tags[0::2])


def re_interleave(word_tags: Sequence[Tag], gap_tags: Sequence[Tag]) -> list[Tag]:
    if len(gap_tags) != len(word_tags) + 1:
        raise TagCountMismatch(0, "gap tags must number words + 1")
    out: list[Tag] = [gap_tags[0]]
    for w, g in zip(word_tags, gap_tags[1:]):
        out.append(w)
        out.append(g)
    return out


def _parse_tag(token: str, line_no: int, enum=OriginalTag) -> Tag:
    try:
        return enum(token)
    except ValueError:
        raise TagCountMismatch(line_no, f"unknown tag {token!r}") from None


def parse_qe_corpus(src_path: str, mt_path: str,
                    source_tags_path: Optional[str] = None,
                    mt_tags_path: Optional[str] = None,
                    pe_path: Optional[str] = None) -> QECorpus:
    """Read a WMT-style word-level QE corpus from parallel line files."""
    src_lines = _read_token_lines(src_path)
    mt_lines = _read_token_lines(mt_path)
    pe_lines = _read_token_lines(pe_path) if pe_path else None
    src_tag_lines = _read_token_lines(source_tags_path) if source_tags_path else None
    mt_tag_lines = _read_token_lines(mt_tags_path) if mt_tags_path else None

    for name, lines in (("mt", mt_lines), ("pe", pe_lines),
                        ("source_tags", src_tag_lines), ("mt_tags", mt_tag_lines)):
        if lines is not None and len(lines) != len(src_lines):
            raise TagCountMismatch(0, f"{name} has {len(lines)} lines, source has {len(src_lines)}")

    entries = []
    for idx, (src, mt) in enumerate(zip(src_lines, mt_lines)):
        line_no = idx + 1
        _check_reserved(src, src_path, line_no)
        _check_reserved(mt, mt_path, line_no)
        pe = None
        if pe_lines is not None:
            pe = pe_lines[idx]
            _check_reserved(pe, pe_path or "pe", line_no)
        pair = SentencePair(src, mt, pe=pe, id=str(idx))

        original = None
        if src_tag_lines is not None and mt_tag_lines is not None:
            src_tags = [_parse_tag(t, line_no) for t in src_tag_lines[idx]]
            if len(src_tags) != pair.m:
                raise TagCountMismatch(line_no, f"{len(src_tags)} source tags for {pair.m} words")
            mt_tags = [_parse_tag(t, line_no) for t in mt_tag_lines[idx]]
            if len(mt_tags) != 2 * pair.n + 1:
                raise TagCountMismatch(line_no, f"{len(mt_tags)} MT tags for {pair.n} words")
            word_tags, gap_tags = de_interleave(mt_tags)
            original = TagAssignment(src_tags, word_tags, gap_tags)
        entries.append(QEEntry(pair=pair, original=original).validated())
    return QECorpus(entries)


def parse_pharaoh(line: str) -> set[tuple[int, int]]:
    """Parse one ``i-j`` alignment line; duplicates collapse."""
    pairs = set()
    for pos, token in enumerate(line.split()):
        m = _PHARAOH_RE.match(token)
        if not m:
            raise MalformedToken(pos, token)
        pairs.add((int(m.group(1)), int(m.group(2))))
    return pairs


def format_pharaoh(pairs: set[tuple[int, int]]) -> str:
    return " ".join(f"{i}-{j}" for i, j in sorted(pairs))


def parse_source_gap_line(line: str) -> set[tuple[int, int]]:
    """Parse one ``i-gK`` source-gap line; duplicates collapse."""
    pairs = set()
    for pos, token in enumerate(line.split()):
        m = _SOURCE_GAP_RE.match(token)
        if not m:
            raise MalformedToken(pos, token)
        pairs.add((int(m.group(1)), int(m.group(2))))
    return pairs


def format_source_gap_line(pairs: set[tuple[int, int]]) -> str:
    return " ".join(f"{i}-g{k}" for i, k in sorted(pairs))


def read_alignment_file(path: str, parser=parse_pharaoh) -> list[set[tuple[int, int]]]:
    with open(path, encoding="utf-8") as f:
        return [parser(line) for line in f.read().splitlines()]


def write_alignment_file(path: str, alignments, formatter=format_pharaoh) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for pairs in alignments:
            f.write(formatter(pairs) + "\n")


def degenerate_tags(refined: TagAssignment) -> TagAssignment:
    """Project refined tags onto OK/BAD positionwise (OK stays OK,
    everything else collapses to BAD)."""
    def deg(tags):
        if tags is None:
            return None
        return [OriginalTag.OK if (t.value if hasattr(t, "value") else t) == "OK"
                else OriginalTag.BAD for t in tags]
    return TagAssignment(deg(refined.source_tags), deg(refined.mt_word_tags),
                         deg(refined.gap_tags))


@dataclass(frozen=True)
class RefinedRecord:
    """One line of a refined JSONL file."""
    id: str
    tags: TagAssignment
    correspondences: CorrespondenceSet


def write_refined_jsonl(corpus: QECorpus, out_path: str) -> None:
    """Write refined tags and correspondences, one JSON object per line."""
    with open(out_path, "w", encoding="utf-8") as f:
        for entry in corpus:
            if entry.refined is None:
                raise TagCountMismatch(0, f"entry {entry.pair.id} has no refined tags")
            corr = entry.correspondences or CorrespondenceSet()
            tags = entry.refined
            obj = {
                "id": entry.pair.id,
                "source_tags": [t.value for t in tags.source_tags],
                "mt_word_tags": [t.value for t in tags.mt_word_tags],
                "gap_tags": [t.value for t in (tags.gap_tags or ())],
                "alignment": [list(p) for p in sorted(corr.word_pairs())],
                "source_gap": [list(p) for p in sorted(corr.gap_pairs())],
            }
            f.write(json.dumps(obj, ensure_ascii=False) + "\n")


def read_refined_jsonl(path: str) -> list[RefinedRecord]:
    records = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            tags = TagAssignment(
                [RefinedTag(t) for t in obj["source_tags"]],
                [RefinedTag(t) for t in obj["mt_word_tags"]],
                [RefinedTag(t) for t in obj["gap_tags"]] or None,
            )
            corr = CorrespondenceSet(
                word_links=[AlignmentLink(i, j) for i, j in obj["alignment"]],
                gap_links=[SourceGapLink(i, k) for i, k in obj["source_gap"]],
            )
            records.append(RefinedRecord(obj["id"], tags, corr))
    return records


def attach_refined(corpus: QECorpus, records: Sequence[RefinedRecord]) -> QECorpus:
    """Merge refined records back onto a corpus by sentence id."""
    by_id = {r.id: r for r in records}
    entries = []
    for entry in corpus:
        rec = by_id.get(entry.pair.id)
        if rec is None:
            entries.append(entry)
        else:
            entries.append(replace(entry, refined=rec.tags,
                                   correspondences=rec.correspondences).validated())
    return QECorpus(entries)


@dataclass(frozen=True)
class GapPseudoExample:
    """A PE sentence with some words dropped, plus the gold gap links the
    drops induce on the reduced sentence."""

    pair: SentencePair  # mt holds the reduced PE; pe holds the full PE
    gold_gap_links: frozenset[SourceGapLink]
    dropped: tuple[tuple[int, tuple[int, ...]], ...]  # (pe_index, source indices)

    def reconstruct_pe(self) -> tuple[str, ...]:
        """Re-insert the dropped words at their gaps; must equal the PE."""
        assert self.pair.pe is not None
        by_gap: dict[int, list[str]] = {}
        n_dropped_before = 0
        for pe_index, _srcs in self.dropped:
            gap = pe_index - n_dropped_before
            by_gap.setdefault(gap, []).append(self.pair.pe[pe_index])
            n_dropped_before += 1
        out: list[str] = []
        for k in range(len(self.pair.mt) + 1):
            out.extend(by_gap.get(k, []))
            if k < len(self.pair.mt):
                out.append(self.pair.mt[k])
        return tuple(out)


def generate_gap_pseudo(pair: SentencePair,
                        src_pe_alignment: frozenset[tuple[int, int]],
                        drop_rate: float = 0.15,
                        seed: int = 0) -> Optional[GapPseudoExample]:
    """Drop aligned PE words at random and link the resulting gaps to the
    dropped words' source counterparts.

    Returns None (skip) when nothing was dropped or nothing would remain.
    Deterministic for a fixed seed.
    """
    if pair.pe is None:
        raise NoAlignedWords(f"entry {pair.id} has no PE")
    if not 0.0 < drop_rate < 1.0:
        raise ValueError("drop_rate must lie strictly between 0 and 1")
    sources_of: dict[int, list[int]] = {}
    for s, p in sorted(src_pe_alignment):
        sources_of.setdefault(p, []).append(s)
    if not sources_of:
        raise NoAlignedWords(f"entry {pair.id} has no aligned PE words")

    rng = np.random.default_rng(seed)
    drops = [p for p in range(len(pair.pe))
             if p in sources_of and rng.random() < drop_rate]
    if not drops or len(drops) == len(pair.pe):
        return None

    drop_set = set(drops)
    reduced = [tok for i, tok in enumerate(pair.pe) if i not in drop_set]
    links = set()
    dropped = []
    for p in drops:
        gap = sum(1 for i in range(p) if i not in drop_set)
        for s in sources_of[p]:
            links.add(SourceGapLink(s, gap))
        dropped.append((p, tuple(sorted(sources_of[p]))))
    reduced_pair = SentencePair(pair.source, reduced, pe=pair.pe, id=pair.id)
    return GapPseudoExample(reduced_pair, frozenset(links), tuple(dropped))


def generate_gap_pseudo_corpus(corpus: QECorpus, drop_rate: float = 0.15,
                               seed: int = 0) -> list[GapPseudoExample]:
    """Per-entry generation with the stream split by entry index, so the
    result is independent of processing order."""
    examples = []
    for idx, entry in enumerate(corpus):
        if entry.pair.pe is None or entry.src_pe_alignment is None:
            continue
        try:
            ex = generate_gap_pseudo(entry.pair, entry.src_pe_alignment,
                                     drop_rate, seed ^ idx)
        except NoAlignedWords:
            continue
        if ex is not None:
            examples.append(ex)
    return examples
