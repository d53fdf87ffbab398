"""Domain types and index conventions shared by the whole pipeline.

Conventions used everywhere:

* all indices are 0-based, including alignment interchange files;
* an MT sentence of n words has n+1 gaps, gap k sitting immediately
  before MT word k (gap 0 precedes the first word, gap n follows the
  last one);
* a word that appears in no alignment link is null-aligned.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence, Union

MARK_TOKEN = "[MARK]"
NULL_TOKEN = "[NULL]"
BOS_TOKEN = "[BOS]"
EOS_TOKEN = "[EOS]"

RESERVED_TOKENS = frozenset({MARK_TOKEN, NULL_TOKEN, BOS_TOKEN, EOS_TOKEN})


class QERefError(Exception):
    """Base class for all errors raised by this package."""


class LengthMismatch(QERefError):
    def __init__(self, kind: str, expected: int, actual: int):
        self.kind = kind
        self.expected = expected
        self.actual = actual
        super().__init__(f"{kind}: expected length {expected}, got {actual}")


class IndexOutOfRange(QERefError):
    pass


class ValidationError(QERefError):
    pass


class EmptyCorpus(QERefError):
    pass


class MissingPrecomputedEntry(QERefError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"no precomputed entry for {key!r}")


class InfiniteLoss(QERefError):
    pass


class MalformedToken(QERefError):
    def __init__(self, position: int, token: str = ""):
        self.position = position
        self.token = token
        super().__init__(f"malformed token {token!r} at position {position}")


class TagCountMismatch(QERefError):
    def __init__(self, line_no: int, detail: str = ""):
        self.line_no = line_no
        super().__init__(f"tag count mismatch at line {line_no}" + (f": {detail}" if detail else ""))


class ReservedTokenError(QERefError):
    pass


class NoAlignedWords(QERefError):
    pass


# File-system problems surface as the interpreter's own OSError family.
IOFailure = OSError


class OriginalTag(str, Enum):
    OK = "OK"
    BAD = "BAD"


class RefinedTag(str, Enum):
    OK = "OK"
    REP = "REP"
    INS = "INS"
    DEL = "DEL"


Tag = Union[OriginalTag, RefinedTag]


def _check_tokens(tokens: Sequence[str], kind: str) -> tuple[str, ...]:
    toks = tuple(tokens)
    for t in toks:
        if not t or t != t.strip() or any(c.isspace() for c in t):
            raise ValidationError(f"{kind} token {t!r} is empty or contains whitespace")
    return toks


@dataclass(frozen=True)
class SentencePair:
    """A tokenized source sentence, its MT, and optionally a post-edit."""

    source: tuple[str, ...]
    mt: tuple[str, ...]
    pe: Optional[tuple[str, ...]] = None
    id: str = ""

    def __init__(self, source: Sequence[str], mt: Sequence[str],
                 pe: Optional[Sequence[str]] = None, id: str = ""):
        object.__setattr__(self, "source", _check_tokens(source, "source"))
        object.__setattr__(self, "mt", _check_tokens(mt, "mt"))
        object.__setattr__(self, "pe", _check_tokens(pe, "pe") if pe is not None else None)
        object.__setattr__(self, "id", id)
        if len(self.source) < 1:
            raise ValidationError("source sentence must have at least one token")
        if len(self.mt) < 1:
            raise ValidationError("MT sentence must have at least one token")

    @property
    def m(self) -> int:
        return len(self.source)

    @property
    def n(self) -> int:
        return len(self.mt)


@dataclass(frozen=True)
class TagAssignment:
    """Tags for source words, MT words, and the n+1 MT gaps.

    Holds either original (OK/BAD) or refined (OK/REP/INS/DEL) tags.
    ``gap_tags`` may be None for word-only assignments (e.g. raw
    threshold output before a gap policy is applied).
    """

    source_tags: tuple[Tag, ...]
    mt_word_tags: tuple[Tag, ...]
    gap_tags: Optional[tuple[Tag, ...]] = None

    def __init__(self, source_tags: Sequence[Tag], mt_word_tags: Sequence[Tag],
                 gap_tags: Optional[Sequence[Tag]] = None):
        object.__setattr__(self, "source_tags", tuple(source_tags))
        object.__setattr__(self, "mt_word_tags", tuple(mt_word_tags))
        object.__setattr__(self, "gap_tags", tuple(gap_tags) if gap_tags is not None else None)
        self._check_placement()

    def _check_placement(self) -> None:
        for t in self.source_tags:
            if t is RefinedTag.DEL:
                raise ValidationError("source words never carry DEL")
        for t in self.mt_word_tags:
            if t is RefinedTag.INS:
                raise ValidationError("MT words never carry INS")
        if self.gap_tags is not None:
            for t in self.gap_tags:
                if isinstance(t, RefinedTag) and t not in (RefinedTag.OK, RefinedTag.INS):
                    raise ValidationError("refined gap tags are OK or INS only")

    @property
    def is_refined(self) -> bool:
        return any(isinstance(t, RefinedTag)
                   for t in self.source_tags + self.mt_word_tags + (self.gap_tags or ()))


@dataclass(frozen=True, order=True)
class AlignmentLink:
    """One extended word alignment link with its directional probabilities."""

    src_index: int
    mt_index: int
    fwd_prob: float = 1.0
    bwd_prob: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.fwd_prob <= 1.0 and 0.0 <= self.bwd_prob <= 1.0):
            raise ValidationError("link probabilities must lie in [0, 1]")

    @property
    def mean_prob(self) -> float:
        return (self.fwd_prob + self.bwd_prob) / 2.0


@dataclass(frozen=True, order=True)
class SourceGapLink:
    """A correspondence between a source word and an MT gap."""

    src_index: int
    gap_index: int
    prob: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.prob <= 1.0:
            raise ValidationError("gap link probability must lie in [0, 1]")


@dataclass(frozen=True)
class CorrespondenceSet:
    """Extended word alignment plus source-gap correspondences."""

    word_links: frozenset[AlignmentLink] = field(default_factory=frozenset)
    gap_links: frozenset[SourceGapLink] = field(default_factory=frozenset)

    def __init__(self, word_links: Iterable[AlignmentLink] = (),
                 gap_links: Iterable[SourceGapLink] = ()):
        wl = frozenset(word_links)
        gl = frozenset(gap_links)
        if len({(l.src_index, l.mt_index) for l in wl}) != len(wl):
            raise ValidationError("duplicate (src, mt) word link")
        if len({(l.src_index, l.gap_index) for l in gl}) != len(gl):
            raise ValidationError("duplicate (src, gap) link")
        object.__setattr__(self, "word_links", wl)
        object.__setattr__(self, "gap_links", gl)

    def word_pairs(self) -> set[tuple[int, int]]:
        return {(l.src_index, l.mt_index) for l in self.word_links}

    def gap_pairs(self) -> set[tuple[int, int]]:
        return {(l.src_index, l.gap_index) for l in self.gap_links}


def validate_pair(pair: SentencePair, tags: TagAssignment) -> None:
    """Check that every tag sequence matches the owning pair's lengths.

    Raises LengthMismatch naming the offending sequence; word-only
    assignments (gap_tags is None) skip the gap check.
    """
    if len(tags.source_tags) != pair.m:
        raise LengthMismatch("source", pair.m, len(tags.source_tags))
    if len(tags.mt_word_tags) != pair.n:
        raise LengthMismatch("mt", pair.n, len(tags.mt_word_tags))
    if tags.gap_tags is not None and len(tags.gap_tags) != pair.n + 1:
        raise LengthMismatch("gap", pair.n + 1, len(tags.gap_tags))


def validate_correspondences(pair: SentencePair, corr: CorrespondenceSet) -> None:
    """Check that every link's indices fall inside the pair."""
    for l in corr.word_links:
        if not (0 <= l.src_index < pair.m):
            raise IndexOutOfRange(f"word link source index {l.src_index} outside 0..{pair.m - 1}")
        if not (0 <= l.mt_index < pair.n):
            raise IndexOutOfRange(f"word link MT index {l.mt_index} outside 0..{pair.n - 1}")
    for l in corr.gap_links:
        if not (0 <= l.src_index < pair.m):
            raise IndexOutOfRange(f"gap link source index {l.src_index} outside 0..{pair.m - 1}")
        if not (0 <= l.gap_index <= pair.n):
            raise IndexOutOfRange(f"gap index {l.gap_index} outside 0..{pair.n}")
