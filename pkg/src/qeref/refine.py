"""Rule-based refinement of OK/BAD tags into OK/REP/INS/DEL.

Word rules, applied to the original tags plus the extended word
alignment:

1. a word linked to any originally-BAD word is flipped to BAD (one
   step: flipped words do not propagate further);
2. every post-flip BAD word with at least one link becomes REP;
3. a null-aligned BAD source word becomes INS;
4. a null-aligned BAD MT word becomes DEL;
5. everything else is OK.

Gap tags come from the source-gap correspondences in an independent
pass that never touches word tags.
"""

from __future__ import annotations

from typing import Iterable

from .core import (
    AlignmentLink,
    IndexOutOfRange,
    OriginalTag,
    RefinedTag,
    SourceGapLink,
    TagAssignment,
)


def _link_pairs(links: Iterable) -> set[tuple[int, int]]:
    pairs = set()
    for link in links:
        if isinstance(link, AlignmentLink):
            pairs.add((link.src_index, link.mt_index))
        else:
            i, j = link
            pairs.add((int(i), int(j)))
    return pairs


def refine_word_tags(original: TagAssignment, links: Iterable) -> TagAssignment:
    """Refine source and MT word tags; gap tags are left unset."""
    m = len(original.source_tags)
    n = len(original.mt_word_tags)
    pairs = _link_pairs(links)
    for i, j in pairs:
        if not (0 <= i < m and 0 <= j < n):
            raise IndexOutOfRange(f"link ({i},{j}) outside {m}x{n}")

    src_bad = [t is OriginalTag.BAD for t in original.source_tags]
    mt_bad = [t is OriginalTag.BAD for t in original.mt_word_tags]
    src_partners: dict[int, set[int]] = {i: set() for i in range(m)}
    mt_partners: dict[int, set[int]] = {j: set() for j in range(n)}
    for i, j in pairs:
        src_partners[i].add(j)
        mt_partners[j].add(i)

    src_flipped = [src_bad[i] or any(mt_bad[j] for j in src_partners[i]) for i in range(m)]
    mt_flipped = [mt_bad[j] or any(src_bad[i] for i in mt_partners[j]) for j in range(n)]

    source_tags = []
    for i in range(m):
        if src_flipped[i]:
            source_tags.append(RefinedTag.REP if src_partners[i] else RefinedTag.INS)
        else:
            source_tags.append(RefinedTag.OK)
    mt_tags = []
    for j in range(n):
        if mt_flipped[j]:
            mt_tags.append(RefinedTag.REP if mt_partners[j] else RefinedTag.DEL)
        else:
            mt_tags.append(RefinedTag.OK)
    return TagAssignment(source_tags, mt_tags)


def assign_gap_tags(gap_links: Iterable[SourceGapLink], n: int) -> tuple[RefinedTag, ...]:
    """INS at every gap with at least one incoming link, OK elsewhere."""
    tags = [RefinedTag.OK] * (n + 1)
    for link in gap_links:
        k = link.gap_index if isinstance(link, SourceGapLink) else int(link[1])
        if not 0 <= k <= n:
            raise IndexOutOfRange(f"gap index {k} outside 0..{n}")
        tags[k] = RefinedTag.INS
    return tuple(tags)


def combine_refined(word_tags: TagAssignment,
                    gap_tags: Iterable[RefinedTag]) -> TagAssignment:
    return TagAssignment(word_tags.source_tags, word_tags.mt_word_tags, tuple(gap_tags))
