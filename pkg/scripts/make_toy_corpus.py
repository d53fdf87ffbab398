#!/usr/bin/env python3
"""Generate the bundled toy corpus under data/toy/.

20 sentence pairs over a tiny English/German-ish lexicon with seeded
corruptions (replacements, deletions, insertions), plus gold original
tags, gold refined tags, gold correspondences, a source-PE alignment,
and a ready-to-run pipeline config. Deterministic; run once and commit
the output.
"""

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from qeref.core import (  # noqa: E402
    AlignmentLink,
    CorrespondenceSet,
    RefinedTag,
    SourceGapLink,
    TagAssignment,
)
from qeref.corpus import degenerate_tags, format_pharaoh, re_interleave  # noqa: E402

LEXICON = {
    "the": "der", "cat": "katze", "dog": "hund", "house": "haus",
    "sees": "sieht", "runs": "läuft", "big": "groß", "small": "klein",
    "red": "rot", "tree": "baum", "bird": "vogel", "eats": "isst",
    "water": "wasser", "sun": "sonne", "moon": "mond", "old": "alt",
    "new": "neu", "fast": "schnell", "slow": "langsam", "sky": "himmel",
}
EXTRA_MT = ["doch", "mal", "ja", "halt"]

OUT = Path(__file__).resolve().parents[1] / "data" / "toy"


def make_sentence(rng, idx):
    words = list(LEXICON)
    k = int(rng.integers(4, 8))
    src = [words[i] for i in rng.choice(len(words), size=k, replace=False)]
    pe = [LEXICON[w] for w in src]
    src_pe = {(i, i) for i in range(k)}

    # corrupt PE into MT; track per-source-word fate
    fate = {}
    n_bad = int(rng.integers(0, 3))
    bad_positions = list(rng.choice(k, size=n_bad, replace=False))
    for pos in bad_positions:
        fate[pos] = "REP" if rng.random() < 0.6 else "INS"

    mt = []
    mt_fate = []  # parallel to mt: ("ok", src_pos) | ("rep", src_pos) | ("del", None)
    for pos in range(k):
        if fate.get(pos) == "INS":
            continue  # dropped from MT: needs insertion
        if fate.get(pos) == "REP":
            wrong = LEXICON[words[int(rng.integers(0, len(words)))]]
            while wrong == pe[pos]:
                wrong = LEXICON[words[int(rng.integers(0, len(words)))]]
            mt.append(wrong)
            mt_fate.append(("rep", pos))
        else:
            mt.append(pe[pos])
            mt_fate.append(("ok", pos))
    if rng.random() < 0.4:  # spurious MT word
        at = int(rng.integers(0, len(mt) + 1))
        mt.insert(at, EXTRA_MT[int(rng.integers(0, len(EXTRA_MT)))])
        mt_fate.insert(at, ("del", None))
    if not mt:
        mt = [pe[0]]
        mt_fate = [("ok", 0)]
        fate.pop(0, None)

    src_tags = []
    for pos in range(k):
        src_tags.append({"REP": RefinedTag.REP, "INS": RefinedTag.INS}.get(
            fate.get(pos), RefinedTag.OK))
    mt_tags = []
    word_links = set()
    for j, (kind, pos) in enumerate(mt_fate):
        if kind == "del":
            mt_tags.append(RefinedTag.DEL)
        elif kind == "rep":
            mt_tags.append(RefinedTag.REP)
            word_links.add(AlignmentLink(pos, j))
        else:
            mt_tags.append(RefinedTag.OK)
            word_links.add(AlignmentLink(pos, j))

    gap_tags = [RefinedTag.OK] * (len(mt) + 1)
    gap_links = set()
    for pos in range(k):
        if fate.get(pos) != "INS":
            continue
        # insertion point: right after the last MT word that came from an
        # earlier source position
        gap = 0
        for j, (kind, p) in enumerate(mt_fate):
            if p is not None and p < pos:
                gap = j + 1
        gap_links.add(SourceGapLink(pos, gap))
        gap_tags[gap] = RefinedTag.INS

    refined = TagAssignment(src_tags, mt_tags, gap_tags)
    corr = CorrespondenceSet(word_links, gap_links)
    return src, mt, pe, src_pe, refined, corr


def main():
    rng = np.random.default_rng(20)
    OUT.mkdir(parents=True, exist_ok=True)
    srcs, mts, pes, aligns, refined_lines = [], [], [], [], []
    src_tag_lines, mt_tag_lines = [], []
    for idx in range(20):
        src, mt, pe, src_pe, refined, corr = make_sentence(rng, idx)
        srcs.append(" ".join(src))
        mts.append(" ".join(mt))
        pes.append(" ".join(pe))
        aligns.append(format_pharaoh(src_pe))
        original = degenerate_tags(refined)
        src_tag_lines.append(" ".join(t.value for t in original.source_tags))
        mt_tag_lines.append(" ".join(
            t.value if hasattr(t, "value") else t for t in
            re_interleave([t.value for t in original.mt_word_tags],
                          [t.value for t in original.gap_tags])))
        refined_lines.append(json.dumps({
            "id": str(idx),
            "source_tags": [t.value for t in refined.source_tags],
            "mt_word_tags": [t.value for t in refined.mt_word_tags],
            "gap_tags": [t.value for t in refined.gap_tags],
            "alignment": [list(p) for p in sorted(corr.word_pairs())],
            "source_gap": [list(p) for p in sorted(corr.gap_pairs())],
        }, ensure_ascii=False))

    (OUT / "corpus.src").write_text("\n".join(srcs) + "\n", encoding="utf-8")
    (OUT / "corpus.mt").write_text("\n".join(mts) + "\n", encoding="utf-8")
    (OUT / "corpus.pe").write_text("\n".join(pes) + "\n", encoding="utf-8")
    (OUT / "corpus.source_tags").write_text("\n".join(src_tag_lines) + "\n",
                                            encoding="utf-8")
    (OUT / "corpus.mt_tags").write_text("\n".join(mt_tag_lines) + "\n",
                                        encoding="utf-8")
    (OUT / "corpus.srcpe").write_text("\n".join(aligns) + "\n", encoding="utf-8")
    (OUT / "gold.refined.jsonl").write_text("\n".join(refined_lines) + "\n",
                                            encoding="utf-8")
    (OUT / "toy.toml").write_text(
        'seed = 7\nworkers = 1\n\n'
        '[data]\nsrc = "data/toy/corpus.src"\nmt = "data/toy/corpus.mt"\n'
        'source_tags = "data/toy/corpus.source_tags"\n'
        'mt_tags = "data/toy/corpus.mt_tags"\npe = "data/toy/corpus.pe"\n'
        'src_pe_alignment = "data/toy/corpus.srcpe"\n'
        'refined_gold = "data/toy/gold.refined.jsonl"\n\n'
        '[align]\nscorer = "native"\niterations = 5\nthreshold = 0.4\n\n'
        '[tagger]\nscorer = "native"\nepochs = 50\nlearning_rate = 0.1\n'
        'threshold = "optimize"\n\n'
        '[gaps]\nscorer = "native"\nthreshold = 0.4\niterations = 5\n'
        'drop_rate = 0.15\n\n'
        '[output]\ndir = "out/toy"\n',
        encoding="utf-8")
    print(f"wrote toy corpus to {OUT}")


if __name__ == "__main__":
    main()
