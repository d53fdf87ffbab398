"""Shared oracles and synthetic data generators for the test suite.

Everything here is deliberately independent of the package internals it
checks: oracles are written from the definitions, not by calling the
code under test.
"""

from __future__ import annotations

import numpy as np

from qeref.align import MT2SRC, SRC2MT, FileAdapterScorer, SpanDistribution
from qeref.core import OriginalTag, RefinedTag, SentencePair
from qeref.gapcorr import GapFileAdapter
from qeref.tagger import FileAdapterTagger, TagProbabilities


def coverage_distribution(positions, length):
    """Build a span distribution whose coverage probability exceeds 0.4
    exactly at the given 1-based positions (at most 9) and stays at or
    below 0.4 everywhere else, null included.

    Start mass is staged so the running prefix/suffix products hit 0.42
    on the wanted positions and 0.38 between them.
    """
    vec_len = length + 1
    golds = sorted(set(positions))
    if not golds:
        v = np.zeros(vec_len)
        v[0] = 1.0
        return SpanDistribution(v, v)
    if len(golds) > 9:
        raise ValueError("cannot encode more than 9 covered positions")
    a, b = 0.42, 0.38
    r = len(golds)
    ratio = a / b
    F = [ratio ** (i - (r - 1)) for i in range(r)]
    G = [a / f for f in F]
    p_start = np.zeros(vec_len)
    p_end = np.zeros(vec_len)
    prev = 0.0
    for i, k in enumerate(golds):
        p_start[k] = F[i] - prev
        prev = F[i]
    for i, k in enumerate(golds):
        nxt = G[i + 1] if i + 1 < r else 0.0
        p_end[k] = G[i] - nxt
    p_end[0] = 1.0 - G[0]
    return SpanDistribution(p_start, p_end)


def point_mass_distribution(position, length):
    """All mass on one 1-based position (0 means the null slot)."""
    v = np.zeros(length + 1)
    v[position] = 1.0
    return SpanDistribution(v, v)


def oracle_refine(src_tags, mt_tags, links):
    """Closed-form per-word case analysis of the refinement rules."""
    m, n = len(src_tags), len(mt_tags)
    out_src = []
    for i in range(m):
        partners = {j for (a, j) in links if a == i}
        bad = src_tags[i] is OriginalTag.BAD
        partner_bad = any(mt_tags[j] is OriginalTag.BAD for j in partners)
        if partners:
            out_src.append(RefinedTag.REP if (bad or partner_bad) else RefinedTag.OK)
        else:
            out_src.append(RefinedTag.INS if bad else RefinedTag.OK)
    out_mt = []
    for j in range(n):
        partners = {i for (i, b) in links if b == j}
        bad = mt_tags[j] is OriginalTag.BAD
        partner_bad = any(src_tags[i] is OriginalTag.BAD for i in partners)
        if partners:
            out_mt.append(RefinedTag.REP if (bad or partner_bad) else RefinedTag.OK)
        else:
            out_mt.append(RefinedTag.DEL if bad else RefinedTag.OK)
    return out_src, out_mt


def oracle_em(pairs, iterations):
    """Textbook lexical-translation EM with a null conditioning token."""
    from collections import defaultdict
    NULL = "[NULL]"
    cooc = defaultdict(set)
    for conds, outs in pairs:
        for c in list(conds) + [NULL]:
            cooc[c].update(outs)
    t = {c: {o: 1.0 / len(outs) for o in outs} for c, outs in cooc.items()}
    for _ in range(iterations):
        cnt = defaultdict(lambda: defaultdict(float))
        tot = defaultdict(float)
        for conds, outs in pairs:
            cs = list(conds) + [NULL]
            for o in outs:
                z = sum(t[c].get(o, 0.0) for c in cs)
                for c in cs:
                    w = t[c].get(o, 0.0) / z
                    cnt[c][o] += w
                    tot[c] += w
        t = {c: {o: v / tot[c] for o, v in row.items()} for c, row in cnt.items()}
    return t


# The running bilingual example used across the suite: an English query
# about white cats and dogs whose MT mistranslates "white", drops
# "and dogs", and adds a spurious question particle.
DEMO_SOURCE = ("Do", "you", "have", "white", "cats", "and", "dogs", "?")
DEMO_MT = ("你", "有", "黑", "猫", "吗", "?")
DEMO_ID = "demo-1"
DEMO_WORD_LINKS = {(1, 0), (2, 1), (3, 2), (4, 3), (7, 5)}
DEMO_GAP_LINKS = {(5, 4), (6, 4)}  # "and", "dogs" -> gap between 猫 and 吗
DEMO_SOURCE_BAD = {3, 5, 6}
DEMO_MT_BAD = {2, 4}


def demo_pair() -> SentencePair:
    return SentencePair(DEMO_SOURCE, DEMO_MT, id=DEMO_ID)


def demo_align_adapter(sentence_id=DEMO_ID) -> FileAdapterScorer:
    """Point-mass span distributions encoding the demo's word links."""
    m, n = len(DEMO_SOURCE), len(DEMO_MT)
    entries = {}
    mt_of_src = {}
    src_of_mt = {}
    for i, j in DEMO_WORD_LINKS:
        mt_of_src[i] = j
        src_of_mt[j] = i
    for i in range(m):
        pos = mt_of_src[i] + 1 if i in mt_of_src else 0
        entries[(sentence_id, SRC2MT, i)] = point_mass_distribution(pos, n)
    for j in range(n):
        pos = src_of_mt[j] + 1 if j in src_of_mt else 0
        entries[(sentence_id, MT2SRC, j)] = point_mass_distribution(pos, m)
    return FileAdapterScorer(entries)


def demo_tag_adapter(sentence_id=DEMO_ID) -> FileAdapterTagger:
    source = [0.9 if i in DEMO_SOURCE_BAD else 0.1 for i in range(len(DEMO_SOURCE))]
    mt = [0.9 if j in DEMO_MT_BAD else 0.1 for j in range(len(DEMO_MT))]
    return FileAdapterTagger({sentence_id: TagProbabilities(source, mt)})


def demo_gap_adapter(sentence_id=DEMO_ID) -> GapFileAdapter:
    n = len(DEMO_MT)
    gaps_of_src = {}
    for i, k in DEMO_GAP_LINKS:
        gaps_of_src.setdefault(i, []).append(k + 1)
    entries = {}
    for i in range(len(DEMO_SOURCE)):
        if i in gaps_of_src:
            entries[(sentence_id, i)] = coverage_distribution(gaps_of_src[i], n + 1)
        else:
            entries[(sentence_id, i)] = point_mass_distribution(0, n + 1)
    return GapFileAdapter(entries)


def write_demo_files(tmp_path):
    """The demo sentence as pipeline input files with adapter scorers;
    returns the pipeline config path."""
    from qeref.gapcorr import write_gap_adapter
    sid = "0"  # line-numbered id assigned by the corpus loader
    (tmp_path / "demo.src").write_text(" ".join(DEMO_SOURCE) + "\n", encoding="utf-8")
    (tmp_path / "demo.mt").write_text(" ".join(DEMO_MT) + "\n", encoding="utf-8")
    (tmp_path / "demo.source_tags").write_text(
        "OK OK OK BAD OK BAD BAD OK\n", encoding="utf-8")
    # interleaved g0 w1 g1 ... w6 g6: BAD words 黑, 吗; BAD gap g4
    (tmp_path / "demo.mt_tags").write_text(
        "OK OK OK OK OK BAD OK OK BAD BAD OK OK OK\n", encoding="utf-8")

    align = demo_align_adapter(sid)
    lines = [FileAdapterScorer.dump_entry(k[0], k[1], k[2], d)
             for k, d in align.entries.items()]
    (tmp_path / "align.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")

    tagger = demo_tag_adapter(sid)
    (tmp_path / "tags.jsonl").write_text(
        FileAdapterTagger.dump_entry(sid, tagger.entries[sid]) + "\n",
        encoding="utf-8")

    gaps = demo_gap_adapter(sid)
    write_gap_adapter(tmp_path / "gaps.jsonl",
                      [(k[0], k[1], d) for k, d in gaps.entries.items()])

    config = tmp_path / "demo.toml"
    config.write_text(f"""seed = 7
[data]
src = "{tmp_path / 'demo.src'}"
mt = "{tmp_path / 'demo.mt'}"
source_tags = "{tmp_path / 'demo.source_tags'}"
mt_tags = "{tmp_path / 'demo.mt_tags'}"
[align]
scorer = "adapter:{tmp_path / 'align.jsonl'}"
[tagger]
scorer = "adapter:{tmp_path / 'tags.jsonl'}"
threshold = "0.5"
[gaps]
scorer = "adapter:{tmp_path / 'gaps.jsonl'}"
[output]
dir = "{tmp_path / 'out'}"
""", encoding="utf-8")
    return config


def bijective_noise_corpus(n_pairs=500, lexicon_size=20, noise_rate=0.11, seed=11):
    """Sentence pairs from a bijective lexicon, word order shuffled per
    sentence, with null-aligned noise tokens mixed in on both sides.

    Returns (pairs, golds): SentencePair objects and the per-pair gold
    link sets {(src_index, mt_index)}.
    """
    rng = np.random.default_rng(seed)
    noise_vocab = 12
    pairs, golds = [], []
    for idx in range(n_pairs):
        k = int(rng.integers(4, 9))
        chosen = rng.choice(lexicon_size, size=k, replace=False)
        src_items = [("s%d" % c, c) for c in chosen]
        order = rng.permutation(k)
        tgt_items = [("t%d" % chosen[p], chosen[p]) for p in order]
        for items, prefix in ((src_items, "zs"), (tgt_items, "zt")):
            n_noise = int(rng.binomial(k, noise_rate))
            for _ in range(n_noise):
                pos = int(rng.integers(0, len(items) + 1))
                tok = "%s%d" % (prefix, rng.integers(0, noise_vocab))
                items.insert(pos, (tok, None))
        src_pos = {lid: i for i, (_, lid) in enumerate(src_items) if lid is not None}
        tgt_pos = {lid: j for j, (_, lid) in enumerate(tgt_items) if lid is not None}
        pair = SentencePair([t for t, _ in src_items], [t for t, _ in tgt_items],
                            id=str(idx))
        pairs.append(pair)
        golds.append({(src_pos[c], tgt_pos[c]) for c in chosen})
    return pairs, golds
