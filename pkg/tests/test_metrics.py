import math

import numpy as np
import pytest

from qeref.core import (
    AlignmentLink,
    CorrespondenceSet,
    OriginalTag,
    RefinedTag,
    SourceGapLink,
    TagAssignment,
)
from qeref.metrics import (
    ConfusionCounts,
    DegenerateLabels,
    alignment_prf,
    confusion,
    interleave_mt,
    mcc,
    per_class_prf,
    roc_auc,
    weighted_mean_f1,
    weighted_mean_f1_sequences,
)

OK, BAD = OriginalTag.OK, OriginalTag.BAD


class TestMcc:
    def test_perfect_prediction(self):
        assert mcc(ConfusionCounts(tp=3, fp=0, tn=5, fn=0)) == 1.0

    def test_numerator_cancels(self):
        assert mcc(ConfusionCounts(1, 1, 1, 1)) == 0.0

    def test_hand_case(self):
        # (6*3 - 1*2) / sqrt(7*8*4*5) = 16 / sqrt(1120)
        got = mcc(ConfusionCounts(tp=6, fp=1, tn=3, fn=2))
        assert abs(got - 16 / math.sqrt(1120)) < 1e-9

    def test_zero_denominator_is_zero(self):
        assert mcc(ConfusionCounts(tp=0, fp=0, tn=4, fn=1)) == 0.0
        assert mcc(ConfusionCounts()) == 0.0

    def test_antisymmetric_under_inversion(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            y = rng.integers(0, 2, size=12)
            p = rng.integers(0, 2, size=12)
            if len(set(y)) < 2 or len(set(p)) < 2:
                continue
            pred = [BAD if v else OK for v in p]
            ref = [BAD if v else OK for v in y]
            inverted = [OK if t is BAD else BAD for t in pred]
            assert abs(mcc(confusion(pred, ref)) + mcc(confusion(inverted, ref))) < 1e-12


class TestPerClassPrf:
    def test_hand_case(self):
        ref = ["OK", "OK", "REP"]
        pred = ["OK", "REP", "REP"]
        prf = per_class_prf(pred, ref, ("OK", "REP", "INS"))
        assert abs(prf["OK"][2] - 2 / 3) < 1e-12
        assert abs(prf["REP"][2] - 2 / 3) < 1e-12
        assert prf["INS"] is None  # absent everywhere -> excluded

    def test_identical_sequences(self):
        seq = ["OK", "REP", "DEL"]
        prf = per_class_prf(seq, seq, ("OK", "REP", "DEL"))
        assert all(v == (1.0, 1.0, 1.0) for v in prf.values())

    def test_class_in_ref_never_predicted(self):
        prf = per_class_prf(["OK", "OK"], ["OK", "INS"], ("OK", "INS"))
        assert prf["INS"] == (0.0, 0.0, 0.0)


class TestWeightedMeanF1:
    def test_equal_assignments_score_one(self):
        tags = TagAssignment([RefinedTag.OK, RefinedTag.REP],
                             [RefinedTag.OK, RefinedTag.DEL],
                             [RefinedTag.OK, RefinedTag.INS, RefinedTag.OK])
        assert weighted_mean_f1(tags, tags, "source") == 1.0
        assert weighted_mean_f1(tags, tags, "mt") == 1.0

    def test_source_hand_case(self):
        ref = TagAssignment([RefinedTag.OK, RefinedTag.OK, RefinedTag.REP], [RefinedTag.OK])
        pred = TagAssignment([RefinedTag.OK, RefinedTag.REP, RefinedTag.REP], [RefinedTag.OK])
        got = weighted_mean_f1(pred, ref, "source")
        assert abs(got - (2 / 3 * 2 / 3 + 1 / 3 * 2 / 3)) < 1e-12

    def test_interleaving_order(self):
        tags = TagAssignment([RefinedTag.OK],
                             [RefinedTag.REP, RefinedTag.DEL],
                             [RefinedTag.OK, RefinedTag.INS, RefinedTag.OK])
        assert interleave_mt(tags) == ["OK", "REP", "INS", "DEL", "OK"]

    def test_absent_class_contributes_zero_weight(self):
        # all gaps OK and words matching: INS has reference weight 0
        ref = TagAssignment([RefinedTag.OK], [RefinedTag.REP],
                            [RefinedTag.OK, RefinedTag.OK])
        pred = TagAssignment([RefinedTag.OK], [RefinedTag.REP],
                             [RefinedTag.OK, RefinedTag.OK])
        assert weighted_mean_f1(pred, ref, "mt") == 1.0

    def test_one_iff_equal(self):
        rng = np.random.default_rng(17)
        classes = ("OK", "REP", "DEL", "INS")
        for _ in range(300):
            n = int(rng.integers(1, 10))
            ref = [classes[i] for i in rng.integers(0, 4, size=n)]
            pred = [classes[i] for i in rng.integers(0, 4, size=n)]
            score = weighted_mean_f1_sequences(pred, ref, classes)
            if pred == ref:
                assert score == 1.0
            else:
                assert score < 1.0

    def test_matches_definition_recomputation(self):
        # independent recomputation straight from the definition
        rng = np.random.default_rng(23)
        classes = ("OK", "REP", "DEL", "INS")
        for _ in range(500):
            n = int(rng.integers(1, 20))
            ref = [classes[i] for i in rng.integers(0, 4, size=n)]
            pred = [classes[i] for i in rng.integers(0, 4, size=n)]
            expected = 0.0
            for cls in classes:
                w = sum(1 for t in ref if t == cls) / n
                if w == 0:
                    continue
                tp = sum(1 for a, b in zip(pred, ref) if a == cls and b == cls)
                fp = sum(1 for a, b in zip(pred, ref) if a == cls and b != cls)
                fn = sum(1 for a, b in zip(pred, ref) if a != cls and b == cls)
                p = tp / (tp + fp) if tp + fp else 0.0
                r = tp / (tp + fn) if tp + fn else 0.0
                f1 = 2 * p * r / (p + r) if p + r else 0.0
                expected += w * f1
            got = weighted_mean_f1_sequences(pred, ref, classes)
            assert abs(got - expected) < 1e-12


class TestAlignmentPrf:
    def test_hand_case(self):
        pred = CorrespondenceSet(word_links=[AlignmentLink(0, 0), AlignmentLink(1, 1)])
        gold = CorrespondenceSet(word_links=[AlignmentLink(0, 0)])
        p, r, f1 = alignment_prf(pred, gold)
        assert (p, r) == (0.5, 1.0)
        assert abs(f1 - 2 / 3) < 1e-12

    def test_equal_sets(self):
        s = CorrespondenceSet(word_links=[AlignmentLink(0, 1)],
                              gap_links=[SourceGapLink(2, 0)])
        assert alignment_prf(s, s) == (1.0, 1.0, 1.0)

    def test_empty_pred_nonempty_gold(self):
        pred = CorrespondenceSet()
        gold = CorrespondenceSet(word_links=[AlignmentLink(0, 0)])
        assert alignment_prf(pred, gold) == (0.0, 0.0, 0.0)

    def test_both_empty(self):
        assert alignment_prf(CorrespondenceSet(), CorrespondenceSet()) == (1.0, 1.0, 1.0)

    def test_word_and_gap_links_kept_distinct(self):
        pred = CorrespondenceSet(gap_links=[SourceGapLink(0, 0)])
        gold = CorrespondenceSet(word_links=[AlignmentLink(0, 0)])
        p, r, f1 = alignment_prf(pred, gold)
        assert f1 == 0.0

    def test_adding_links_moves_f1_correct_way(self):
        gold = CorrespondenceSet(word_links=[AlignmentLink(0, 0), AlignmentLink(1, 1)])
        base = CorrespondenceSet(word_links=[AlignmentLink(0, 0)])
        with_correct = CorrespondenceSet(word_links=[AlignmentLink(0, 0), AlignmentLink(1, 1)])
        with_wrong = CorrespondenceSet(word_links=[AlignmentLink(0, 0), AlignmentLink(1, 0)])
        assert alignment_prf(with_correct, gold)[2] > alignment_prf(base, gold)[2]
        assert alignment_prf(with_wrong, gold)[2] <= alignment_prf(base, gold)[2]


class TestRocAuc:
    def test_perfect_ranking(self):
        _, auc = roc_auc([0.9, 0.8, 0.3], [BAD, BAD, OK])
        assert auc == 1.0

    def test_hand_case(self):
        _, auc = roc_auc([0.8, 0.6, 0.4, 0.2], [BAD, OK, BAD, OK])
        assert abs(auc - 0.75) < 1e-12

    def test_inverted_ranking(self):
        _, auc = roc_auc([0.1, 0.2, 0.9], [BAD, BAD, OK])
        assert auc == 0.0

    def test_degenerate_labels(self):
        with pytest.raises(DegenerateLabels):
            roc_auc([0.5, 0.6], [OK, OK])

    def test_trapezoid_equals_pair_counting(self):
        rng = np.random.default_rng(31)
        for _ in range(1000):
            n = int(rng.integers(4, 30))
            probs = np.round(rng.random(n), 2).tolist()
            labels = [BAD if v else OK for v in rng.integers(0, 2, size=n)]
            if len({l for l in labels}) < 2:
                continue
            _, auc = roc_auc(probs, labels)
            # Mann-Whitney with ties counted half
            pos = [p for p, l in zip(probs, labels) if l is BAD]
            neg = [p for p, l in zip(probs, labels) if l is OK]
            wins = sum(1.0 if pp > pn else 0.5 if pp == pn else 0.0
                       for pp in pos for pn in neg)
            assert abs(auc - wins / (len(pos) * len(neg))) < 1e-9

    def test_roc_points_are_monotone(self):
        rng = np.random.default_rng(37)
        probs = rng.random(50).tolist()
        labels = [BAD if v else OK for v in rng.integers(0, 2, size=50)]
        points, _ = roc_auc(probs, labels)
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        assert xs == sorted(xs)
        assert ys == sorted(ys)
        assert points[0][:2] == (0.0, 0.0)
        assert points[-1][:2] == (1.0, 1.0)
