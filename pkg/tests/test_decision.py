import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import L1, L2, SIL
from csdetect.decision import (
    DecisionRule,
    FrameLabelSequence,
    decide_max_language,
    decide_max_phone,
    decide_scores,
    labels_from_alignment,
)
from csdetect.exceptions import ValidationError
from csdetect.posteriors import (
    LanguagePosteriorMatrix,
    PhoneInventory,
    PosteriorMatrix,
    PriorWeights,
    apply_language_prior,
    l1_normalize,
    language_posteriors,
)
from csdetect.segmentation import Segment, SegmentSequence


def lang(rows):
    return LanguagePosteriorMatrix(np.array(rows, dtype=float))


class TestMaxPhone:
    def test_clear_argmax(self, tiny_inventory):
        labels = decide_max_phone(PosteriorMatrix([[0.5, 0.3, 0.2]]), tiny_inventory)
        assert list(labels.labels) == [L1]

    def test_max_phone_ignores_class_mass(self, inventory):
        # aa=0.3, oo=0.3 (fry) vs k=0.4 (nld): best phone is nld
        m = PosteriorMatrix([[0.3, 0.3, 0.4, 0.0]])
        assert list(decide_max_phone(m, inventory).labels) == [L2]
        assert list(decide_max_language(language_posteriors(m, inventory)).labels) == [L1]

    @pytest.mark.parametrize("order", list(itertools.permutations(["aa", "k", "sil"])))
    def test_tie_break_enumerating_orders(self, order):
        classes = {"aa": L1, "k": L2, "sil": SIL}
        inv = PhoneInventory(tuple((p, classes[p]) for p in order), ("fry", "nld"))
        col = {p: i for i, p in enumerate(order)}

        def row(**vals):
            r = np.zeros(3)
            for p, v in vals.items():
                r[col[p]] = v
            return r

        # frame 0: aa/k tie -> lower inventory index; frame 1: clear k;
        # frame 2: aa/k tie -> previous (k); frame 3: clear sil; frame 4: aa/k tie, prev not tied
        frames = [row(aa=0.4, k=0.4, sil=0.2), row(aa=0.1, k=0.8, sil=0.1),
                  row(aa=0.45, k=0.45, sil=0.1), row(aa=0.1, k=0.1, sil=0.8),
                  row(aa=0.5, k=0.5)]
        labels = decide_max_phone(PosteriorMatrix(frames), inv).labels
        first = L1 if col["aa"] < col["k"] else L2
        assert list(labels) == [first, L2, L2, SIL, first]

    def test_same_class_tie_is_not_ambiguous(self, inventory):
        m = PosteriorMatrix([[0.1, 0.1, 0.8, 0.0], [0.4, 0.4, 0.2, 0.0]])
        assert list(decide_max_phone(m, inventory).labels) == [L2, L1]


class TestMaxLanguage:
    def test_clear(self):
        assert list(decide_max_language(lang([[0.6, 0.2, 0.2]])).labels) == [L1]

    def test_collapsed_case(self):
        assert list(decide_max_language(lang([[0.6, 0.4, 0.0]])).labels) == [L1]

    def test_total_tie(self):
        third = 1 / 3
        labels = decide_max_language(lang([[third] * 3, [0.1, 0.8, 0.1], [third] * 3])).labels
        assert list(labels) == [L1, L2, L2]

    def test_tie_without_previous_among_tied(self):
        labels = decide_max_language(lang([[0.0, 0.0, 1.0], [0.5, 0.5, 0.0]])).labels
        assert list(labels) == [SIL, L1]

    @settings(max_examples=100)
    @given(st.integers(0, 2**32 - 1), st.floats(0.01, 100))
    def test_scaling_all_priors_never_changes_labels(self, seed, c):
        rng = np.random.default_rng(seed)
        x = rng.random((30, 3))
        x[rng.random(30) < 0.2] = 1 / 3
        base = decide_max_language(lang(x / x.sum(1, keepdims=True))).labels
        scaled = x * c
        scaled = scaled / scaled.sum(1, keepdims=True)
        # exact ties survive because every entry of a tied row is scaled identically
        assert np.array_equal(decide_max_language(lang(scaled)).labels, base)


def _sweep_labels(m, inventory, grid, w_sil=1.0):
    out = []
    for w in grid:
        reweighted = apply_language_prior(m, inventory, PriorWeights(w, w_sil))
        out.append(decide_max_language(language_posteriors(reweighted, inventory)).labels)
    return out


INVENTORY = PhoneInventory((("aa", L1), ("oo", L1), ("k", L2), ("sil", SIL)), ("fry", "nld"))


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1))
def test_monotone_sweep(seed):
    inventory = INVENTORY
    rng = np.random.default_rng(seed)
    x = rng.random((40, len(inventory)))
    # plant exact class ties
    x[rng.random(40) < 0.2] = [0.25, 0.25, 0.5, 0.0]
    m = l1_normalize(PosteriorMatrix(x))
    grid = np.sort(rng.uniform(0.01, 0.99, 12))
    labels = _sweep_labels(m, inventory, grid, w_sil=float(rng.uniform(0.2, 3)))
    for lo, hi in zip(labels, labels[1:]):
        assert not np.any((lo == L1) & (hi != L1))
        assert not np.any((hi == L2) & (lo != L2))


def test_rule_agreement_on_dominated_frames(inventory):
    rng = np.random.default_rng(5)
    frames = []
    for _ in range(200):
        j = int(rng.integers(4))
        row = rng.random(4)
        row[j] = 0
        row = row / row.sum() * (1 - rng.uniform(0.5, 1.0))
        row[j] = 1 - row.sum()
        frames.append(row)
    m = PosteriorMatrix(frames)
    phone = decide_max_phone(m, inventory).labels
    lp = language_posteriors(m, inventory).frames
    language = decide_max_language(language_posteriors(m, inventory)).labels
    checked = 0
    for t, row in enumerate(m.frames):
        j = int(np.argmax(row))
        cls = inventory.phones[j][1]
        # construct both conditions: one phone > 0.5 and its class holds the plurality
        if row[j] > 0.5 and lp[t, cls] == lp[t].max():
            assert phone[t] == language[t] == cls
            checked += 1
    assert checked == 200


def test_determinism(inventory):
    rng = np.random.default_rng(9)
    m = l1_normalize(PosteriorMatrix(rng.random((100, 4))))
    a = decide_max_phone(m, inventory).labels
    b = decide_max_phone(m, inventory).labels
    assert np.array_equal(a, b)


def segs(*items, utt="u"):
    return SegmentSequence(utt, [Segment(utt, s, d, c) for s, d, c in items])


def midpoint_oracle(segments, dt, total):
    # exact decimal arithmetic so boundary midpoints are not decided by float noise
    dt = Fraction(repr(dt))
    spans = [(Fraction(repr(s.start)), Fraction(repr(s.start)) + Fraction(repr(s.duration)), s.cls)
             for s in segments]
    out = []
    for f in range(total):
        mid = (f + Fraction(1, 2)) * dt
        hit = [cls for lo, hi, cls in spans if lo <= mid < hi]
        out.append(hit[0] if hit else SIL)
    return out


class TestLabelsFromAlignment:
    def test_single_segment(self):
        labels = labels_from_alignment(segs((0.0, 0.1, L1)), 0.01, 10)
        assert list(labels.labels) == [L1] * 10

    def test_boundary_at_frame_edge(self):
        labels = labels_from_alignment(segs((0.0, 0.05, L1), (0.05, 0.05, L2)), 0.01, 10)
        assert list(labels.labels) == [L1] * 5 + [L2] * 5

    def test_segment_missing_every_midpoint(self):
        seq = segs((0.006, 0.003, L1))
        assert midpoint_oracle(seq, 0.01, 2) == [SIL, SIL]
        assert list(labels_from_alignment(seq, 0.01, 2).labels) == [SIL, SIL]

    def test_short_segment_covering_a_midpoint(self):
        # [0.003, 0.007) contains frame 0's midpoint 0.005
        seq = segs((0.003, 0.004, L1))
        assert midpoint_oracle(seq, 0.01, 2) == [L1, SIL]
        assert list(labels_from_alignment(seq, 0.01, 2).labels) == [L1, SIL]

    def test_gaps_are_silence(self):
        labels = labels_from_alignment(segs((0.02, 0.02, L2)), 0.01, 6)
        assert list(labels.labels) == [SIL, SIL, L2, L2, SIL, SIL]

    def test_overlap_error(self):
        seq = [Segment("u", 0.0, 0.05, L1), Segment("u", 0.03, 0.05, L2)]
        with pytest.raises(ValidationError, match="overlap"):
            labels_from_alignment(seq, 0.01, 10)

    def test_beyond_total(self):
        with pytest.raises(ValidationError, match="beyond"):
            labels_from_alignment(segs((0.0, 0.2, L1)), 0.01, 10)
        # up to half a frame of overhang is tolerated
        labels_from_alignment(segs((0.0, 0.105, L1)), 0.01, 10)

    @settings(max_examples=100)
    @given(st.lists(st.tuples(st.integers(0, 40), st.integers(1, 40), st.sampled_from([L1, L2, SIL])),
                    max_size=8),
           st.sampled_from([0.01, 0.03, 0.025]))
    def test_against_midpoint_oracle(self, raw, dt):
        # millisecond grid times, laid out without overlap
        items, t = [], 0
        for gap, dur, cls in raw:
            t += gap
            items.append((t / 1000, dur / 1000, cls))
            t += dur
        seq = segs(*items)
        total = max(1, int(np.ceil(t / 1000 / dt)))
        assert list(labels_from_alignment(seq, dt, total).labels) == midpoint_oracle(seq, dt, total)


def test_rule_parse():
    assert DecisionRule.parse("max_phone") is DecisionRule.MAX_PHONE
    assert DecisionRule.parse("baseline") is DecisionRule.BASELINE_ALIGNMENT
    with pytest.raises(ValidationError):
        DecisionRule.parse("viterbi")


def test_label_sequence_invariants():
    with pytest.raises(ValidationError):
        FrameLabelSequence([])
    with pytest.raises(ValidationError):
        FrameLabelSequence([0, 1], frame_period=0)
    with pytest.raises(ValidationError):
        FrameLabelSequence([3])


def test_decide_scores_accepts_unnormalized():
    labels = decide_scores([[2.0, 1.0, 0.0], [5.0, 5.0, 1.0]], [0, 1, 2])
    assert list(labels) == [L1, L1]
