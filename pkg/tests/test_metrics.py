import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import L1, L2, SIL
from csdetect.decision import DecisionRule, FrameLabelSequence
from csdetect.exceptions import NoCrossingError, ValidationError
from csdetect.metrics import (
    DetCurve,
    DetPoint,
    MissRates,
    curve_from_csv,
    curve_to_csv,
    det_from_hypotheses,
    det_sweep,
    eer,
    logit_grid,
    missed_time,
)
from csdetect.posteriors import PhoneInventory, PosteriorMatrix, PriorWeights
from csdetect.synth import SynthConfig, generate, oracle_miss_rates


def labels(values, utt="u"):
    return FrameLabelSequence(values, 0.01, utt)


class TestMissedTime:
    def test_identity(self):
        r = missed_time(labels([L1, L2, SIL]), labels([L1, L2, SIL]))
        assert (r.missed_l1, r.missed_l2) == (0, 0)

    def test_hand_count(self):
        r = missed_time(labels([L1, L2, L2, L2]), labels([L1, L1, L2, L2]))
        # ref L1 frames {0,1}; frame 1 hypothesised L2 -> 1/2; no L2 frame missed
        assert (r.missed_l1, r.missed_l2) == (0.5, 0.0)
        assert (r.ref_l1_frames, r.ref_l2_frames) == (2, 2)

    def test_all_silence_reference(self):
        r = missed_time(labels([L1, L2]), labels([SIL, SIL]))
        assert r.missed_l1 is None and r.missed_l2 is None

    def test_silence_hyp_counts_as_miss(self):
        r = missed_time(labels([SIL, SIL]), labels([L1, L2]))
        assert (r.missed_l1, r.missed_l2) == (1.0, 1.0)

    def test_length_mismatch(self):
        with pytest.raises(ValidationError, match="frames"):
            missed_time(labels([L1]), labels([L1, L1]))

    def test_frame_period_mismatch(self):
        with pytest.raises(ValidationError, match="frame period"):
            missed_time(FrameLabelSequence([L1], 0.01), FrameLabelSequence([L1], 0.03))

    def test_pooled_is_frame_weighted(self):
        hyp = [labels([L2], "a"), labels([L1] * 9, "b")]
        ref = [labels([L1], "a"), labels([L1] * 9, "b")]
        assert missed_time(hyp, ref).missed_l1 == pytest.approx(0.1)
        assert missed_time(hyp, ref, pooling="mean").missed_l1 == pytest.approx(0.5)

    @settings(max_examples=200)
    @given(st.lists(st.tuples(st.sampled_from([0, 1, 2]), st.sampled_from([0, 1, 2])),
                    min_size=1, max_size=50))
    def test_bounds_and_oracle(self, pairs):
        hyp = labels([h for h, _ in pairs])
        ref = labels([r for _, r in pairs])
        rates = missed_time(hyp, ref)
        assert rates == oracle_miss_rates(hyp, [ref])
        for v in (rates.missed_l1, rates.missed_l2):
            assert v is None or 0 <= v <= 1

    @given(st.lists(st.tuples(st.sampled_from([0, 1, 2]), st.sampled_from([0, 1, 2])),
                    min_size=1, max_size=50))
    def test_language_swap_symmetry(self, pairs):
        swap = {0: 1, 1: 0, 2: 2}
        a = missed_time(labels([h for h, _ in pairs]), labels([r for _, r in pairs]))
        b = missed_time(labels([swap[h] for h, _ in pairs]), labels([swap[r] for _, r in pairs]))
        assert (a.missed_l1, a.missed_l2) == (b.missed_l2, b.missed_l1)


def curve(rows):
    points = [DetPoint(PriorWeights(w), MissRates(m1, m2, 1, 1)) for w, m1, m2 in rows]
    return DetCurve(points, DecisionRule.MAX_LANGUAGE)


class TestEer:
    def test_exact_zero(self):
        r = eer(curve([(0.2, 0.3, 0.2), (0.5, 0.25, 0.25), (0.8, 0.2, 0.3)]))
        assert (r.eer, r.w_at_eer.w_l1, r.interpolated) == (0.25, 0.5, False)

    def test_interpolated(self):
        r = eer(curve([(0.4, 0.2, 0.1), (0.6, 0.1, 0.2)]))
        # crossing halfway: t = 0.1 / 0.2 = 0.5, rate 0.2 - 0.5*0.1
        assert r.eer == pytest.approx(0.15, abs=1e-15)
        assert r.w_at_eer.w_l1 == pytest.approx(0.5, abs=1e-15)
        assert r.interpolated

    def test_asymmetric_interpolation(self):
        # diffs +0.3 and -0.1 -> t = 0.75
        r = eer(curve([(0.2, 0.4, 0.1), (0.6, 0.2, 0.3)]))
        assert r.w_at_eer.w_l1 == pytest.approx(0.2 + 0.75 * 0.4)
        assert r.eer == pytest.approx(0.4 - 0.75 * 0.2)

    def test_no_crossing(self):
        with pytest.raises(NoCrossingError):
            eer(curve([(0.2, 0.5, 0.1), (0.5, 0.4, 0.2), (0.8, 0.3, 0.25)]))

    def test_undefined_rates_skipped(self):
        c = DetCurve([
            DetPoint(PriorWeights(0.1), MissRates(None, 0.0, 0, 1)),
            DetPoint(PriorWeights(0.4), MissRates(0.2, 0.1, 1, 1)),
            DetPoint(PriorWeights(0.6), MissRates(0.1, 0.2, 1, 1)),
        ], DecisionRule.MAX_PHONE)
        assert eer(c).eer == pytest.approx(0.15)

    def test_csv_round_trip(self):
        c = curve([(0.2, 0.3, 0.2), (0.5, 0.25, 0.25)])
        text = curve_to_csv(c)
        assert text.splitlines()[0] == "w_l1,missed_l1,missed_l2"
        assert text.splitlines()[1] == "0.200000,0.300000,0.200000"
        assert curve_to_csv(curve_from_csv(text, "max-language")) == text


class TestGrid:
    def test_logit_spacing(self):
        grid = logit_grid()
        assert len(grid) == 101
        assert grid[50].w_l1 == 0.5
        assert grid[0].w_l1 == pytest.approx(1 / (1 + math.exp(6)))
        x = [math.log(g.w_l1 / g.w_l2) for g in grid]
        np.testing.assert_allclose(np.diff(x), 0.12, atol=1e-9)


INV = PhoneInventory((("aa", L1), ("oo", L1), ("k", L2), ("sil", SIL)), ("fry", "nld"))


class TestSweep:
    def separable(self):
        rows = [[0.9, 0.05, 0.05, 0], [0.05, 0.05, 0.9, 0], [0, 0, 0, 1.0]]
        m = PosteriorMatrix(rows)
        return m, labels([L1, L2, SIL])

    def test_single_weight_separable(self):
        m, ref = self.separable()
        c = det_sweep([m], INV, [ref], "max-language", [PriorWeights(0.5)])
        assert len(c) == 1
        assert (c.points[0].rates.missed_l1, c.points[0].rates.missed_l2) == (0, 0)

    def test_limits(self):
        cfg = SynthConfig(seed=3, n_utterances=3, utterance_dur=5, confusability=0.8,
                          concentration=2, confusable_fraction=0.5)
        truth, mats = generate(cfg)
        c = det_sweep(mats, cfg.inventory, list(truth.frames), "max-language",
                      [PriorWeights(0.5), PriorWeights(1 - 1e-9)])
        last = c.points[-1].rates
        assert last.missed_l1 == 0
        assert last.missed_l2 == max(p.rates.missed_l2 for p in c.points)

    def test_empty_grid(self):
        m, ref = self.separable()
        with pytest.raises(ValidationError, match="empty"):
            det_sweep([m], INV, [ref], "max-language", [])

    def test_unsorted_grid(self):
        m, ref = self.separable()
        with pytest.raises(ValidationError, match="ascending"):
            det_sweep([m], INV, [ref], "max-phone", [PriorWeights(0.6), PriorWeights(0.4)])

    def test_baseline_rejected(self):
        m, ref = self.separable()
        with pytest.raises(ValidationError, match="baseline"):
            det_sweep([m], INV, [ref], "baseline", [PriorWeights(0.5)])

    def test_matches_per_weight_missed_time(self):
        """Sweep points equal decide-then-score at each weight on its own."""
        from csdetect.decision import decide
        from csdetect.posteriors import apply_language_prior, l1_normalize

        cfg = SynthConfig(seed=11, n_utterances=2, utterance_dur=4, confusability=0.7,
                          concentration=1.5, confusable_fraction=0.5)
        truth, mats = generate(cfg)
        grid = logit_grid(15, -3, 3)
        for rule in ("max-language", "max-phone"):
            c = det_sweep(mats, cfg.inventory, list(truth.frames), rule, grid)
            for p in c.points:
                hyps = [decide(apply_language_prior(l1_normalize(m), cfg.inventory, p.weights),
                               cfg.inventory, rule) for m in mats]
                assert p.rates == missed_time(hyps, list(truth.frames))

    def test_language_swap_symmetry(self):
        cfg = SynthConfig(seed=5, n_utterances=3, utterance_dur=5, confusability=0.8,
                          concentration=1.0, confusable_fraction=0.4)
        truth, mats = generate(cfg)
        inv = cfg.inventory
        swapped_inv = PhoneInventory(
            tuple((n, {L1: L2, L2: L1, SIL: SIL}[c]) for n, c in inv.phones),
            inv.language_names[::-1],
        )
        swap = np.array([1, 0, 2], dtype=np.int8)
        swapped_refs = [FrameLabelSequence(swap[r.labels], r.frame_period, r.utterance_id)
                        for r in truth.frames]
        grid = logit_grid(21, -4, 4)
        a = det_sweep(mats, inv, list(truth.frames), "max-language", grid)
        b = det_sweep(mats, swapped_inv, swapped_refs, "max-language",
                      [PriorWeights(g.w_l2) for g in reversed(grid)])
        for p, q in zip(a.points, reversed(b.points)):
            assert (p.rates.missed_l1, p.rates.missed_l2) == (q.rates.missed_l2, q.rates.missed_l1)


def test_det_from_hypotheses_sorts_by_weight():
    ref = [labels([L1, L1, L2, L2])]
    items = [
        (PriorWeights(0.8), [labels([L1, L1, L1, L2])]),
        (PriorWeights(0.2), [labels([L2, L2, L2, L2])]),
    ]
    c = det_from_hypotheses(items, ref)
    assert list(c.w_l1) == [0.2, 0.8]
    assert list(c.missed_l1) == [1.0, 0.0] and list(c.missed_l2) == [0.0, 0.5]
    r = eer(c)
    # diffs +1.0, -0.5 -> t = 2/3, eer = 1 - 2/3
    assert r.eer == pytest.approx(1 / 3)
