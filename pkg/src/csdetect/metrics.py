"""Missed-time metric, prior sweeps, DET curves and equal error rate."""

import math
from dataclasses import dataclass

import numpy as np

from .decision import DecisionRule, FrameLabelSequence, decide_scores
from .exceptions import NoCrossingError, ValidationError
from .posteriors import LanguageClass, PriorWeights, _check_columns, l1_normalize, language_posteriors

L1 = int(LanguageClass.L1)
L2 = int(LanguageClass.L2)


@dataclass(frozen=True)
class MissRates:
    """Fraction of reference L1 (L2) frames labelled as anything else.

    A rate is ``None`` when the reference holds no frame of that language.
    """

    missed_l1: float
    missed_l2: float
    ref_l1_frames: int
    ref_l2_frames: int
    missed_l1_frames: int = 0
    missed_l2_frames: int = 0


@dataclass(frozen=True)
class DetPoint:
    weights: PriorWeights
    rates: MissRates


@dataclass(frozen=True)
class DetCurve:
    points: tuple
    rule: DecisionRule

    def __post_init__(self):
        points = tuple(self.points)
        w = [p.weights.w_l1 for p in points]
        if any(b <= a for a, b in zip(w, w[1:])):
            raise ValidationError("DET points must be strictly ascending in w_l1")
        object.__setattr__(self, "points", points)

    def __len__(self):
        return len(self.points)

    @property
    def w_l1(self):
        return np.array([p.weights.w_l1 for p in self.points])

    @property
    def missed_l1(self):
        return np.array([_nan(p.rates.missed_l1) for p in self.points])

    @property
    def missed_l2(self):
        return np.array([_nan(p.rates.missed_l2) for p in self.points])

    def monotonicity_violations(self):
        """Indices ``i`` where missed_l1 rises or missed_l2 falls from point i to i+1."""
        m1, m2 = self.missed_l1, self.missed_l2
        bad = (np.diff(m1) > 0) | (np.diff(m2) < 0)
        return [int(i) for i in np.flatnonzero(bad)]


@dataclass(frozen=True)
class EerResult:
    eer: float
    w_at_eer: PriorWeights
    interpolated: bool


def _nan(value):
    return math.nan if value is None else value


def _rate(num, den):
    return None if den == 0 else num / den


def _check_pair(hyp, ref):
    if len(hyp) != len(ref):
        raise ValidationError(
            f"{ref.utterance_id}: hypothesis has {len(hyp)} frames, reference {len(ref)}"
        )
    if not math.isclose(hyp.frame_period, ref.frame_period, rel_tol=1e-9, abs_tol=0.0):
        raise ValidationError(
            f"{ref.utterance_id}: frame period mismatch {hyp.frame_period} vs {ref.frame_period}"
        )


def _miss_counts(hyp_labels, ref_labels):
    ref1 = ref_labels == L1
    ref2 = ref_labels == L2
    return (
        int(np.count_nonzero(ref1 & (hyp_labels != L1))),
        int(np.count_nonzero(ref1)),
        int(np.count_nonzero(ref2 & (hyp_labels != L2))),
        int(np.count_nonzero(ref2)),
    )


def missed_time(hyp, ref, pooling="pooled"):
    """Missed L1 and L2 time of ``hyp`` against ``ref``.

    ``hyp`` and ``ref`` are label sequences or equally long lists of them.
    With ``pooling="pooled"`` numerators and denominators are summed over
    all utterances before dividing. ``pooling="mean"`` averages the
    per-utterance rates over utterances where each rate is defined; the
    frame counts then still report pooled totals.
    """
    if not isinstance(hyp, (list, tuple)):
        hyp, ref = [hyp], [ref]
    if len(hyp) != len(ref):
        raise ValidationError(f"{len(hyp)} hypotheses for {len(ref)} references")
    if pooling not in ("pooled", "mean"):
        raise ValidationError(f"pooling must be 'pooled' or 'mean', got {pooling!r}")
    totals = np.zeros(4, dtype=np.int64)
    per_utt = []
    for h, r in zip(hyp, ref):
        _check_pair(h, r)
        counts = _miss_counts(h.labels, r.labels)
        totals += counts
        per_utt.append(counts)
    m1, n1, m2, n2 = (int(v) for v in totals)
    if pooling == "pooled":
        rate1, rate2 = _rate(m1, n1), _rate(m2, n2)
    else:
        r1 = [a / b for a, b, _, _ in per_utt if b]
        r2 = [a / b for _, _, a, b in per_utt if b]
        rate1 = sum(r1) / len(r1) if r1 else None
        rate2 = sum(r2) / len(r2) if r2 else None
    return MissRates(rate1, rate2, n1, n2, m1, m2)


def logit_grid(n=101, low=-6.0, high=6.0, w_sil=1.0):
    """``n`` weights with ``w_l1 = sigmoid(x)`` for ``x`` evenly spaced in ``[low, high]``."""
    if n < 1:
        raise ValidationError("grid needs at least one point")
    xs = np.linspace(low, high, n) if n > 1 else np.array([(low + high) / 2])
    return [PriorWeights(float(1.0 / (1.0 + math.exp(-x))), w_sil) for x in xs]


def check_grid(weight_grid):
    grid = list(weight_grid)
    if not grid:
        raise ValidationError("empty weight grid")
    w = [g.w_l1 for g in grid]
    if any(b <= a for a, b in zip(w, w[1:])):
        raise ValidationError("weight grid must be strictly ascending in w_l1")
    return grid


def det_sweep(matrices, inventory, refs, rule, weight_grid, pooling="pooled"):
    """Trace a DET curve by sweeping the language prior.

    For every weight the posteriors are reweighted per class, decided by
    ``rule`` and scored against ``refs`` with :func:`missed_time`. The
    decision compares reweighted scores before renormalization, which has
    the same argmax and keeps the sweep exactly monotone in floating point.
    """
    rule = DecisionRule.parse(rule)
    if rule is DecisionRule.BASELINE_ALIGNMENT:
        raise ValidationError(
            "baseline DET curves come from per-weight hypothesis CTMs; use det_from_hypotheses"
        )
    if not isinstance(matrices, (list, tuple)):
        matrices, refs = [matrices], [refs]
    if len(matrices) != len(refs):
        raise ValidationError(f"{len(matrices)} posterior matrices for {len(refs)} references")
    grid = check_grid(weight_grid)

    prepared = []
    for m, r in zip(matrices, refs):
        _check_columns(m, inventory)
        m = l1_normalize(m)
        if rule is DecisionRule.MAX_LANGUAGE:
            scores, columns = language_posteriors(m, inventory).frames, np.arange(3)
        else:
            scores, columns = m.frames, inventory.classes
        if scores.shape[0] != len(r):
            raise ValidationError(
                f"{r.utterance_id}: {scores.shape[0]} posterior frames, {len(r)} reference frames"
            )
        prepared.append((scores, columns, r))

    points = []
    for weights in grid:
        mult = weights.multipliers()
        hyps = []
        for scores, columns, r in prepared:
            try:
                labels = decide_scores(scores * mult[columns], columns)
            except Exception as exc:  # pragma: no cover - context for unexpected failures
                raise RuntimeError(f"sweep failed at w_l1={weights.w_l1}: {exc}") from exc
            hyps.append(FrameLabelSequence(labels, r.frame_period, r.utterance_id))
        points.append(DetPoint(weights, missed_time(hyps, list(r for _, _, r in prepared), pooling)))
    curve = DetCurve(points, rule)
    if rule is DecisionRule.MAX_LANGUAGE:
        bad = curve.monotonicity_violations()
        if bad:
            raise AssertionError(f"non-monotone max-language sweep at grid indices {bad}")
    return curve


def det_from_hypotheses(hyps_by_weight, refs, rule=DecisionRule.BASELINE_ALIGNMENT, pooling="pooled"):
    """DET curve from precomputed hypotheses, one list per weight.

    ``hyps_by_weight`` is a sequence of ``(PriorWeights, [FrameLabelSequence])``
    pairs; used for the alignment baseline, whose hypotheses come from
    decoding with interpolated language models.
    """
    items = sorted(hyps_by_weight, key=lambda item: item[0].w_l1)
    check_grid([w for w, _ in items])
    points = [DetPoint(w, missed_time(list(h), list(refs), pooling)) for w, h in items]
    return DetCurve(points, DecisionRule.parse(rule))


def eer(curve):
    """Equal error rate where ``missed_l1 - missed_l2`` changes sign.

    Returns the rate at the first point with an exact zero difference, or
    otherwise interpolates both rate series linearly in ``w_l1`` between
    the first bracketing pair of points.
    """
    points = [p for p in curve.points if p.rates.missed_l1 is not None and p.rates.missed_l2 is not None]
    if not points:
        raise NoCrossingError("no point of the curve has both rates defined")
    diffs = [p.rates.missed_l1 - p.rates.missed_l2 for p in points]
    for i, d in enumerate(diffs):
        if d == 0:
            p = points[i]
            return EerResult(p.rates.missed_l1, p.weights, False)
        if i + 1 < len(diffs) and (d > 0) != (diffs[i + 1] > 0) and diffs[i + 1] != 0:
            a, b = points[i], points[i + 1]
            t = d / (d - diffs[i + 1])
            w = a.weights.w_l1 + t * (b.weights.w_l1 - a.weights.w_l1)
            rate = a.rates.missed_l1 + t * (b.rates.missed_l1 - a.rates.missed_l1)
            return EerResult(rate, PriorWeights(w, a.weights.w_sil), True)
    raise NoCrossingError(
        "miss rates never cross in the swept range; widen the weight grid"
    )


def curve_to_csv(curve):
    lines = ["w_l1,missed_l1,missed_l2\n"]
    for p in curve.points:
        lines.append(
            f"{p.weights.w_l1:.6f},{_nan(p.rates.missed_l1):.6f},{_nan(p.rates.missed_l2):.6f}\n"
        )
    return "".join(lines)


def curve_from_csv(text, rule):
    """Inverse of :func:`curve_to_csv` (rates rounded to 6 decimals)."""
    rows = [line.split(",") for line in text.strip().split("\n")]
    if not rows or rows[0] != ["w_l1", "missed_l1", "missed_l2"]:
        raise ValidationError("expected header 'w_l1,missed_l1,missed_l2'")
    points = []
    for w, m1, m2 in rows[1:]:
        r1, r2 = float(m1), float(m2)
        rates = MissRates(None if math.isnan(r1) else r1, None if math.isnan(r2) else r2, 0, 0)
        points.append(DetPoint(PriorWeights(float(w)), rates))
    return DetCurve(points, DecisionRule.parse(rule))
