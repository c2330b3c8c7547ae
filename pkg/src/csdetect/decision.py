"""Per-frame language decisions.

Three rules turn detector output into frame labels: the language of the
single most likely phone, the most likely class after summing phone
posteriors per class, and the language tags of a time-aligned hypothesis.
Exact ties keep the previous frame's label when it is among the tied
classes, otherwise the lowest index wins.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError
from .posteriors import (
    LanguageClass,
    _check_columns,
    _check_frame_period,
    language_posteriors,
)

# Midpoints exactly on a segment edge belong to the segment that starts there.
_EDGE_EPS = 1e-9
# Overlap tolerance, below the 1 ms CTM time resolution.
_OVERLAP_TOL = 1e-6


class DecisionRule(enum.Enum):
    BASELINE_ALIGNMENT = "baseline"
    MAX_PHONE = "max-phone"
    MAX_LANGUAGE = "max-language"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower().replace("_", "-"))
        except ValueError:
            choices = ", ".join(r.value for r in cls)
            raise ValidationError(f"unknown rule {value!r}; choose from {choices}") from None


@dataclass(frozen=True)
class FrameLabelSequence:
    labels: np.ndarray
    frame_period: float = 0.010
    utterance_id: str = "utt"

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int8)
        if labels.ndim != 1 or labels.size == 0:
            raise ValidationError("a label sequence needs at least one frame")
        if labels.min() < 0 or labels.max() > 2:
            raise ValidationError("labels must be L1, L2 or SIL")
        _check_frame_period(self.frame_period)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "frame_period", float(self.frame_period))

    def __len__(self):
        return self.labels.size

    def __eq__(self, other):
        if not isinstance(other, FrameLabelSequence):
            return NotImplemented
        return (
            self.utterance_id == other.utterance_id
            and self.frame_period == other.frame_period
            and np.array_equal(self.labels, other.labels)
        )

    __hash__ = None


def decide_scores(scores, column_classes):
    """Argmax over columns of ``scores`` mapped to classes, with hysteresis ties.

    ``scores`` need not be normalized; only the ordering within a row
    matters. ``column_classes`` gives the class of every column.
    """
    scores = np.asarray(scores, dtype=np.float64)
    column_classes = np.asarray(column_classes, dtype=np.int8)
    top = scores.max(axis=1)
    tied = scores == top[:, None]
    labels = column_classes[np.argmax(tied, axis=1)].copy()
    tied_cls = np.zeros((scores.shape[0], 3), dtype=bool)
    for cls in range(3):
        cols = column_classes == cls
        if cols.any():
            tied_cls[:, cls] = tied[:, cols].any(axis=1)
    for f in np.flatnonzero(tied_cls.sum(axis=1) > 1):
        if f > 0 and tied_cls[f, labels[f - 1]]:
            labels[f] = labels[f - 1]
    return labels


_CLASS_COLUMNS = np.array([0, 1, 2], dtype=np.int8)


def decide_max_phone(matrix, inventory):
    """Label each frame with the class of its most likely phone."""
    _check_columns(matrix, inventory)
    labels = decide_scores(matrix.frames, inventory.classes)
    return FrameLabelSequence(labels, matrix.frame_period, matrix.utterance_id)


def decide_max_language(lang_matrix):
    """Label each frame with its most likely class among (L1, L2, SIL)."""
    labels = decide_scores(lang_matrix.frames, _CLASS_COLUMNS)
    return FrameLabelSequence(labels, lang_matrix.frame_period, lang_matrix.utterance_id)


def decide(matrix, inventory, rule):
    rule = DecisionRule.parse(rule)
    if rule is DecisionRule.MAX_PHONE:
        return decide_max_phone(matrix, inventory)
    if rule is DecisionRule.MAX_LANGUAGE:
        return decide_max_language(language_posteriors(matrix, inventory))
    raise ValidationError("the baseline rule labels frames from an alignment, not posteriors")


def labels_from_alignment(ctm, frame_period, total_frames):
    """Frame labels from a time-aligned segment sequence.

    Frame ``f`` spans ``[f*dt, (f+1)*dt)`` and takes the class of the
    segment containing its midpoint; frames whose midpoint no segment
    covers are SIL.
    """
    _check_frame_period(frame_period)
    total_frames = int(total_frames)
    if total_frames < 1:
        raise ValidationError("total_frames must be at least 1")
    segments = list(getattr(ctm, "segments", ctm))
    utt = getattr(ctm, "utterance_id", None) or (segments[0].utterance_id if segments else "utt")
    limit = total_frames * frame_period + frame_period / 2
    labels = np.full(total_frames, LanguageClass.SIL, dtype=np.int8)
    prev_end = -math.inf
    for seg in segments:
        end = seg.start + seg.duration
        if seg.start < prev_end - _OVERLAP_TOL:
            raise ValidationError(
                f"{utt}: segment at {seg.start:.3f}s overlaps or precedes the previous one"
            )
        if end > limit + _OVERLAP_TOL:
            raise ValidationError(
                f"{utt}: segment ends at {end:.3f}s, beyond {total_frames} frames of {frame_period}s"
            )
        lo = max(0, math.ceil(seg.start / frame_period - 0.5 - _EDGE_EPS))
        hi = min(total_frames, math.ceil(end / frame_period - 0.5 - _EDGE_EPS))
        if hi > lo:
            labels[lo:hi] = seg.cls
        prev_end = end
    return FrameLabelSequence(labels, frame_period, utt)
