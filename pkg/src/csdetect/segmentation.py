"""Run-length segments, CTM I/O, switch counts and duration histograms."""

import math
from dataclasses import dataclass, field

import numpy as np

from ._io import read_text, source_name
from .decision import FrameLabelSequence, labels_from_alignment
from .exceptions import FormatError, ValidationError
from .posteriors import LANGUAGES, SIL_TOKEN, LanguageClass

# CTM times carry 3 decimals; anything closer than this is the same instant.
TIME_TOL = 1e-6
DEFAULT_EDGES = tuple(i * 0.5 for i in range(21))


@dataclass(frozen=True)
class Segment:
    utterance_id: str
    start: float
    duration: float
    cls: LanguageClass
    token: str = ""

    def __post_init__(self):
        start, duration = float(self.start), float(self.duration)
        if not (math.isfinite(start) and start >= 0):
            raise ValidationError(f"segment start must be finite and >= 0, got {self.start}")
        if not (math.isfinite(duration) and duration > 0):
            raise ValidationError(f"segment duration must be finite and > 0, got {self.duration}")
        cls = LanguageClass(self.cls)
        token = self.token
        if cls is LanguageClass.SIL and token == SIL_TOKEN:
            token = ""
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "duration", duration)
        object.__setattr__(self, "cls", cls)
        object.__setattr__(self, "token", token)

    @property
    def end(self):
        return self.start + self.duration


@dataclass(frozen=True)
class SegmentSequence:
    """Time-ordered, non-overlapping segments of one utterance.

    Sequences built from frame labels are maximal runs. Sequences parsed
    from word-level CTM may hold several adjacent segments of the same
    class; :meth:`coalesce` merges those.
    """

    utterance_id: str
    segments: tuple = ()

    def __post_init__(self):
        segments = tuple(self.segments)
        object.__setattr__(self, "segments", segments)
        prev = None
        for seg in segments:
            if seg.utterance_id != self.utterance_id:
                raise ValidationError(
                    f"segment of {seg.utterance_id!r} in sequence of {self.utterance_id!r}"
                )
            if prev is not None:
                if seg.start < prev.start:
                    raise ValidationError(f"{self.utterance_id}: segments not sorted by start")
                if seg.start < prev.end - TIME_TOL:
                    raise ValidationError(
                        f"{self.utterance_id}: segment at {seg.start:.3f}s overlaps the previous one"
                    )
            prev = seg

    def __iter__(self):
        return iter(self.segments)

    def __len__(self):
        return len(self.segments)

    def __getitem__(self, i):
        return self.segments[i]

    @property
    def end(self):
        return self.segments[-1].end if self.segments else 0.0

    @property
    def is_maximal(self):
        return all(a.cls != b.cls for a, b in zip(self.segments, self.segments[1:]))

    def coalesce(self, max_gap=TIME_TOL):
        """Merge neighbouring same-class segments separated by at most ``max_gap`` seconds.

        Merged segments take the class name as token.
        """
        merged = []
        for seg in self.segments:
            if merged and merged[-1].cls == seg.cls and seg.start - merged[-1].end <= max_gap:
                last = merged.pop()
                seg = Segment(self.utterance_id, last.start, seg.end - last.start, seg.cls)
            merged.append(seg)
        return SegmentSequence(self.utterance_id, merged)


@dataclass(frozen=True)
class SwitchCount:
    count: int
    utterance_id: str


@dataclass(frozen=True)
class DurationHistogram:
    """Per-language counts of segment durations.

    ``counts[cls]`` has one entry per bin ``[e_i, e_{i+1})`` followed by an
    overflow bin for durations at or above the last edge. Durations below
    the first edge land in ``underflow``.
    """

    bin_edges: tuple
    counts: dict
    underflow: dict = field(default_factory=dict)

    def total(self):
        return int(sum(c.sum() for c in self.counts.values()) + sum(self.underflow.values()))

    def bin_labels(self):
        edges = self.bin_edges
        labels = [f"[{a:g},{b:g})" for a, b in zip(edges, edges[1:])]
        return labels + [f">={edges[-1]:g}"]


def frames_to_segments(labels):
    """Collapse frame labels into maximal runs."""
    values = labels.labels
    dt = labels.frame_period
    utt = labels.utterance_id
    bounds = np.flatnonzero(np.diff(values)) + 1
    starts = np.concatenate(([0], bounds))
    ends = np.concatenate((bounds, [values.size]))
    segments = [
        Segment(utt, int(s) * dt, int(e - s) * dt, LanguageClass(int(values[s])))
        for s, e in zip(starts, ends)
    ]
    return SegmentSequence(utt, segments)


def segments_to_frames(segments, frame_period, total_frames):
    """Frame labels for a segment sequence by the frame-midpoint rule."""
    return labels_from_alignment(segments, frame_period, total_frames)


def _parse_token(token, language_names):
    if token == SIL_TOKEN:
        return LanguageClass.SIL, ""
    for cls, name in zip(LANGUAGES, language_names):
        if token == name:
            return cls, ""
        suffix = "_" + name
        if token.endswith(suffix) and len(token) > len(suffix):
            return cls, token[: -len(suffix)]
    return LanguageClass.SIL, token


def _format_token(seg, language_names):
    if seg.cls is LanguageClass.SIL:
        return seg.token or SIL_TOKEN
    name = language_names[seg.cls]
    return f"{seg.token}_{name}" if seg.token else name


def parse_ctm(stream, language_names):
    """Parse CTM text into one :class:`SegmentSequence` per utterance.

    Utterances come back in order of first appearance; segments within an
    utterance are sorted by start time. Tokens are language-tagged with a
    ``_<language>`` suffix; ``sil`` and untagged tokens are silence.
    """
    src = source_name(stream, "<ctm>")
    groups = {}
    for lineno, line in enumerate(read_text(stream).split("\n"), start=1):
        line = line.strip()
        if not line or line.startswith(";;"):
            continue
        parts = line.split()
        if len(parts) != 5:
            raise FormatError(f"expected 5 fields, got {len(parts)}", src, lineno)
        utt, _channel, start_s, dur_s, token = parts
        try:
            start, duration = float(start_s), float(dur_s)
        except ValueError as exc:
            raise FormatError(str(exc), src, lineno) from None
        if not (math.isfinite(start) and math.isfinite(duration)):
            raise FormatError("non-finite time", src, lineno)
        if start < 0 or duration < 0:
            raise FormatError("negative time", src, lineno)
        if duration == 0:
            raise FormatError("zero duration", src, lineno)
        cls, word = _parse_token(token, language_names)
        groups.setdefault(utt, []).append((start, lineno, Segment(utt, start, duration, cls, word)))
    out = []
    for utt, items in groups.items():
        items.sort(key=lambda item: (item[0], item[1]))
        try:
            out.append(SegmentSequence(utt, [seg for _, _, seg in items]))
        except ValidationError as exc:
            raise FormatError(str(exc), src) from None
    return out


def write_ctm(sequences, language_names):
    """Render segment sequences as CTM text with 3-decimal times."""
    if isinstance(sequences, SegmentSequence):
        sequences = [sequences]
    lines = []
    for seq in sequences:
        for seg in seq:
            token = _format_token(seg, language_names)
            # round boundaries rather than durations so adjacent segments stay adjacent
            start_ms = round(seg.start * 1000)
            dur_ms = round(seg.end * 1000) - start_ms
            if dur_ms < 1:
                raise ValidationError(
                    f"{seq.utterance_id}: segment at {seg.start:.6f}s is shorter than 1 ms"
                )
            lines.append(f"{seq.utterance_id} 1 {start_ms / 1000:.3f} {dur_ms / 1000:.3f} {token}\n")
    return "".join(lines)


def count_switches(segments):
    """Language alternations between consecutive non-silence segments."""
    langs = [seg.cls for seg in segments if seg.cls is not LanguageClass.SIL]
    count = sum(1 for a, b in zip(langs, langs[1:]) if a != b)
    return SwitchCount(count, segments.utterance_id)


def check_edges(bin_edges):
    edges = tuple(float(e) for e in bin_edges)
    if not edges:
        raise ValidationError("need at least one bin edge")
    if not all(math.isfinite(e) for e in edges):
        raise ValidationError("bin edges must be finite")
    if any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValidationError(f"bin edges must be strictly ascending, got {edges}")
    return edges


def duration_histogram(sequences, bin_edges=DEFAULT_EDGES):
    """Histogram of non-silence segment durations per language."""
    if isinstance(sequences, SegmentSequence):
        sequences = [sequences]
    edges = check_edges(bin_edges)
    edge_arr = np.array(edges)
    counts = {cls: np.zeros(len(edges), dtype=np.int64) for cls in LANGUAGES}
    underflow = {cls: 0 for cls in LANGUAGES}
    for seq in sequences:
        for seg in seq:
            if seg.cls is LanguageClass.SIL:
                continue
            # round away float noise such as 1.9999999999 from frame arithmetic
            d = round(seg.duration, 9)
            idx = int(np.searchsorted(edge_arr, d, side="right")) - 1
            if idx < 0:
                underflow[seg.cls] += 1
            else:
                counts[seg.cls][min(idx, len(edges) - 1)] += 1
    return DurationHistogram(edges, counts, underflow)


def label_dump(labels, language_names):
    """One line ``<utt> <class> <class> ...`` for a frame label sequence."""
    names = (language_names[0], language_names[1], SIL_TOKEN)
    return labels.utterance_id + " " + " ".join(names[v] for v in labels.labels) + "\n"


__all__ = [
    "DEFAULT_EDGES",
    "DurationHistogram",
    "FrameLabelSequence",
    "Segment",
    "SegmentSequence",
    "SwitchCount",
    "count_switches",
    "duration_histogram",
    "frames_to_segments",
    "label_dump",
    "parse_ctm",
    "segments_to_frames",
    "write_ctm",
]
