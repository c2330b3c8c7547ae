"""Code-switching detection from frame-level phone posteriors."""

from .decision import (
    DecisionRule,
    FrameLabelSequence,
    decide,
    decide_max_language,
    decide_max_phone,
    labels_from_alignment,
)
from .estimators import CodeSwitchDetector, LanguagePosteriorTransformer, LanguagePriorReweighter
from .exceptions import CSDetectError, FormatError, NoCrossingError, ValidationError
from .metrics import (
    DetCurve,
    DetPoint,
    EerResult,
    MissRates,
    det_from_hypotheses,
    det_sweep,
    eer,
    logit_grid,
    missed_time,
)
from .posteriors import (
    LanguageClass,
    LanguagePosteriorMatrix,
    PhoneInventory,
    PosteriorMatrix,
    PriorWeights,
    apply_language_prior,
    l1_normalize,
    language_posteriors,
    load_posteriors,
    parse_inventory,
    write_posteriors,
)
from .segmentation import (
    DurationHistogram,
    Segment,
    SegmentSequence,
    SwitchCount,
    count_switches,
    duration_histogram,
    frames_to_segments,
    parse_ctm,
    segments_to_frames,
    write_ctm,
)

__version__ = "0.1.0"

__all__ = [
    "CSDetectError",
    "CodeSwitchDetector",
    "DecisionRule",
    "DetCurve",
    "DetPoint",
    "DurationHistogram",
    "EerResult",
    "FormatError",
    "FrameLabelSequence",
    "LanguageClass",
    "LanguagePosteriorMatrix",
    "LanguagePosteriorTransformer",
    "LanguagePriorReweighter",
    "MissRates",
    "NoCrossingError",
    "PhoneInventory",
    "PosteriorMatrix",
    "PriorWeights",
    "Segment",
    "SegmentSequence",
    "SwitchCount",
    "ValidationError",
    "apply_language_prior",
    "count_switches",
    "decide",
    "decide_max_language",
    "decide_max_phone",
    "det_from_hypotheses",
    "det_sweep",
    "duration_histogram",
    "eer",
    "frames_to_segments",
    "l1_normalize",
    "labels_from_alignment",
    "language_posteriors",
    "load_posteriors",
    "logit_grid",
    "missed_time",
    "parse_ctm",
    "parse_inventory",
    "segments_to_frames",
    "write_ctm",
    "write_posteriors",
]
