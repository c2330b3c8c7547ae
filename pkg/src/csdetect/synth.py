"""Synthetic bilingual corpora with controllable phone confusability.

Ground truth is a sequence of monolingual segments with exponential
durations. Posteriors put a random share ``m ~ Beta(concentration, 1)`` of
each frame's mass on one phone of the true class and spread the rest over
the other phones of that class. On a random ``confusable_fraction`` of
language frames, a fraction ``confusability`` of the concentrated mass moves
to the paired phone of the other language. That makes the expected miss
rate of both decision rules available in closed form (see
:func:`expected_miss_rates`).

Randomness: utterance ``i`` draws its ground truth from
``numpy.random.default_rng([seed, i, 0])`` and its posteriors from
``numpy.random.default_rng([seed, i, 1])``.
"""

import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from ._io import atomic_write_text
from .decision import DecisionRule, FrameLabelSequence
from .exceptions import ValidationError
from .metrics import MissRates
from .posteriors import (
    LANGUAGES,
    LanguageClass,
    PhoneInventory,
    PosteriorMatrix,
    parse_inventory,
    write_posteriors,
)
from .segmentation import frames_to_segments, write_ctm

_BASE_PHONES = "a e i o u y k t s m n l r p b d g f v z h j w x q".split()


def default_inventory(l1_name="fry", l2_name="nld", phones_per_language=5, sil_phones=1):
    if not 1 <= phones_per_language <= len(_BASE_PHONES):
        raise ValidationError(f"phones_per_language: must be in [1, {len(_BASE_PHONES)}]")
    if sil_phones < 1:
        raise ValidationError("sil_phones: must be at least 1")
    base = _BASE_PHONES[:phones_per_language]
    phones = [(f"{l1_name}_{p}", LanguageClass.L1) for p in base]
    phones += [(f"{l2_name}_{p}", LanguageClass.L2) for p in base]
    phones += [("sil" if k == 0 else f"sil{k}", LanguageClass.SIL) for k in range(sil_phones)]
    return PhoneInventory(tuple(phones), (l1_name, l2_name))


def _default_pairs(inventory):
    l1 = inventory.columns_of(LanguageClass.L1)
    l2 = inventory.columns_of(LanguageClass.L2)
    return tuple((inventory.names[a], inventory.names[b]) for a, b in zip(l1, l2))


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    n_utterances: int = 10
    utterance_dur: float = 20.0
    mean_segment_dur: tuple = (3.0, 3.0)
    switch_prob: float = 0.5
    sil_prob: float = 0.0
    mean_sil_dur: float = 0.3
    confusability: float = 0.0
    confusable_fraction: float = 1.0
    concentration: float = 5.0
    frame_period: float = 0.01
    l1_name: str = "fry"
    l2_name: str = "nld"
    phones_per_language: int = 5
    sil_phones: int = 1
    inventory_path: str = None
    pairs: tuple = None
    inventory: PhoneInventory = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        def fail(key, msg):
            raise ValidationError(f"{key}: {msg}")

        if not (isinstance(self.seed, (int, np.integer)) and 0 <= self.seed < 2**64):
            fail("seed", f"must be an integer in [0, 2**64), got {self.seed!r}")
        if self.n_utterances < 1:
            fail("n_utterances", f"must be >= 1, got {self.n_utterances}")
        for key in _FLOAT_KEYS:
            object.__setattr__(self, key, float(getattr(self, key)))
        means = self.mean_segment_dur
        if isinstance(means, (int, float)):
            means = (float(means), float(means))
        means = tuple(float(v) for v in means)
        if len(means) != 2:
            fail("mean_segment_dur", "give one value or one per language")
        object.__setattr__(self, "mean_segment_dur", means)
        for key in ("utterance_dur", "mean_sil_dur", "concentration", "frame_period"):
            v = getattr(self, key)
            if not (math.isfinite(v) and v > 0):
                fail(key, f"must be positive, got {v}")
        for v in means:
            if not (math.isfinite(v) and v > 0):
                fail("mean_segment_dur", f"must be positive, got {v}")
        for key in ("switch_prob", "sil_prob", "confusability", "confusable_fraction"):
            v = getattr(self, key)
            if not 0.0 <= v <= 1.0:
                fail(key, f"must be in [0, 1], got {v}")

        inventory = self.inventory
        if inventory is None:
            if self.inventory_path is not None:
                try:
                    inventory = parse_inventory(Path(self.inventory_path))
                except OSError as exc:
                    fail("inventory_path", str(exc))
            else:
                inventory = default_inventory(
                    self.l1_name, self.l2_name, self.phones_per_language, self.sil_phones
                )
            object.__setattr__(self, "inventory", inventory)
        object.__setattr__(self, "l1_name", inventory.language_names[0])
        object.__setattr__(self, "l2_name", inventory.language_names[1])
        pairs = self.pairs if self.pairs is not None else _default_pairs(inventory)
        pairs = tuple((str(a), str(b)) for a, b in pairs)
        names = inventory.names
        used = set()
        for a, b in pairs:
            if a not in names or b not in names:
                fail("pairs", f"unknown phone in pair {a}:{b}")
            ca, cb = inventory.phones[names.index(a)][1], inventory.phones[names.index(b)][1]
            if LanguageClass.SIL in (ca, cb) or ca == cb:
                fail("pairs", f"{a}:{b} must pair phones of different languages")
            if a in used or b in used:
                fail("pairs", f"phone paired twice in {a}:{b}")
            used.update((a, b))
        object.__setattr__(self, "pairs", pairs)

    def partner_columns(self):
        """Column of the paired phone for every column, -1 where unpaired."""
        names = self.inventory.names
        partner = np.full(len(names), -1, dtype=np.int64)
        for a, b in self.pairs:
            i, j = names.index(a), names.index(b)
            partner[i], partner[j] = j, i
        return partner

    def utterance_ids(self):
        return [f"utt{i:04d}" for i in range(self.n_utterances)]

    def to_text(self, inventory_ref=None):
        """Flat ``key = value`` text that :func:`parse_config` reads back."""
        out = []
        for f in fields(self):
            if f.name == "inventory":
                continue
            value = getattr(self, f.name)
            if f.name == "inventory_path":
                value = inventory_ref if inventory_ref is not None else value
                if value is None:
                    continue
            elif f.name == "mean_segment_dur":
                value = ",".join(repr(v) for v in value)
            elif f.name == "pairs":
                value = ",".join(f"{a}:{b}" for a, b in value)
            elif isinstance(value, float):
                value = repr(value)
            out.append(f"{f.name} = {value}")
        return "\n".join(out) + "\n"


_INT_KEYS = {"seed", "n_utterances", "phones_per_language", "sil_phones"}
_FLOAT_KEYS = {
    "utterance_dur", "switch_prob", "sil_prob", "mean_sil_dur", "confusability",
    "confusable_fraction", "concentration", "frame_period",
}
_STR_KEYS = {"l1_name", "l2_name", "inventory_path"}
_ALIASES = {"inventory": "inventory_path"}


def parse_key_values(text):
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValidationError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def config_from_mapping(values, base_dir=None):
    """Build a :class:`SynthConfig` from string values; errors name the key."""
    kwargs = {}
    for key, raw in values.items():
        key = _ALIASES.get(key, key)
        try:
            if key in _INT_KEYS:
                kwargs[key] = int(raw)
            elif key in _FLOAT_KEYS:
                kwargs[key] = float(raw)
            elif key in _STR_KEYS:
                kwargs[key] = str(raw)
            elif key == "mean_segment_dur":
                kwargs[key] = tuple(float(v) for v in str(raw).split(","))
            elif key == "pairs":
                items = [p for p in str(raw).split(",") if p.strip()]
                kwargs[key] = tuple(tuple(p.strip().split(":")) for p in items)
                if any(len(p) != 2 for p in kwargs[key]):
                    raise ValueError("expected a:b pairs")
            else:
                raise ValidationError(f"{key}: unknown config key")
        except ValueError as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"{key}: cannot parse {raw!r} ({exc})") from None
    path = kwargs.get("inventory_path")
    if path is not None and base_dir is not None and not Path(path).is_absolute():
        kwargs["inventory_path"] = str(Path(base_dir) / path)
    return SynthConfig(**kwargs)


def parse_config(text, base_dir=None):
    return config_from_mapping(parse_key_values(text), base_dir)


@dataclass(frozen=True)
class GroundTruth:
    """Reference segments and frame labels, one entry per utterance."""

    segments: tuple
    frames: tuple

    def __len__(self):
        return len(self.frames)


def _n_frames(seconds, frame_period):
    return max(1, int(round(seconds / frame_period)))


def _sample_labels(config, index):
    rng = np.random.default_rng([config.seed, index, 0])
    dt = config.frame_period
    total = _n_frames(config.utterance_dur, dt)
    labels = np.empty(total, dtype=np.int8)
    lang = int(rng.integers(2))
    pos = 0
    first = True
    while pos < total:
        if not first:
            if config.sil_prob > 0 and rng.random() < config.sil_prob:
                n = _n_frames(rng.exponential(config.mean_sil_dur), dt)
                labels[pos:pos + n] = LanguageClass.SIL
                pos += n
                if pos >= total:
                    break
            if rng.random() < config.switch_prob:
                lang = 1 - lang
        n = _n_frames(rng.exponential(config.mean_segment_dur[lang]), dt)
        labels[pos:pos + n] = lang
        pos += n
        first = False
    return labels


def sample_ground_truth(config):
    frames, segments = [], []
    for i, utt in enumerate(config.utterance_ids()):
        labels = FrameLabelSequence(_sample_labels(config, i), config.frame_period, utt)
        frames.append(labels)
        segments.append(frames_to_segments(labels))
    return GroundTruth(tuple(segments), tuple(frames))


def _emit_one(labels, config, index, partner):
    inventory = config.inventory
    classes = inventory.classes
    rng = np.random.default_rng([config.seed, index, 1])
    t = labels.size
    u_phone = rng.random(t)
    mass = rng.beta(config.concentration, 1.0, t)
    u_conf = rng.random(t)
    rows = np.zeros((t, len(inventory)))
    frame_idx = np.arange(t)
    for cls in LanguageClass:
        cols = np.flatnonzero(classes == cls)
        sel = np.flatnonzero(labels == cls)
        if sel.size == 0:
            continue
        n = cols.size
        pick = cols[np.minimum((u_phone[sel] * n).astype(np.int64), n - 1)]
        m = mass[sel]
        if cls is LanguageClass.SIL:
            leak = np.zeros(sel.size)
        else:
            paired = partner[pick] >= 0
            confused = u_conf[sel] < config.confusable_fraction
            leak = np.where(paired & confused, config.confusability, 0.0)
        if n > 1:
            rows[np.ix_(sel, cols)] = ((1.0 - m) / (n - 1))[:, None]
            rows[frame_idx[sel], pick] = m * (1.0 - leak)
        else:
            rows[frame_idx[sel], pick] = (1.0 - m) + m * (1.0 - leak)
        has_leak = leak > 0
        rows[frame_idx[sel][has_leak], partner[pick][has_leak]] = (m * leak)[has_leak]
    return rows


def emit_posteriors(truth, config):
    """Phone posterior matrices for every utterance of ``truth``."""
    partner = config.partner_columns()
    out = []
    for i, ref in enumerate(truth.frames):
        rows = _emit_one(ref.labels, config, i, partner)
        out.append(PosteriorMatrix(rows, ref.frame_period, ref.utterance_id))
    return out


def generate(config):
    truth = sample_ground_truth(config)
    return truth, emit_posteriors(truth, config)


def expected_miss_rates(config, rule):
    """Closed-form expected (missed_l1, missed_l2) at equal language weights.

    A language frame of phone ``p`` is only ever wrong when it is
    confusable and ``p`` is paired. With leak ``k`` and concentrated mass
    ``m ~ Beta(a, 1)`` (so ``P(m > x) = 1 - x**a``):

    * max-language: the other language holds ``m*k`` and the true one
      ``1 - m*k``, so the frame is missed when ``m > 1 / (2k)``;
    * max-phone: the partner phone ``m*k`` must beat both the picked phone
      ``m*(1-k)`` (needs ``k > 1/2``) and each of the ``n-1`` other
      same-class phones ``(1-m)/(n-1)``, i.e. ``m > 1 / (1 + k*(n-1))``.
      A class with a single phone behaves like max-language.
    """
    rule = DecisionRule.parse(rule)
    k = config.confusability
    a = config.concentration
    partner = config.partner_columns()
    classes = config.inventory.classes

    def tail(x):
        return 0.0 if x >= 1.0 else 1.0 - x ** a

    rates = []
    for cls in LANGUAGES:
        cols = np.flatnonzero(classes == cls)
        n = cols.size
        paired_share = np.count_nonzero(partner[cols] >= 0) / n
        if k <= 0.5:
            p_wrong = 0.0
        elif rule is DecisionRule.MAX_LANGUAGE or n == 1:
            p_wrong = tail(1.0 / (2.0 * k))
        elif rule is DecisionRule.MAX_PHONE:
            p_wrong = tail(1.0 / (1.0 + k * (n - 1)))
        else:
            raise ValidationError("closed form exists only for the posterior rules")
        rates.append(config.confusable_fraction * paired_share * p_wrong)
    return tuple(rates)


def oracle_miss_rates(hyp, truth):
    """Frame-by-frame recount of pooled miss rates; a test oracle.

    ``truth`` is a :class:`GroundTruth` or a list of reference label
    sequences. Deliberately a plain double loop.
    """
    refs = truth.frames if isinstance(truth, GroundTruth) else truth
    if isinstance(hyp, FrameLabelSequence):
        hyp = [hyp]
    if not isinstance(refs, (list, tuple)):
        refs = [refs]
    if len(hyp) != len(refs):
        raise ValidationError("hypothesis and truth hold different numbers of utterances")
    miss1 = tot1 = miss2 = tot2 = 0
    for h, r in zip(hyp, refs):
        if len(h.labels) != len(r.labels):
            raise ValidationError(f"{r.utterance_id}: length mismatch")
        for f in range(len(r.labels)):
            ref_label = int(r.labels[f])
            hyp_label = int(h.labels[f])
            if ref_label == LanguageClass.L1:
                tot1 += 1
                if hyp_label != LanguageClass.L1:
                    miss1 += 1
            elif ref_label == LanguageClass.L2:
                tot2 += 1
                if hyp_label != LanguageClass.L2:
                    miss2 += 1
    rate1 = miss1 / tot1 if tot1 else None
    rate2 = miss2 / tot2 if tot2 else None
    return MissRates(rate1, rate2, tot1, tot2, miss1, miss2)


def write_corpus(config, out_dir):
    """Write ``fpm/``, ``ref/``, ``inventory.txt`` and ``manifest.txt`` under ``out_dir``."""
    out_dir = Path(out_dir)
    truth, matrices = generate(config)
    inventory = config.inventory
    names = inventory.language_names
    atomic_write_text(out_dir / "inventory.txt", inventory.to_text())
    for seg, matrix in zip(truth.segments, matrices):
        atomic_write_text(out_dir / "fpm" / f"{matrix.utterance_id}.fpm", write_posteriors(matrix, inventory))
        atomic_write_text(out_dir / "ref" / f"{seg.utterance_id}.ctm", write_ctm(seg, names))
    atomic_write_text(out_dir / "manifest.txt", config.to_text(inventory_ref="inventory.txt"))
    return truth, matrices
