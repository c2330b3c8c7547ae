"""Phone inventories, phone posterior matrices and language posteriors.

A posterior matrix holds one row per frame and one column per phone of a
:class:`PhoneInventory`. Every phone belongs to one of two languages or to
the silence class; summing the columns of each class gives the per-frame
language posteriors used by the max-language detection rule.
"""

import enum
import math
import re
from dataclasses import dataclass, field

import numpy as np

from ._io import read_text, source_name
from .exceptions import FormatError, ValidationError

DEFAULT_FRAME_PERIOD = 0.010
SIL_TOKEN = "sil"


class LanguageClass(enum.IntEnum):
    L1 = 0
    L2 = 1
    SIL = 2


LANGUAGES = (LanguageClass.L1, LanguageClass.L2)


@dataclass(frozen=True)
class PhoneInventory:
    """Ordered phone set with a language class per phone.

    Parameters
    ----------
    phones : sequence of (str, LanguageClass)
        Phone names and their classes, in file order.
    language_names : (str, str)
        Names of the first and second language, e.g. ``("fry", "nld")``.
    """

    phones: tuple
    language_names: tuple

    def __post_init__(self):
        phones = tuple((str(n), LanguageClass(c)) for n, c in self.phones)
        names = tuple(self.language_names)
        object.__setattr__(self, "phones", phones)
        object.__setattr__(self, "language_names", names)
        if len(names) != 2 or not all(names) or names[0] == names[1]:
            raise ValidationError(f"need two distinct language names, got {names!r}")
        if SIL_TOKEN in names:
            raise ValidationError(f"{SIL_TOKEN!r} is reserved for the silence class")
        seen = set()
        for name, _ in phones:
            if not name or any(ch.isspace() for ch in name):
                raise ValidationError(f"invalid phone name {name!r}")
            if name in seen:
                raise ValidationError(f"duplicate phone {name!r}")
            seen.add(name)
        present = {c for _, c in phones}
        for cls in LanguageClass:
            if cls not in present:
                raise ValidationError(f"no phone of class {self.class_name(cls)!r}")

    def __len__(self):
        return len(self.phones)

    @property
    def names(self):
        return tuple(n for n, _ in self.phones)

    @property
    def classes(self):
        """Class of every phone as an int8 array in inventory order."""
        return np.array([int(c) for _, c in self.phones], dtype=np.int8)

    def class_name(self, cls):
        cls = LanguageClass(cls)
        return SIL_TOKEN if cls is LanguageClass.SIL else self.language_names[cls]

    def class_from_name(self, name):
        if name == SIL_TOKEN:
            return LanguageClass.SIL
        if name == self.language_names[0]:
            return LanguageClass.L1
        if name == self.language_names[1]:
            return LanguageClass.L2
        raise KeyError(name)

    def columns_of(self, cls):
        cls = LanguageClass(cls)
        return [j for j, (_, c) in enumerate(self.phones) if c is cls]

    def index(self, name):
        return self.names.index(name)

    def to_text(self):
        lines = [f"#inventory v1 l1={self.language_names[0]} l2={self.language_names[1]}"]
        lines += [f"{n} {self.class_name(c)}" for n, c in self.phones]
        return "\n".join(lines) + "\n"


def _frozen(array):
    array = np.array(array, dtype=np.float64)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class PosteriorMatrix:
    """T x P phone posteriors of one utterance."""

    frames: np.ndarray
    frame_period: float = DEFAULT_FRAME_PERIOD
    utterance_id: str = "utt"

    def __post_init__(self):
        frames = _frozen(self.frames)
        if frames.ndim != 2:
            raise ValidationError(f"posterior matrix must be 2-D, got shape {frames.shape}")
        if frames.shape[0] == 0:
            raise ValidationError("posterior matrix has no frames")
        if not np.all(np.isfinite(frames)):
            raise ValidationError("posterior matrix contains non-finite values")
        if np.any(frames < 0):
            raise ValidationError("posterior matrix contains negative values")
        _check_frame_period(self.frame_period)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "frame_period", float(self.frame_period))

    @property
    def n_frames(self):
        return self.frames.shape[0]

    @property
    def n_phones(self):
        return self.frames.shape[1]

    def with_frames(self, frames):
        return PosteriorMatrix(frames, self.frame_period, self.utterance_id)


@dataclass(frozen=True)
class LanguagePosteriorMatrix:
    """T x 3 class posteriors, columns ordered (L1, L2, SIL)."""

    frames: np.ndarray
    frame_period: float = DEFAULT_FRAME_PERIOD
    utterance_id: str = "utt"

    def __post_init__(self):
        frames = _frozen(self.frames)
        if frames.ndim != 2 or frames.shape[1] != 3 or frames.shape[0] == 0:
            raise ValidationError(f"language posteriors must be T x 3 with T >= 1, got {frames.shape}")
        if not np.all(np.isfinite(frames)) or np.any(frames < 0):
            raise ValidationError("language posteriors must be finite and non-negative")
        _check_frame_period(self.frame_period)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "frame_period", float(self.frame_period))

    @property
    def n_frames(self):
        return self.frames.shape[0]


@dataclass(frozen=True)
class PriorWeights:
    """Class multipliers for prior reweighting; ``w_l2`` is always ``1 - w_l1``."""

    w_l1: float = 0.5
    w_sil: float = 1.0
    w_l2: float = field(init=False)

    def __post_init__(self):
        w_l1 = float(self.w_l1)
        w_sil = float(self.w_sil)
        if not 0.0 < w_l1 < 1.0:
            raise ValidationError(f"w_l1 must lie in (0, 1), got {w_l1}")
        if not (math.isfinite(w_sil) and w_sil > 0.0):
            raise ValidationError(f"w_sil must be positive, got {w_sil}")
        object.__setattr__(self, "w_l1", w_l1)
        object.__setattr__(self, "w_sil", w_sil)
        object.__setattr__(self, "w_l2", 1.0 - w_l1)

    def multipliers(self):
        """Multipliers indexed by :class:`LanguageClass`."""
        return np.array([self.w_l1, self.w_l2, self.w_sil])


def _check_frame_period(value):
    if not (isinstance(value, (int, float, np.floating)) and math.isfinite(value) and value > 0):
        raise ValidationError(f"frame_period must be a positive number, got {value!r}")


def _check_columns(matrix, inventory):
    if matrix.n_phones != len(inventory):
        raise ValidationError(
            f"matrix has {matrix.n_phones} columns but inventory has {len(inventory)} phones"
        )


_INVENTORY_HEADER = re.compile(r"^#inventory\s+v1\s+l1=(\S+)\s+l2=(\S+)\s*$")


def parse_inventory(stream):
    """Parse an inventory file.

    The first line is ``#inventory v1 l1=<name> l2=<name>``; each further
    non-comment line is ``<phone> <class>`` with class one of the two
    language names or ``sil``.
    """
    src = source_name(stream, "<inventory>")
    lines = read_text(stream).split("\n")
    m = _INVENTORY_HEADER.match(lines[0].rstrip("\r")) if lines else None
    if m is None:
        raise FormatError("expected '#inventory v1 l1=<name> l2=<name>' header", src, 1)
    l1, l2 = m.groups()
    if l1 == l2 or SIL_TOKEN in (l1, l2):
        raise FormatError(f"invalid language names {l1!r}, {l2!r}", src, 1)
    tokens = {l1: LanguageClass.L1, l2: LanguageClass.L2, SIL_TOKEN: LanguageClass.SIL}
    phones = []
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(f"expected '<phone> <class>', got {line!r}", src, lineno)
        name, cls = parts
        if cls not in tokens:
            raise FormatError(f"unknown class {cls!r} for phone {name!r}", src, lineno)
        if name in seen:
            raise FormatError(f"duplicate phone {name!r}", src, lineno)
        seen.add(name)
        phones.append((name, tokens[cls]))
    present = {c for _, c in phones}
    for cls, token in ((LanguageClass.L1, l1), (LanguageClass.L2, l2), (LanguageClass.SIL, SIL_TOKEN)):
        if cls not in present:
            raise FormatError(f"missing class: no phone of class {token!r}", src)
    return PhoneInventory(tuple(phones), (l1, l2))


_FPM_HEADER = re.compile(r"^#fpm\s+v1\s+(.*)$")


def load_posteriors(stream, inventory):
    """Parse an FPM file into an (unnormalized) :class:`PosteriorMatrix`."""
    src = source_name(stream, "<fpm>")
    lines = read_text(stream).split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    m = _FPM_HEADER.match(lines[0].rstrip("\r")) if lines else None
    if m is None:
        raise FormatError("expected '#fpm v1 ...' header", src, 1)
    fields = {}
    for item in m.group(1).split():
        key, sep, value = item.partition("=")
        if not sep:
            raise FormatError(f"malformed header field {item!r}", src, 1)
        fields[key] = value
    for key in ("utt", "frames", "phones"):
        if key not in fields:
            raise FormatError(f"header lacks {key}=", src, 1)
    try:
        n_frames = int(fields["frames"])
        n_phones = int(fields["phones"])
        frame_period = float(fields.get("frame_period", DEFAULT_FRAME_PERIOD))
    except ValueError as exc:
        raise FormatError(f"bad header value: {exc}", src, 1) from None
    if n_frames <= 0:
        raise FormatError("frames must be positive", src, 1)
    if not (math.isfinite(frame_period) and frame_period > 0):
        raise FormatError(f"frame_period must be positive, got {fields.get('frame_period')}", src, 1)
    if n_phones != len(inventory):
        raise FormatError(
            f"header declares {n_phones} phones, inventory has {len(inventory)}", src, 1
        )
    if len(lines) < 2 or not lines[1].startswith("#phones"):
        raise FormatError("expected '#phones ...' line", src, 2)
    declared = lines[1].split()[1:]
    if tuple(declared) != inventory.names:
        raise FormatError("phone list does not match inventory names and order", src, 2)

    body = lines[2:]
    if len(body) != n_frames:
        raise FormatError(f"header declares {n_frames} frames, found {len(body)} rows", src)
    frames = np.empty((n_frames, n_phones))
    for i, line in enumerate(body):
        lineno = i + 3
        parts = line.split()
        if len(parts) != n_phones:
            raise FormatError(f"expected {n_phones} values, got {len(parts)}", src, lineno)
        try:
            row = [float(v) for v in parts]
        except ValueError as exc:
            raise FormatError(str(exc), src, lineno) from None
        for v in row:
            if not math.isfinite(v):
                raise FormatError(f"non-finite value {v}", src, lineno)
            if v < 0:
                raise FormatError(f"negative value {v}", src, lineno)
        frames[i] = row
    return PosteriorMatrix(frames, frame_period, fields["utt"])


def write_posteriors(matrix, inventory):
    """Serialize ``matrix`` as FPM text (9 significant digits)."""
    _check_columns(matrix, inventory)
    head = (
        f"#fpm v1 utt={matrix.utterance_id} frames={matrix.n_frames} "
        f"phones={matrix.n_phones} frame_period={matrix.frame_period:.9g}\n"
        f"#phones {' '.join(inventory.names)}\n"
    )
    rows = "".join(" ".join(format(v, ".9g") for v in row) + "\n" for row in matrix.frames)
    return head + rows


def l1_normalize(matrix):
    sums = matrix.frames.sum(axis=1)
    bad = np.flatnonzero(sums <= 0)
    if bad.size:
        raise ValidationError(
            f"{matrix.utterance_id}: frame {bad[0]} has zero posterior mass"
        )
    return matrix.with_frames(matrix.frames / sums[:, None])


def apply_language_prior(matrix, inventory, weights):
    """Scale each phone column by its class multiplier and renormalize rows."""
    _check_columns(matrix, inventory)
    scaled = matrix.frames * weights.multipliers()[inventory.classes]
    return l1_normalize(matrix.with_frames(scaled))


def language_posteriors(matrix, inventory):
    """Sum phone posteriors per class into a T x 3 matrix.

    Within each class the values of a frame are added in ascending order,
    so reordering phones inside a class does not change a single bit of
    the result.
    """
    _check_columns(matrix, inventory)
    classes = inventory.classes
    out = np.zeros((matrix.n_frames, 3))
    for cls in LanguageClass:
        block = np.sort(matrix.frames[:, classes == cls], axis=1)
        acc = out[:, cls]
        for k in range(block.shape[1]):
            acc += block[:, k]
    return LanguagePosteriorMatrix(out, matrix.frame_period, matrix.utterance_id)
