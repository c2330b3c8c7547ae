"""Input checks shared by the estimators and the command line."""

from pathlib import Path

import numpy as np

from .exceptions import ValidationError
from .posteriors import LanguageClass, PhoneInventory, PriorWeights, parse_inventory


def check_posterior_array(X, n_phones=None):
    """Return ``X`` as a finite, non-negative float64 array of shape (T, P)."""
    try:
        X = np.asarray(X, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"posteriors must be numeric: {exc}") from None
    if X.ndim != 2:
        raise ValidationError(f"expected a 2-D array of frames x phones, got shape {X.shape}")
    if X.shape[0] < 1:
        raise ValidationError("need at least one frame")
    if not np.all(np.isfinite(X)):
        raise ValidationError("posteriors contain NaN or infinity")
    if np.any(X < 0):
        raise ValidationError("posteriors contain negative values")
    if n_phones is not None and X.shape[1] != n_phones:
        raise ValidationError(f"X has {X.shape[1]} columns, expected {n_phones}")
    return X


def check_inventory(inventory):
    """Accept a :class:`PhoneInventory` or a path to an inventory file."""
    if isinstance(inventory, PhoneInventory):
        return inventory
    if isinstance(inventory, (str, Path)):
        return parse_inventory(Path(inventory))
    raise ValidationError(f"expected a PhoneInventory or a path, got {type(inventory).__name__}")


def check_weights(w_l1, w_sil=1.0):
    if isinstance(w_l1, PriorWeights):
        return w_l1
    return PriorWeights(w_l1, w_sil)


def check_labels(y, n_frames=None):
    """Frame labels as an int8 array of :class:`LanguageClass` values."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValidationError("labels must be one-dimensional")
    if y.dtype.kind in "US":
        names = {c.name: int(c) for c in LanguageClass}
        try:
            y = np.array([names[v] for v in y])
        except KeyError as exc:
            raise ValidationError(f"unknown label {exc.args[0]!r}") from None
    y = y.astype(np.int8)
    if y.size and (y.min() < 0 or y.max() > 2):
        raise ValidationError("labels must be 0 (L1), 1 (L2) or 2 (SIL)")
    if n_frames is not None and y.size != n_frames:
        raise ValidationError(f"{y.size} labels for {n_frames} frames")
    return y
