"""scikit-learn compatible wrappers.

Rows of ``X`` are the frames of one utterance in time order and columns
are the phones of the inventory, so these estimators drop into a
``Pipeline`` next to other frame-level transformers.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .decision import DecisionRule, FrameLabelSequence, decide_max_language, decide_max_phone
from .metrics import missed_time
from .posteriors import (
    DEFAULT_FRAME_PERIOD,
    PosteriorMatrix,
    apply_language_prior,
    l1_normalize,
    language_posteriors,
)
from .segmentation import frames_to_segments
from .validation import check_inventory, check_labels, check_posterior_array, check_weights


class _InventoryMixin:
    def _fit_inventory(self, X):
        self.inventory_ = check_inventory(self.inventory)
        X = check_posterior_array(X, len(self.inventory_))
        self.n_features_in_ = X.shape[1]
        return X

    def _matrix(self, X):
        check_is_fitted(self, "inventory_")
        X = check_posterior_array(X, self.n_features_in_)
        return l1_normalize(PosteriorMatrix(X))


class LanguagePosteriorTransformer(_InventoryMixin, TransformerMixin, BaseEstimator):
    """Collapse phone posteriors into (L1, L2, SIL) posteriors.

    Parameters
    ----------
    inventory : PhoneInventory or path
        Phone set matching the columns of ``X``.
    """

    def __init__(self, inventory=None):
        self.inventory = inventory

    def fit(self, X, y=None):
        self._fit_inventory(X)
        return self

    def transform(self, X):
        return language_posteriors(self._matrix(X), self.inventory_).frames.copy()

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "inventory_")
        l1, l2 = self.inventory_.language_names
        return np.array([l1, l2, "sil"], dtype=object)


class LanguagePriorReweighter(_InventoryMixin, TransformerMixin, BaseEstimator):
    """Multiply phone posteriors by their class prior and renormalize each frame."""

    def __init__(self, inventory=None, w_l1=0.5, w_sil=1.0):
        self.inventory = inventory
        self.w_l1 = w_l1
        self.w_sil = w_sil

    def fit(self, X, y=None):
        self._fit_inventory(X)
        self.weights_ = check_weights(self.w_l1, self.w_sil)
        return self

    def transform(self, X):
        out = apply_language_prior(self._matrix(X), self.inventory_, self.weights_)
        return out.frames.copy()


class CodeSwitchDetector(_InventoryMixin, BaseEstimator):
    """Frame-level language labels from phone posteriors.

    Parameters
    ----------
    inventory : PhoneInventory or path
    rule : {"max-language", "max-phone"}
        Decide on the summed class posteriors or on the single best phone.
    w_l1, w_sil : float
        Class priors applied before deciding; ``w_l2 = 1 - w_l1``.
    frame_period : float
        Seconds per frame, used by :meth:`predict_segments`.

    Labels are ``0`` (L1), ``1`` (L2) and ``2`` (SIL).
    """

    def __init__(self, inventory=None, rule="max-language", w_l1=0.5, w_sil=1.0,
                 frame_period=DEFAULT_FRAME_PERIOD):
        self.inventory = inventory
        self.rule = rule
        self.w_l1 = w_l1
        self.w_sil = w_sil
        self.frame_period = frame_period

    def fit(self, X, y=None):
        self._fit_inventory(X)
        self.rule_ = DecisionRule.parse(self.rule)
        if self.rule_ is DecisionRule.BASELINE_ALIGNMENT:
            raise ValueError("CodeSwitchDetector needs a posterior rule (max-language or max-phone)")
        self.weights_ = check_weights(self.w_l1, self.w_sil)
        self.classes_ = np.array([0, 1, 2], dtype=np.int8)
        return self

    def _reweighted(self, X):
        check_is_fitted(self, "weights_")
        return apply_language_prior(self._matrix(X), self.inventory_, self.weights_)

    def decision_function(self, X):
        """Prior-weighted class posteriors, shape (T, 3)."""
        return language_posteriors(self._reweighted(X), self.inventory_).frames.copy()

    def predict(self, X):
        m = self._reweighted(X)
        if self.rule_ is DecisionRule.MAX_PHONE:
            labels = decide_max_phone(m, self.inventory_)
        else:
            labels = decide_max_language(language_posteriors(m, self.inventory_))
        return labels.labels.copy()

    def predict_segments(self, X, utterance_id="utt"):
        labels = FrameLabelSequence(self.predict(X), self.frame_period, utterance_id)
        return frames_to_segments(labels)

    def score(self, X, y):
        """One minus the mean of the defined miss rates against labels ``y``."""
        hyp = FrameLabelSequence(self.predict(X), self.frame_period)
        ref = FrameLabelSequence(check_labels(y, len(hyp)), self.frame_period)
        rates = missed_time(hyp, ref)
        defined = [r for r in (rates.missed_l1, rates.missed_l2) if r is not None]
        return 1.0 - (sum(defined) / len(defined) if defined else 0.0)


__all__ = [
    "CodeSwitchDetector",
    "LanguagePosteriorTransformer",
    "LanguagePriorReweighter",
]
