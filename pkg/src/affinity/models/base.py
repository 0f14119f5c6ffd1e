"""Shared estimator plumbing: validation, class handling, tie-breaking.

All classifiers follow the scikit-learn estimator contract (``fit``/
``predict``/``get_params``) so they compose with the wider ecosystem, but
every algorithm is implemented here from first principles on numpy/scipy
arrays.  Prediction ties always break toward the smallest class label:
treating a borderline task as hard to allocate is the safe error direction
for a scheduler.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from sklearn.base import BaseEstimator, ClassifierMixin

from ..errors import DegenerateData, WidthMismatch


def as_feature_matrix(X) -> sparse.csr_matrix:
    """Accept a CSR matrix, any scipy sparse matrix, or a dense array."""
    if sparse.issparse(X):
        return X.tocsr().astype(np.float64, copy=False)
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D feature matrix, got shape {arr.shape}")
    return sparse.csr_matrix(arr)


def check_labels(y) -> np.ndarray:
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise ValueError("labels must be one-dimensional")
    return arr


class AffinityClassifierMixin(BaseEstimator, ClassifierMixin):
    """Common fit/predict scaffolding for the from-scratch classifiers."""

    def _start_fit(self, X, y, allow_single_class: bool = False):
        X = as_feature_matrix(X)
        y = check_labels(y)
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{X.shape[0]} rows but {y.shape[0]} labels")
        if X.shape[0] == 0 or X.shape[1] == 0:
            raise DegenerateData("empty feature matrix")
        self.classes_ = np.unique(y)
        if len(self.classes_) < 2 and not allow_single_class:
            raise DegenerateData("training data carries a single class")
        self.n_features_in_ = X.shape[1]
        y_idx = np.searchsorted(self.classes_, y)
        return X, y_idx

    def _check_predict(self, X) -> sparse.csr_matrix:
        X = as_feature_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise WidthMismatch(
                f"model expects width {self.n_features_in_}, rows have {X.shape[1]}"
            )
        return X

    def _labels_from_scores(self, scores: np.ndarray) -> np.ndarray:
        """Argmax with ties broken toward the smallest class label."""
        if scores.ndim == 1:  # single-class degenerate model
            return self.classes_[np.zeros(len(scores), dtype=int)]
        return self.classes_[np.argmax(scores, axis=1)]

    def predict(self, X) -> np.ndarray:
        scores = self.decision_function(X)
        return self._labels_from_scores(scores)
