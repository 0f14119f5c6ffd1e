"""Gaussian naive Bayes over sparse rows."""

from __future__ import annotations

import numpy as np
from scipy import sparse

from .base import AffinityClassifierMixin


class GaussianNBClassifier(AffinityClassifierMixin):
    """Per-class feature Gaussians with a relative variance floor.

    Variances are floored at ``1e-9`` times the largest feature variance of
    the training matrix, which keeps constant one-hot columns from blowing
    up the log-density.  Everything is computed from sparse moments, so the
    dense matrix never materializes.
    """

    VAR_SMOOTHING = 1e-9

    def fit(self, X, y, allow_single_class: bool = False):
        X, y_idx = self._start_fit(X, y, allow_single_class)
        n, d = X.shape
        k = len(self.classes_)
        sq = X.multiply(X)
        global_mean = np.asarray(X.mean(axis=0)).ravel()
        global_var = np.asarray(sq.mean(axis=0)).ravel() - global_mean**2
        max_var = float(global_var.max()) if d else 0.0
        eps = self.VAR_SMOOTHING * max_var if max_var > 0 else self.VAR_SMOOTHING
        self.theta_ = np.zeros((k, d))
        self.var_ = np.zeros((k, d))
        self.class_count_ = np.zeros(k)
        for c in range(k):
            rows = np.nonzero(y_idx == c)[0]
            xc = X[rows]
            mean = np.asarray(xc.mean(axis=0)).ravel()
            var = np.asarray(xc.multiply(xc).mean(axis=0)).ravel() - mean**2
            self.theta_[c] = mean
            self.var_[c] = np.maximum(var, 0.0) + eps
            self.class_count_[c] = len(rows)
        self.class_prior_ = self.class_count_ / n
        return self

    def decision_function(self, X) -> np.ndarray:
        X = self._check_predict(X)
        sq = X.multiply(X)
        k = len(self.classes_)
        scores = np.empty((X.shape[0], k))
        for c in range(k):
            inv = 1.0 / self.var_[c]
            # sum_d (x-mu)^2/var expands into three sparse-friendly terms
            quad = (
                np.asarray(sq @ inv).ravel()
                - 2.0 * np.asarray(X @ (self.theta_[c] * inv)).ravel()
                + float((self.theta_[c] ** 2 * inv).sum())
            )
            log_norm = -0.5 * float(np.log(2.0 * np.pi * self.var_[c]).sum())
            scores[:, c] = np.log(self.class_prior_[c]) + log_norm - 0.5 * quad
        return scores

    def _arrays(self):
        return {"classes": self.classes_, "theta": self.theta_, "var": self.var_,
                "prior": self.class_prior_, "count": self.class_count_}

    def _restore(self, arrays):
        self.classes_ = arrays["classes"]
        self.theta_ = arrays["theta"]
        self.var_ = arrays["var"]
        self.class_prior_ = arrays["prior"]
        self.class_count_ = arrays["count"]
        self.n_features_in_ = self.theta_.shape[1]
        return self
