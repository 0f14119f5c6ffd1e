"""Linear one-vs-rest classifiers: closed-form ridge and hinge-loss SGD.

Both skip the intercept: the one-hot rows are sparse and uncentred, and
ridge behaves well on them exactly as shipped.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.linalg import cho_factor, cho_solve
from scipy.sparse.linalg import lsqr

from ..errors import NonFiniteLoss
from .base import AffinityClassifierMixin


class RidgeOvRClassifier(AffinityClassifierMixin):
    """One-vs-rest ridge with +/-1 targets, solved from the normal equations.

    Per class the weights satisfy ``(X'X + alpha*I) w = X'y`` exactly: a
    shared Cholesky factorization at moderate width, an iterative damped
    least-squares solve beyond ``dense_threshold`` features (a dense Gram
    matrix at 4096 columns already costs 128 MiB).
    """

    def __init__(self, alpha: float = 0.3, dense_threshold: int = 4096):
        self.alpha = alpha
        self.dense_threshold = dense_threshold

    def fit(self, X, y, allow_single_class: bool = False):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        X, y_idx = self._start_fit(X, y, allow_single_class)
        n, d = X.shape
        k = len(self.classes_)
        targets = np.full((n, k), -1.0)
        targets[np.arange(n), y_idx] = 1.0
        xty = np.asarray(X.T @ targets)  # (d, k)
        if d <= self.dense_threshold:
            gram = (X.T @ X).toarray()
            gram[np.diag_indices_from(gram)] += self.alpha
            factor = cho_factor(gram, lower=True)
            self.coef_ = cho_solve(factor, xty)
        else:
            damp = float(np.sqrt(self.alpha))
            cols = [
                lsqr(X, targets[:, j], damp=damp, atol=1e-12, btol=1e-12,
                     iter_lim=8 * d)[0]
                for j in range(k)
            ]
            self.coef_ = np.stack(cols, axis=1)
        return self

    def decision_function(self, X) -> np.ndarray:
        X = self._check_predict(X)
        return np.asarray(X @ self.coef_)

    def normal_equation_residual(self, X, y) -> float:
        """Max per-class residual of (X'X + alpha I) w = X'y, for checking."""
        X = self._check_predict(X)
        y_idx = np.searchsorted(self.classes_, np.asarray(y))
        n = X.shape[0]
        targets = np.full((n, len(self.classes_)), -1.0)
        targets[np.arange(n), y_idx] = 1.0
        xty = np.asarray(X.T @ targets)
        lhs = np.asarray(X.T @ (X @ self.coef_)) + self.alpha * self.coef_
        norms = np.linalg.norm(lhs - xty, axis=0)
        scale = 1.0 + np.linalg.norm(xty, axis=0)
        return float(np.max(norms / scale))

    def _arrays(self):
        return {"classes": self.classes_, "coef": self.coef_}

    def _restore(self, arrays):
        self.classes_ = arrays["classes"]
        self.coef_ = arrays["coef"]
        self.n_features_in_ = self.coef_.shape[0]
        return self


class HingeSGDClassifier(AffinityClassifierMixin):
    """Linear SVM trained by per-sample stochastic gradient descent.

    One binary hinge loss per class with an L2 penalty and no intercept.
    The step size decays as ``eta0 / (1 + eta0*alpha*t)`` with a per-sample
    counter ``t``; rows are reshuffled every epoch from the seed, so equal
    seeds give bit-identical weights.
    """

    def __init__(self, alpha: float = 1e-4, epochs: int = 100, eta0: float = 0.1,
                 seed: int = 0):
        self.alpha = alpha
        self.epochs = epochs
        self.eta0 = eta0
        self.seed = seed

    def fit(self, X, y, allow_single_class: bool = False):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        X, y_idx = self._start_fit(X, y, allow_single_class)
        n, d = X.shape
        k = len(self.classes_)
        targets = np.full((n, k), -1.0)
        targets[np.arange(n), y_idx] = 1.0
        rng = np.random.default_rng(self.seed)
        indptr, indices, data = X.indptr, X.indices, X.data
        v = np.zeros((k, d))  # true weights are scale * v
        scale = 1.0
        t = 0
        eta0, alpha = self.eta0, self.alpha
        for _ in range(self.epochs):
            for i in rng.permutation(n):
                t += 1
                eta = eta0 / (1.0 + eta0 * alpha * t)
                lo, hi = indptr[i], indptr[i + 1]
                idx = indices[lo:hi]
                vals = data[lo:hi]
                yi = targets[i]
                margins = scale * (v[:, idx] @ vals) * yi
                scale *= 1.0 - eta * alpha
                violated = margins < 1.0
                if violated.any() and len(idx):
                    v[np.ix_(violated, idx)] += np.outer(
                        (eta / scale) * yi[violated], vals
                    )
                if scale < 1e-9:
                    v *= scale
                    scale = 1.0
            if not np.isfinite(v).all() or not np.isfinite(scale):
                raise NonFiniteLoss("hinge SGD diverged")
        self.coef_ = (scale * v).T  # (d, k)
        self.steps_run_ = t
        return self

    def decision_function(self, X) -> np.ndarray:
        X = self._check_predict(X)
        return np.asarray(X @ self.coef_)

    def _arrays(self):
        return {"classes": self.classes_, "coef": self.coef_}

    def _restore(self, arrays):
        self.classes_ = arrays["classes"]
        self.coef_ = arrays["coef"]
        self.n_features_in_ = self.coef_.shape[0]
        return self
