"""k-nearest-neighbours voting with inverse-distance weights."""

from __future__ import annotations

import numpy as np

from .base import AffinityClassifierMixin


class KNNClassifier(AffinityClassifierMixin):
    """Brute-force kNN: Euclidean distance, votes weighted by 1/distance.

    A query that coincides with stored rows short-circuits to an unweighted
    vote among the zero-distance neighbours.  Neighbour order is pinned by
    (distance, row index), so predictions are reproducible under ties.
    """

    def __init__(self, n_neighbors: int = 3):
        self.n_neighbors = n_neighbors

    def fit(self, X, y, allow_single_class: bool = False):
        if self.n_neighbors < 1:
            raise ValueError("n_neighbors must be >= 1")
        X, y_idx = self._start_fit(X, y, allow_single_class)
        self._train = X.toarray()
        self._train_y = y_idx
        return self

    def predict(self, X) -> np.ndarray:
        X = self._check_predict(X)
        dense = X.toarray()
        n_train = len(self._train)
        k = min(self.n_neighbors, n_train)
        n_classes = len(self.classes_)
        out = np.empty(len(dense), dtype=self.classes_.dtype)
        row_order = np.arange(n_train)
        for i, x in enumerate(dense):
            d2 = ((self._train - x) ** 2).sum(axis=1)
            order = np.lexsort((row_order, d2))[:k]
            dk = d2[order]
            scores = np.zeros(n_classes)
            if dk[0] == 0.0:
                zero = order[dk == 0.0]
                np.add.at(scores, self._train_y[zero], 1.0)
            else:
                weights = 1.0 / np.sqrt(dk)
                np.add.at(scores, self._train_y[order], weights)
            out[i] = self.classes_[int(np.argmax(scores))]
        return out

    def _arrays(self):
        return {"classes": self.classes_, "train": self._train,
                "train_y": self._train_y}

    def _restore(self, arrays):
        self.classes_ = arrays["classes"]
        self._train = arrays["train"]
        self._train_y = arrays["train_y"]
        self.n_features_in_ = self._train.shape[1]
        return self
