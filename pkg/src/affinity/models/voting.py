"""Hard-voting ensemble over the three selected classifiers."""

from __future__ import annotations

import numpy as np

from .base import AffinityClassifierMixin, as_feature_matrix, check_labels
from .linear import HingeSGDClassifier, RidgeOvRClassifier
from .mlp import MLPClassifier


def default_members(seed: int = 0) -> list[tuple[str, object]]:
    """The selected trio; member seeds derive from the run seed."""
    return [
        ("neural-network", MLPClassifier(seed=seed)),
        ("ridge", RidgeOvRClassifier()),
        ("linear-svm-sgd", HingeSGDClassifier(seed=seed + 1)),
    ]


class VotingEnsembleClassifier(AffinityClassifierMixin):
    """Majority vote over member predictions, no probabilities involved.

    Ties (each member voting differently) break toward the smallest class
    label.  Members default to the MLP / ridge / hinge-SGD trio with their
    tuned hyperparameters.
    """

    def __init__(self, seed: int = 0, members=None):
        self.seed = seed
        self.members = members

    def fit(self, X, y, allow_single_class: bool = False):
        X = as_feature_matrix(X)
        y = check_labels(y)
        self.members_ = self.members if self.members is not None \
            else default_members(self.seed)
        for _, est in self.members_:
            est.fit(X, y, allow_single_class=allow_single_class)
        self.classes_ = np.unique(np.concatenate(
            [est.classes_ for _, est in self.members_]
        ))
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X) -> np.ndarray:
        X = self._check_predict(X)
        votes = np.stack([est.predict(X) for _, est in self.members_])
        out = np.empty(votes.shape[1], dtype=votes.dtype)
        for i in range(votes.shape[1]):
            labels, counts = np.unique(votes[:, i], return_counts=True)
            # np.unique sorts, so the first max is the smallest label
            out[i] = labels[int(np.argmax(counts))]
        return out
