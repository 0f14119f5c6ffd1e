"""From-scratch classifiers with a scikit-learn style estimator API."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..encoding import Dataset
from .base import AffinityClassifierMixin, as_feature_matrix
from .io import KIND_TO_CLASS, load_model, save_model
from .linear import HingeSGDClassifier, RidgeOvRClassifier
from .mlp import MLPClassifier, mlp_init, mlp_logits, mlp_loss_and_gradient, softmax
from .naive_bayes import GaussianNBClassifier
from .neighbors import KNNClassifier
from .tree import DecisionTreeClassifier
from .voting import VotingEnsembleClassifier, default_members

#: Estimator kinds that take a seed (the rest are deterministic by nature).
_SEEDED = {"sgd", "mlp", "ensemble"}


@dataclass(frozen=True)
class ClassifierSpec:
    """A trainable model choice: kind, seed, hyperparameter overrides."""

    kind: str
    seed: int = 0
    overrides: dict = field(default_factory=dict)


def make_classifier(kind: str, seed: int = 0, **overrides):
    """Instantiate a classifier by kind name with its tuned defaults."""
    if kind not in KIND_TO_CLASS:
        raise ValueError(f"unknown classifier kind {kind!r} "
                         f"(choose from {sorted(KIND_TO_CLASS)})")
    if kind in _SEEDED:
        overrides.setdefault("seed", seed)
    return KIND_TO_CLASS[kind](**overrides)


def train(spec: ClassifierSpec, dataset: Dataset):
    """Fit a classifier described by a spec on an encoded dataset."""
    est = make_classifier(spec.kind, seed=spec.seed, **dict(spec.overrides))
    X, y, _ = dataset.to_matrix()
    return est.fit(X, y)


__all__ = [
    "AffinityClassifierMixin",
    "ClassifierSpec",
    "DecisionTreeClassifier",
    "GaussianNBClassifier",
    "HingeSGDClassifier",
    "KNNClassifier",
    "MLPClassifier",
    "RidgeOvRClassifier",
    "VotingEnsembleClassifier",
    "as_feature_matrix",
    "default_members",
    "load_model",
    "make_classifier",
    "mlp_init",
    "mlp_logits",
    "mlp_loss_and_gradient",
    "save_model",
    "softmax",
    "train",
]
