"""Two-hidden-layer perceptron with softmax output and an Adam optimizer.

The network is ``in -> 30 -> 30 -> classes`` by default, rectified-linear
inside, cross-entropy on top.  Weights start from symmetric uniform fan-in/
fan-out initialization; biases start at zero.  The loss/gradient pair is
exposed as a standalone function so it can be checked against central
finite differences.
"""

from __future__ import annotations

import numpy as np

from ..errors import NonFiniteLoss
from .base import AffinityClassifierMixin

Params = list[tuple[np.ndarray, np.ndarray]]


def mlp_init(layer_sizes: list[int], rng: np.random.Generator) -> Params:
    """Uniform(+/- sqrt(6/(fan_in+fan_out))) weights, zero biases."""
    params: Params = []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        params.append((w, np.zeros(fan_out)))
    return params


def mlp_logits(params: Params, X: np.ndarray) -> np.ndarray:
    a = X
    last = len(params) - 1
    for i, (w, b) in enumerate(params):
        z = a @ w + b
        a = z if i == last else np.maximum(z, 0.0)
    return a


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def mlp_loss_and_gradient(
    params: Params, X: np.ndarray, y_idx: np.ndarray
) -> tuple[float, Params]:
    """Mean cross-entropy over the batch and its analytic gradient."""
    if len(X) == 0:
        raise ValueError("empty batch")
    activations = [np.asarray(X, dtype=np.float64)]
    last = len(params) - 1
    for i, (w, b) in enumerate(params):
        z = activations[-1] @ w + b
        activations.append(z if i == last else np.maximum(z, 0.0))
    logits = activations[-1]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_z
    n = len(X)
    loss = float(-log_probs[np.arange(n), y_idx].mean())
    if not np.isfinite(loss):
        raise NonFiniteLoss(f"cross-entropy loss is {loss}")
    delta = np.exp(log_probs)
    delta[np.arange(n), y_idx] -= 1.0
    delta /= n
    grads: Params = [None] * len(params)  # type: ignore[list-item]
    for i in range(len(params) - 1, -1, -1):
        w, _ = params[i]
        a_prev = activations[i]
        grads[i] = (a_prev.T @ delta, delta.sum(axis=0))
        if i > 0:
            delta = delta @ w.T
            delta[activations[i] <= 0.0] = 0.0
    return loss, grads


class MLPClassifier(AffinityClassifierMixin):
    """Softmax MLP trained with Adam and loss-plateau early stopping."""

    def __init__(self, hidden=(30, 30), epochs: int = 200, batch_size: int = 200,
                 learning_rate: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, epsilon: float = 1e-8, tol: float = 1e-4,
                 patience: int = 10, seed: int = 0):
        self.hidden = hidden
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.tol = tol
        self.patience = patience
        self.seed = seed

    def fit(self, X, y, allow_single_class: bool = False):
        if self.epochs < 1 or any(h < 1 for h in self.hidden):
            raise ValueError("epochs and hidden layer sizes must be >= 1")
        X, y_idx = self._start_fit(X, y, allow_single_class)
        n, d = X.shape
        k = len(self.classes_)
        rng = np.random.default_rng(self.seed)
        params = mlp_init([d, *self.hidden, k], rng)
        m = [(np.zeros_like(w), np.zeros_like(b)) for w, b in params]
        v = [(np.zeros_like(w), np.zeros_like(b)) for w, b in params]
        batch = min(self.batch_size, n)
        lr, b1, b2, eps = self.learning_rate, self.beta1, self.beta2, self.epsilon
        step = 0
        best = np.inf
        plateau = 0
        epoch_loss = np.inf
        epochs_run = 0
        for epoch in range(self.epochs):
            perm = rng.permutation(n)
            total = 0.0
            for start in range(0, n, batch):
                rows = perm[start:start + batch]
                xb = X[rows].toarray()
                loss, grads = mlp_loss_and_gradient(params, xb, y_idx[rows])
                total += loss * len(rows)
                step += 1
                c1 = 1.0 - b1 ** step
                c2 = 1.0 - b2 ** step
                for i, ((w, b), (gw, gb)) in enumerate(zip(params, grads)):
                    mw, mb = m[i]
                    vw, vb = v[i]
                    mw = b1 * mw + (1 - b1) * gw
                    mb = b1 * mb + (1 - b1) * gb
                    vw = b2 * vw + (1 - b2) * gw * gw
                    vb = b2 * vb + (1 - b2) * gb * gb
                    m[i] = (mw, mb)
                    v[i] = (vw, vb)
                    w = w - lr * (mw / c1) / (np.sqrt(vw / c2) + eps)
                    b = b - lr * (mb / c1) / (np.sqrt(vb / c2) + eps)
                    params[i] = (w, b)
            epoch_loss = total / n
            epochs_run = epoch + 1
            if not np.isfinite(epoch_loss):
                raise NonFiniteLoss(f"epoch loss is {epoch_loss}")
            if epoch_loss > best - self.tol:
                plateau += 1
                if plateau >= self.patience:
                    break
            else:
                plateau = 0
            best = min(best, epoch_loss)
        self.params_ = params
        self.epochs_run_ = epochs_run
        self.final_loss_ = float(epoch_loss)
        return self

    def decision_function(self, X) -> np.ndarray:
        X = self._check_predict(X)
        return mlp_logits(self.params_, X.toarray())

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.decision_function(X))

    def _arrays(self):
        out = {"classes": self.classes_}
        for i, (w, b) in enumerate(self.params_):
            out[f"w{i}"] = w
            out[f"b{i}"] = b
        return out

    def _scalars(self):
        return {"epochs_run": self.epochs_run_, "final_loss": self.final_loss_}

    def _restore(self, arrays, scalars=None):
        self.classes_ = arrays["classes"]
        self.params_ = []
        i = 0
        while f"w{i}" in arrays:
            self.params_.append((arrays[f"w{i}"], arrays[f"b{i}"]))
            i += 1
        self.n_features_in_ = self.params_[0][0].shape[0]
        scalars = scalars or {}
        self.epochs_run_ = scalars.get("epochs_run", 0)
        self.final_loss_ = scalars.get("final_loss", float("nan"))
        return self
