"""CART decision tree: Gini impurity, best split over all features."""

from __future__ import annotations

import numpy as np

from .base import AffinityClassifierMixin


class DecisionTreeClassifier(AffinityClassifierMixin):
    """Depth-capped CART with optional balanced class weights.

    Balanced mode weights each sample by ``n / (n_classes * n_class)`` so
    rare groups still pull splits their way.  Splits maximize the weighted
    Gini decrease; the first best (lowest feature index, lowest threshold)
    wins ties, keeping the tree deterministic.
    """

    def __init__(self, max_depth: int = 15, balanced: bool = True):
        self.max_depth = max_depth
        self.balanced = balanced

    def fit(self, X, y, allow_single_class: bool = False):
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        X, y_idx = self._start_fit(X, y, allow_single_class)
        dense = X.toarray()
        n, _ = dense.shape
        k = len(self.classes_)
        if self.balanced:
            counts = np.bincount(y_idx, minlength=k)
            class_w = n / (k * np.maximum(counts, 1))
        else:
            class_w = np.ones(k)
        weights = class_w[y_idx]
        # flat node arrays; children of -1 mark a leaf
        self._feature: list[int] = []
        self._threshold: list[float] = []
        self._left: list[int] = []
        self._right: list[int] = []
        self._dist: list[np.ndarray] = []
        self._build(dense, y_idx, weights, np.arange(n), depth=0)
        self.tree_feature_ = np.asarray(self._feature, dtype=np.int64)
        self.tree_threshold_ = np.asarray(self._threshold)
        self.tree_left_ = np.asarray(self._left, dtype=np.int64)
        self.tree_right_ = np.asarray(self._right, dtype=np.int64)
        self.tree_dist_ = np.vstack(self._dist)
        del self._feature, self._threshold, self._left, self._right, self._dist
        return self

    def _node_dist(self, y_idx, weights) -> np.ndarray:
        dist = np.zeros(len(self.classes_))
        np.add.at(dist, y_idx, weights)
        return dist

    def _best_split(self, X, y_idx, weights):
        """(feature, threshold) with the largest Gini decrease, or None."""
        total_w = weights.sum()
        dist = self._node_dist(y_idx, weights)
        parent_gini = 1.0 - ((dist / total_w) ** 2).sum()
        best = None
        best_gain = 1e-12
        k = len(self.classes_)
        onehot_w = np.zeros((len(y_idx), k))
        onehot_w[np.arange(len(y_idx)), y_idx] = weights
        for j in range(X.shape[1]):
            col = X[:, j]
            order = np.argsort(col, kind="stable")
            sv = col[order]
            if sv[0] == sv[-1]:
                continue
            cum = np.cumsum(onehot_w[order], axis=0)  # (n, k)
            cut = np.nonzero(sv[1:] > sv[:-1])[0]  # split after position i
            left_w = cum[cut].sum(axis=1)
            right_w = total_w - left_w
            left_gini = 1.0 - ((cum[cut] / left_w[:, None]) ** 2).sum(axis=1)
            right_dist = dist[None, :] - cum[cut]
            right_gini = 1.0 - ((right_dist / right_w[:, None]) ** 2).sum(axis=1)
            gain = parent_gini - (left_w * left_gini + right_w * right_gini) / total_w
            best_here = int(np.argmax(gain))
            if gain[best_here] > best_gain:
                best_gain = gain[best_here]
                i = cut[best_here]
                best = (j, float((sv[i] + sv[i + 1]) / 2.0))
        return best

    def _build(self, X, y_idx, weights, rows, depth: int) -> int:
        node = len(self._feature)
        self._feature.append(-1)
        self._threshold.append(0.0)
        self._left.append(-1)
        self._right.append(-1)
        ry = y_idx[rows]
        rw = weights[rows]
        self._dist.append(self._node_dist(ry, rw))
        if depth >= self.max_depth or len(rows) < 2 or len(np.unique(ry)) < 2:
            return node
        split = self._best_split(X[rows], ry, rw)
        if split is None:
            return node
        j, thr = split
        go_left = X[rows, j] <= thr
        self._feature[node] = j
        self._threshold[node] = thr
        left = self._build(X, y_idx, weights, rows[go_left], depth + 1)
        self._left[node] = left
        right = self._build(X, y_idx, weights, rows[~go_left], depth + 1)
        self._right[node] = right
        return node

    def predict(self, X) -> np.ndarray:
        X = self._check_predict(X)
        dense = X.toarray()
        out = np.empty(len(dense), dtype=self.classes_.dtype)
        for i, x in enumerate(dense):
            node = 0
            while self.tree_feature_[node] >= 0:
                if x[self.tree_feature_[node]] <= self.tree_threshold_[node]:
                    node = self.tree_left_[node]
                else:
                    node = self.tree_right_[node]
            out[i] = self.classes_[int(np.argmax(self.tree_dist_[node]))]
        return out

    def realized_depth(self) -> int:
        """Longest root-to-leaf edge count of the fitted tree."""
        def depth_of(node: int) -> int:
            if self.tree_feature_[node] < 0:
                return 0
            return 1 + max(depth_of(self.tree_left_[node]),
                           depth_of(self.tree_right_[node]))
        return depth_of(0)

    def _arrays(self):
        return {
            "classes": self.classes_,
            "feature": self.tree_feature_,
            "threshold": self.tree_threshold_,
            "left": self.tree_left_,
            "right": self.tree_right_,
            "dist": self.tree_dist_,
            "width": np.asarray([self.n_features_in_], dtype=np.int64),
        }

    def _restore(self, arrays):
        self.classes_ = arrays["classes"]
        self.tree_feature_ = arrays["feature"]
        self.tree_threshold_ = arrays["threshold"]
        self.tree_left_ = arrays["left"]
        self.tree_right_ = arrays["right"]
        self.tree_dist_ = arrays["dist"]
        self.n_features_in_ = int(arrays["width"][0])
        return self
