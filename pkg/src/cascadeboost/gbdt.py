"""Binary-classification gradient boosting built from scratch.

Trees are grown depth-first with exact split search over sorted unique
feature values (midpoint thresholds), logistic loss, and Newton leaf
values. Routing is `value <= threshold goes left`. One seeded generator
per model drives row and feature subsampling, consumed in a fixed order
(rows, then features, each iteration), so training is bit-reproducible.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import expit, logit
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .exceptions import IndexOutOfRangeError, InvalidSpecError
from .metrics import logloss
from .validation import (
    check_binary_labels,
    check_both_classes,
    check_feature_matrix,
    check_width,
)


@dataclass(frozen=True)
class GbdtConfig:
    """Hyper-parameters of one boosting model.

    Defaults follow the production tuning this library ships with:
    150 trees of depth 8, minimum 20 instances to split a node,
    learning rate 0.01, and 0.6 row/feature sampling per iteration.
    """

    num_trees: int = 150
    max_depth: int = 8
    min_instances_per_split: int = 20
    learning_rate: float = 0.01
    row_subsample: float = 0.6
    feature_subsample: float = 0.6
    seed: int = 42
    prob_clamp_epsilon: float = 1e-15

    def validate(self):
        if self.num_trees < 1:
            raise InvalidSpecError("num_trees must be a positive integer")
        if self.max_depth < 1:
            raise InvalidSpecError("max_depth must be a positive integer")
        if self.min_instances_per_split < 1:
            raise InvalidSpecError("min_instances_per_split must be positive")
        if self.learning_rate <= 0:
            raise InvalidSpecError("learning_rate must be positive")
        for name in ("row_subsample", "feature_subsample"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                raise InvalidSpecError(f"{name} must lie in (0, 1], got {v!r}")
        if not (0 <= int(self.seed) < 2**64):
            raise InvalidSpecError("seed must be an unsigned 64-bit integer")
        if not (0.0 < self.prob_clamp_epsilon < 0.5):
            raise InvalidSpecError("prob_clamp_epsilon must lie in (0, 0.5)")
        return self


class Tree:
    """One regression tree stored as parallel node arrays.

    ``feature[i] == -1`` marks node ``i`` as a leaf. Leaves are numbered
    0..n_leaves-1 in depth-first (left-first) construction order, which
    keeps the numbering gap-free.
    """

    __slots__ = ("feature", "threshold", "left", "right", "value", "leaf_index",
                 "n_leaves", "leaf_values")

    def __init__(self, feature, threshold, left, right, value, leaf_index):
        self.feature = np.asarray(feature, dtype=np.int32)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int32)
        self.right = np.asarray(right, dtype=np.int32)
        self.value = np.asarray(value, dtype=np.float64)
        self.leaf_index = np.asarray(leaf_index, dtype=np.int32)
        self.n_leaves = int((self.feature == -1).sum())
        leaf_values = np.empty(self.n_leaves)
        leaf_values[self.leaf_index[self.feature == -1]] = self.value[self.feature == -1]
        self.leaf_values = leaf_values

    def apply(self, X):
        """Route every row of X to a leaf; returns leaf ordinals."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            feats = self.feature[node]
            active = np.nonzero(feats >= 0)[0]
            if active.size == 0:
                break
            cur = node[active]
            go_left = X[active, feats[active]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
        return self.leaf_index[node]

    def path_to_leaf(self, leaf):
        """Splits on the root-to-leaf path as (feature, threshold, went_left)."""
        if not (0 <= leaf < self.n_leaves):
            raise IndexOutOfRangeError(f"tree has {self.n_leaves} leaves, asked for {leaf}")
        target = int(np.nonzero((self.feature == -1) & (self.leaf_index == leaf))[0][0])
        # Walk up via a parent map; trees are small so build it on the fly.
        parent = {}
        for i in range(len(self.feature)):
            if self.feature[i] >= 0:
                parent[int(self.left[i])] = (i, True)
                parent[int(self.right[i])] = (i, False)
        steps = []
        node = target
        while node in parent:
            up, went_left = parent[node]
            steps.append((int(self.feature[up]), float(self.threshold[up]), went_left))
            node = up
        steps.reverse()
        return steps


@njit(cache=True)
def _grow_kernel(xs, work, gs, hs, max_depth, min_split,
                 feature, threshold, left, right, value, leaf_index, gains):
    """Depth-first exact tree growth on presorted columns.

    ``xs`` and ``work`` are (features, rows) matrices; ``work[f]`` holds
    the node's row ids sorted by feature f and is partitioned in place
    at every split. Nodes are numbered in preorder, leaves left-first.
    Ties in gain resolve to the lowest feature, then lowest threshold.
    Returns (node count, leaf count).
    """
    k, m = xs.shape
    tmp = np.empty(m, np.int64)
    is_left = np.zeros(m, np.bool_)
    # stack rows: lo, hi, depth, parent, arrives-as-left-child
    stack = np.empty((2 * max_depth + 4, 5), np.int64)
    stack[0, 0] = 0
    stack[0, 1] = m
    stack[0, 2] = 0
    stack[0, 3] = -1
    stack[0, 4] = 0
    top = 1
    n_nodes = 0
    n_leaves = 0
    while top > 0:
        top -= 1
        lo, hi, depth, parent, as_left = (stack[top, 0], stack[top, 1],
                                          stack[top, 2], stack[top, 3],
                                          stack[top, 4])
        node = n_nodes
        n_nodes += 1
        if parent >= 0:
            if as_left == 1:
                left[parent] = node
            else:
                right[parent] = node

        G = 0.0
        H = 0.0
        for i in range(lo, hi):
            r = work[0, i]
            G += gs[r]
            H += hs[r]

        best_gain = 0.0
        best_f = -1
        best_pos = -1
        if depth < max_depth and hi - lo >= min_split and hi - lo >= 2:
            const = G * G / H
            for f in range(k):
                gl = 0.0
                hl = 0.0
                for i in range(lo, hi - 1):
                    r = work[f, i]
                    gl += gs[r]
                    hl += hs[r]
                    if xs[f, work[f, i + 1]] > xs[f, r]:
                        gr = G - gl
                        hr = H - hl
                        # hr can cancel to exactly 0 when the right side
                        # holds only saturated-probability rows
                        if hl > 0.0 and hr > 0.0:
                            gain = 0.5 * (gl * gl / hl + gr * gr / hr - const)
                            if gain > best_gain:
                                best_gain = gain
                                best_f = f
                                best_pos = i

        if best_f < 0:
            feature[node] = -1
            threshold[node] = 0.0
            left[node] = -1
            right[node] = -1
            value[node] = G / H
            leaf_index[node] = n_leaves
            n_leaves += 1
            continue

        lo_val = xs[best_f, work[best_f, best_pos]]
        hi_val = xs[best_f, work[best_f, best_pos + 1]]
        thr = 0.5 * (lo_val + hi_val)
        if thr >= hi_val:  # midpoint rounded up to the right value
            thr = lo_val
        feature[node] = best_f
        threshold[node] = thr
        value[node] = 0.0
        leaf_index[node] = -1
        gains[best_f] += best_gain

        n_left = best_pos + 1 - lo
        for i in range(lo, best_pos + 1):
            is_left[work[best_f, i]] = True
        for f in range(k):
            a = lo
            b = lo + n_left
            for i in range(lo, hi):
                r = work[f, i]
                if is_left[r]:
                    tmp[a] = r
                    a += 1
                else:
                    tmp[b] = r
                    b += 1
            work[f, lo:hi] = tmp[lo:hi]
        for i in range(lo, lo + n_left):
            is_left[work[0, i]] = False

        # right pushed first so the left child pops (and numbers) first
        stack[top, 0] = lo + n_left
        stack[top, 1] = hi
        stack[top, 2] = depth + 1
        stack[top, 3] = node
        stack[top, 4] = 0
        top += 1
        stack[top, 0] = lo
        stack[top, 1] = lo + n_left
        stack[top, 2] = depth + 1
        stack[top, 3] = node
        stack[top, 4] = 1
        top += 1
    return n_nodes, n_leaves


def _grow_tree(X, g, h, rows, feats, max_depth, min_split, gain_out):
    """Grow one tree on the sampled rows/features.

    Split gains (Newton gain, the loss reduction of the chosen split)
    are accumulated into ``gain_out`` indexed by original feature.
    """
    xs = np.ascontiguousarray(X[np.ix_(rows, feats)].T)
    gs = np.ascontiguousarray(g[rows])
    hs = np.ascontiguousarray(h[rows])
    work = np.ascontiguousarray(np.argsort(xs, axis=1, kind="stable"))

    cap = min(2 ** (max_depth + 1), 2 * len(rows)) + 1
    feature = np.empty(cap, np.int64)
    threshold = np.empty(cap, np.float64)
    left = np.empty(cap, np.int64)
    right = np.empty(cap, np.int64)
    value = np.empty(cap, np.float64)
    leaf_index = np.empty(cap, np.int64)
    gains = np.zeros(len(feats), np.float64)

    n_nodes, _ = _grow_kernel(xs, work, gs, hs, max_depth, min_split,
                              feature, threshold, left, right, value,
                              leaf_index, gains)
    np.add.at(gain_out, feats, gains)
    local = feature[:n_nodes]
    global_feature = np.where(local >= 0, feats[np.maximum(local, 0)], -1)
    return Tree(global_feature, threshold[:n_nodes], left[:n_nodes],
                right[:n_nodes], value[:n_nodes], leaf_index[:n_nodes])


class GBDTClassifier(BaseEstimator):
    """Gradient boosted trees for binary targets.

    Parameters mirror :class:`GbdtConfig`. After ``fit`` the model is
    immutable: ``trees_`` holds the grown trees, ``base_score_`` the
    log-odds of the training positive rate, ``per_feature_gain_`` the
    accumulated split gains and ``train_logloss_curve_`` the training
    log-loss after each boosting iteration.
    """

    def __init__(self, num_trees=150, max_depth=8, min_instances_per_split=20,
                 learning_rate=0.01, row_subsample=0.6, feature_subsample=0.6,
                 seed=42, prob_clamp_epsilon=1e-15):
        self.num_trees = num_trees
        self.max_depth = max_depth
        self.min_instances_per_split = min_instances_per_split
        self.learning_rate = learning_rate
        self.row_subsample = row_subsample
        self.feature_subsample = feature_subsample
        self.seed = seed
        self.prob_clamp_epsilon = prob_clamp_epsilon

    def _make_config(self):
        return GbdtConfig(
            num_trees=self.num_trees,
            max_depth=self.max_depth,
            min_instances_per_split=self.min_instances_per_split,
            learning_rate=self.learning_rate,
            row_subsample=self.row_subsample,
            feature_subsample=self.feature_subsample,
            seed=self.seed,
            prob_clamp_epsilon=self.prob_clamp_epsilon,
        ).validate()

    def fit(self, X, y, feature_names=None):
        config = self._make_config()
        X = check_feature_matrix(X)
        y = check_binary_labels(y, n_rows=X.shape[0])
        check_both_classes(y)
        n, d = X.shape
        eps = config.prob_clamp_epsilon

        rng = np.random.default_rng(config.seed)
        base_score = float(logit(y.mean()))
        scores = np.full(n, base_score)
        n_rows = max(1, math.ceil(config.row_subsample * n))
        n_feats = max(1, math.ceil(config.feature_subsample * d))

        trees = []
        gain_out = np.zeros(d)
        curve = []
        for _ in range(config.num_trees):
            rows = np.sort(rng.choice(n, size=n_rows, replace=False))
            feats = np.sort(rng.choice(d, size=n_feats, replace=False))
            p = np.clip(expit(scores), eps, 1.0 - eps)
            tree = _grow_tree(X, y - p, p * (1.0 - p), rows, feats,
                              config.max_depth, config.min_instances_per_split,
                              gain_out)
            if tree.n_leaves == 1 and tree.leaf_values[0] == 0.0:
                break  # growth stalled; further trees would be identical no-ops
            trees.append(tree)
            scores = scores + config.learning_rate * tree.leaf_values[tree.apply(X)]
            curve.append(logloss(y, np.clip(expit(scores), eps, 1.0 - eps), eps=eps))

        self.config_ = config
        self.n_features_in_ = d
        self.feature_names_ = (
            list(feature_names) if feature_names is not None
            else [f"f{j}" for j in range(d)]
        )
        self.base_score_ = base_score
        self.trees_ = trees
        self.per_feature_gain_ = gain_out
        self.train_logloss_curve_ = curve
        return self

    @classmethod
    def _from_parts(cls, config, base_score, trees, feature_names, per_feature_gain,
                    train_logloss_curve=()):
        model = cls(**{f: getattr(config, f) for f in config.__dataclass_fields__})
        model.config_ = config
        model.n_features_in_ = len(feature_names)
        model.feature_names_ = list(feature_names)
        model.base_score_ = float(base_score)
        model.trees_ = list(trees)
        model.per_feature_gain_ = np.asarray(per_feature_gain, dtype=np.float64)
        model.train_logloss_curve_ = list(train_logloss_curve)
        return model

    def _check_fitted(self):
        if not hasattr(self, "trees_"):
            raise NotFittedError("this GBDTClassifier is not fitted yet")

    def _raw_scores(self, X, n_trees=None):
        self._check_fitted()
        X = check_width(check_feature_matrix(X), self.n_features_in_)
        scores = np.full(X.shape[0], self.base_score_)
        use = self.trees_ if n_trees is None else self.trees_[:n_trees]
        for tree in use:
            scores += self.config_.learning_rate * tree.leaf_values[tree.apply(X)]
        return scores

    def predict_score(self, X):
        """Positive-class probability per row, clamped away from 0 and 1."""
        eps = self.config_.prob_clamp_epsilon
        return np.clip(expit(self._raw_scores(X)), eps, 1.0 - eps)

    def predict_proba(self, X):
        p = self.predict_score(X)
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return (self.predict_score(X) >= 0.5).astype(np.int64)

    def staged_proba(self, X, n_trees):
        """Positive-class probability using only the first ``n_trees`` trees."""
        self._check_fitted()
        if not (1 <= n_trees <= len(self.trees_)):
            raise IndexOutOfRangeError(
                f"n_trees must lie in [1, {len(self.trees_)}], got {n_trees}"
            )
        eps = self.config_.prob_clamp_epsilon
        return np.clip(expit(self._raw_scores(X, n_trees)), eps, 1.0 - eps)

    def apply(self, X):
        """Leaf ordinal per (row, tree); shape (n, num fitted trees)."""
        self._check_fitted()
        X = check_width(check_feature_matrix(X), self.n_features_in_)
        if not self.trees_:
            return np.empty((X.shape[0], 0), dtype=np.int64)
        return np.column_stack([tree.apply(X) for tree in self.trees_])

    @property
    def feature_importances_(self):
        self._check_fitted()
        total = self.per_feature_gain_.sum()
        if total > 0.0:
            return self.per_feature_gain_ / total
        return np.zeros_like(self.per_feature_gain_)

    def feature_importance(self):
        """(name, importance) pairs sorted by descending importance."""
        imp = self.feature_importances_
        order = sorted(range(len(imp)), key=lambda j: (-imp[j], j))
        return [(self.feature_names_[j], float(imp[j])) for j in order]
