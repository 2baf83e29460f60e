"""Independent brute-force oracles used by the tests.

These deliberately avoid the library's vectorized code paths: trees are
routed one instance at a time by walking node records, staged
probabilities are rebuilt from scratch, and the AUC oracle compares all
positive/negative pairs.
"""

import math

import numpy as np


def route_instance(tree, x):
    """Walk a single instance down a tree; returns the leaf ordinal."""
    node = 0
    while tree.feature[node] >= 0:
        if x[tree.feature[node]] <= tree.threshold[node]:
            node = tree.left[node]
        else:
            node = tree.right[node]
    return int(tree.leaf_index[node])


def staged_probability(model, x, n_trees):
    """Probability of one instance through the first n_trees trees."""
    score = model.base_score_
    for tree in model.trees_[:n_trees]:
        leaf = route_instance(tree, x)
        score += model.config_.learning_rate * tree.leaf_values[leaf]
    eps = model.config_.prob_clamp_epsilon
    return min(max(1.0 / (1.0 + math.exp(-score)), eps), 1.0 - eps)


def naive_entropy_tables(model, X, y):
    """Per-tree leaf cross-entropies via an explicit per-instance loop.

    Each instance is walked through the trees once, accumulating its
    staged score as it goes, so the loop stays O(instances x trees).
    """
    lr = model.config_.learning_rate
    eps = model.config_.prob_clamp_epsilon
    sums = [dict() for _ in model.trees_]
    counts = [dict() for _ in model.trees_]
    for i in range(X.shape[0]):
        score = model.base_score_
        for j, tree in enumerate(model.trees_):
            leaf = route_instance(tree, X[i])
            score += lr * tree.leaf_values[leaf]
            h = min(max(1.0 / (1.0 + math.exp(-score)), eps), 1.0 - eps)
            loss = -(y[i] * math.log(h) + (1 - y[i]) * math.log(1.0 - h))
            sums[j][leaf] = sums[j].get(leaf, 0.0) + loss
            counts[j][leaf] = counts[j].get(leaf, 0) + 1
    tables = []
    for j, tree in enumerate(model.trees_):
        entropies = np.array([sums[j][k] / counts[j][k] for k in range(tree.n_leaves)])
        tables.append((entropies, np.array([counts[j][k] for k in range(tree.n_leaves)])))
    return tables


def pairwise_auc(y, s):
    """O(n^2) Mann-Whitney statistic: wins plus half ties over all pairs."""
    s = np.asarray(s, dtype=float)
    y = np.asarray(y)
    pos = s[y == 1]
    neg = s[y == 0]
    wins = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return (wins + 0.5 * ties) / (len(pos) * len(neg))
