"""Ranking and classification metrics for binary scorers."""

import math

import numpy as np
from scipy.stats import rankdata

from .exceptions import EmptySetError, InvalidSpecError, SingleClassError
from .validation import check_binary_labels


def _check_scored_set(y_true, y_score):
    y_score = np.asarray(y_score, dtype=np.float64)
    if y_score.ndim != 1:
        raise InvalidSpecError("scores must be a 1-D vector")
    if len(y_score) == 0:
        raise EmptySetError("cannot score an empty set")
    y_true = check_binary_labels(y_true, n_rows=len(y_score))
    return y_true, y_score


def auc(y_true, y_score):
    """Area under the ROC curve as the Mann-Whitney statistic.

    Equals P(score+ > score-) + 0.5 * P(score+ = score-), computed
    exactly from average ranks.
    """
    y_true, y_score = _check_scored_set(y_true, y_score)
    n_pos = int(y_true.sum())
    n_neg = len(y_true) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError("AUC requires at least one positive and one negative")
    ranks = rankdata(y_score, method="average")
    pos_rank_sum = ranks[y_true == 1].sum()
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def f1_score(precision, recall):
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def prf_at_topk(y_true, y_score, fraction):
    """Precision, recall and F1 when the top ``fraction`` of instances
    (by descending score, ties kept in original order) are predicted
    positive.

    The cut size is ceil(fraction * n), so the predicted-positive set is
    never empty for fraction > 0.
    """
    y_true, y_score = _check_scored_set(y_true, y_score)
    if not (0.0 < fraction <= 1.0):
        raise InvalidSpecError(f"fraction must lie in (0, 1], got {fraction!r}")
    k = math.ceil(fraction * len(y_score))
    order = np.argsort(-y_score, kind="stable")
    top = order[:k]
    true_pos = int(y_true[top].sum())
    total_pos = int(y_true.sum())
    precision = true_pos / k
    recall = true_pos / total_pos if total_pos > 0 else 0.0
    return precision, recall, f1_score(precision, recall)


def logloss(y_true, y_score, eps=1e-15):
    """Mean negative log-likelihood; scores are clamped to [eps, 1-eps]."""
    y_true, y_score = _check_scored_set(y_true, y_score)
    s = np.clip(y_score, eps, 1.0 - eps)
    return float(-np.mean(y_true * np.log(s) + (1 - y_true) * np.log(1.0 - s)))
