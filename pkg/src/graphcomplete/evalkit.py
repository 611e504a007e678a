"""Binary link-prediction metrics with explicit tie handling.

``roc_auc`` gives half credit to tied positive/negative pairs (the
Mann-Whitney statistic). ``average_precision`` walks the ranking in
descending score order and breaks ties by input order, so it is a pure
function of the input sequence.
"""

from __future__ import annotations

import numpy as np

__all__ = ["roc_auc", "average_precision", "accuracy", "binary_metrics"]


def _check(scores, labels, *, need_both: bool):
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    if s.size != y.size:
        raise ValueError(f"scores and labels differ in length: {s.size} vs {y.size}")
    if s.size == 0:
        raise ValueError("empty evaluation set")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    y = y.astype(bool)
    if need_both and (y.all() or not y.any()):
        raise ValueError("need at least one positive and one negative label")
    return s, y


def _tied_ranks(s: np.ndarray) -> np.ndarray:
    """1-based ranks with ties replaced by the mean rank of their group."""
    order = np.argsort(s, kind="mergesort")
    sorted_s = s[order]
    boundaries = np.flatnonzero(np.diff(sorted_s)) + 1
    starts = np.concatenate([[0], boundaries])
    ends = np.concatenate([boundaries, [s.size]])
    group_rank = (starts + ends + 1) / 2.0
    ranks = np.empty(s.size, dtype=np.float64)
    ranks[order] = np.repeat(group_rank, ends - starts)
    return ranks


def roc_auc(scores, labels) -> float:
    """P(score+ > score-) + 0.5 * P(score+ == score-)."""
    s, y = _check(scores, labels, need_both=True)
    n_pos = int(y.sum())
    n_neg = s.size - n_pos
    r = _tied_ranks(s)
    u = r[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def average_precision(scores, labels) -> float:
    s, y = _check(scores, labels, need_both=False)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise ValueError("average precision is undefined without positives")
    order = np.argsort(-s, kind="stable")
    hits = y[order]
    tp = np.cumsum(hits)
    precision = tp / np.arange(1, s.size + 1)
    return float(precision[hits].sum() / n_pos)


def accuracy(scores, labels, threshold: float = 0.5) -> float:
    s, y = _check(scores, labels, need_both=False)
    return float(np.mean((s >= threshold) == y))


def binary_metrics(pos_scores, neg_scores, threshold: float = 0.5) -> dict:
    """Accuracy, ROC-AUC and AP for separate positive/negative score arrays."""
    pos = np.asarray(pos_scores, dtype=np.float64).ravel()
    neg = np.asarray(neg_scores, dtype=np.float64).ravel()
    scores = np.concatenate([pos, neg])
    labels = np.concatenate([np.ones(pos.size, np.int8), np.zeros(neg.size, np.int8)])
    return {
        "accuracy": accuracy(scores, labels, threshold),
        "roc_auc": roc_auc(scores, labels),
        "ap": average_precision(scores, labels),
    }
