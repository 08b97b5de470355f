"""Class-balanced binary cross entropy and rank-based ROC AUC."""

import numpy as np

from .errors import DimensionError, DomainError

CLAMP_EPS = 1e-7


def class_weights(labels):
    """Balanced weights (w_pos, w_neg) = (E / 2E+, E / 2E-); 1 for an absent class."""
    labels = np.asarray(labels)
    n = labels.size
    n_pos = int(np.sum(labels == 1))
    n_neg = n - n_pos
    w_pos = n / (2.0 * n_pos) if n_pos else 1.0
    w_neg = n / (2.0 * n_neg) if n_neg else 1.0
    return w_pos, w_neg


def _check(probs, labels):
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if probs.shape != labels.shape:
        raise DimensionError(f"probs {probs.shape} and labels {labels.shape} differ in shape")
    if probs.size == 0:
        raise DomainError("loss needs at least one edge")
    return probs, labels


def weighted_bce(probs, labels, weights=None, clamp_eps=CLAMP_EPS):
    probs, labels = _check(probs, labels)
    w_pos, w_neg = weights if weights is not None else class_weights(labels)
    p = np.clip(probs, clamp_eps, 1.0 - clamp_eps)
    terms = w_pos * labels * np.log(p) + w_neg * (1.0 - labels) * np.log1p(-p)
    return float(-np.mean(terms))


def weighted_bce_grad(probs, labels, weights=None, clamp_eps=CLAMP_EPS):
    """d loss / d probs; zero where the clamp is active."""
    probs, labels = _check(probs, labels)
    w_pos, w_neg = weights if weights is not None else class_weights(labels)
    p = np.clip(probs, clamp_eps, 1.0 - clamp_eps)
    grad = -(w_pos * labels / p - w_neg * (1.0 - labels) / (1.0 - p)) / probs.size
    inside = (probs > clamp_eps) & (probs < 1.0 - clamp_eps)
    return np.where(inside, grad, 0.0)


def roc_auc(scores, labels):
    """Mann-Whitney AUC using average ranks, so ties count one half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise DimensionError("scores and labels differ in shape")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DomainError("AUC is undefined without both classes")
    order = np.argsort(scores, kind="mergesort")
    sorted_scores = scores[order]
    ranks = np.empty(scores.size)
    # average 1-based rank over each run of tied scores
    bounds = np.flatnonzero(np.diff(sorted_scores)) + 1
    starts = np.concatenate([[0], bounds])
    stops = np.concatenate([bounds, [scores.size]])
    for start, stop in zip(starts, stops):
        ranks[order[start:stop]] = 0.5 * (start + stop + 1)
    # exact in integer-and-halves arithmetic before the final division
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))
