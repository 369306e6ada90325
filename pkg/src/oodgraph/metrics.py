"""OOD detection metrics. Scores follow the convention higher = more ID-like."""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import rankdata


def _scores(id_scores, ood_scores) -> tuple[np.ndarray, np.ndarray]:
    id_s = np.asarray(id_scores, dtype=float).ravel()
    ood_s = np.asarray(ood_scores, dtype=float).ravel()
    if id_s.size == 0 or ood_s.size == 0:
        raise ValueError("both ID and OOD scores must be non-empty")
    if not (np.isfinite(id_s).all() and np.isfinite(ood_s).all()):
        raise ValueError("scores must be finite")
    return id_s, ood_s


def auroc(id_scores, ood_scores) -> float:
    """P(ID score > OOD score) with ties counted 1/2, via the rank-sum statistic.

    Args:
        id_scores: scores of in-distribution samples.
        ood_scores: scores of out-of-distribution samples.

    Returns:
        AUROC in [0, 1].
    """
    id_s, ood_s = _scores(id_scores, ood_scores)
    ranks = rankdata(np.concatenate([id_s, ood_s]))
    n, m = id_s.size, ood_s.size
    u = ranks[:n].sum() - n * (n + 1) / 2.0
    return float(u / (n * m))


def fpr_at_tpr(id_scores, ood_scores, tpr: float = 0.95) -> float:
    """Fraction of OOD scores at or above the ID acceptance threshold.

    The threshold is the largest ID score that still lets at least ``tpr`` of
    the ID scores through (``score >= threshold``).

    Args:
        id_scores: scores of in-distribution samples.
        ood_scores: scores of out-of-distribution samples.
        tpr: required ID acceptance rate in (0, 1].

    Returns:
        False positive rate in [0, 1].
    """
    if not 0 < tpr <= 1:
        raise ValueError("tpr must be in (0, 1]")
    id_s, ood_s = _scores(id_scores, ood_scores)
    id_sorted = np.sort(id_s)
    # allowed rejections; the epsilon absorbs float error in (1 - tpr) * n
    rejected = math.floor((1.0 - tpr) * id_s.size + 1e-9)
    threshold = id_sorted[min(rejected, id_s.size - 1)]
    return float(np.mean(ood_s >= threshold))


def knn_distances(train_Z: np.ndarray, queries: np.ndarray, normalize: bool = False) -> np.ndarray:
    train_Z = np.atleast_2d(np.asarray(train_Z, dtype=float))
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    if normalize:
        train_Z = train_Z / np.maximum(np.linalg.norm(train_Z, axis=1, keepdims=True), 1e-12)
        queries = queries / np.maximum(np.linalg.norm(queries, axis=1, keepdims=True), 1e-12)
    diff = queries[:, None, :] - train_Z[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=2))


def knn_ood_scores(
    train_Z: np.ndarray,
    queries: np.ndarray,
    k_nn: int,
    normalize: bool = False,
    exclude_self: bool = False,
) -> np.ndarray:
    """Negated distance from each query to its ``k_nn``-th nearest training row.

    ``exclude_self`` assumes ``queries`` are the training rows themselves and
    skips each row's zero self-distance.
    """
    n = np.atleast_2d(train_Z).shape[0]
    limit = n - 1 if exclude_self else n
    if not 1 <= k_nn <= limit:
        raise ValueError(f"k_nn={k_nn} outside [1, {limit}]")
    dist = knn_distances(train_Z, queries, normalize)
    if exclude_self:
        np.fill_diagonal(dist, np.inf)
    kth = np.partition(dist, k_nn - 1, axis=1)[:, k_nn - 1]
    return -kth


def knn_ood_score(train_Z: np.ndarray, query: np.ndarray, k_nn: int, normalize: bool = False) -> float:
    return float(knn_ood_scores(train_Z, np.atleast_2d(query), k_nn, normalize)[0])
