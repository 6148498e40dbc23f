"""Distances, neighbor rankings and (weighted) K-nearest-neighbor prediction.

Rankings are full stable argsorts: equal distances keep ascending training id,
which makes every downstream valuation a deterministic function of the data.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, DatasetError

METRICS = ("euclidean", "cosine")


@dataclass(frozen=True, eq=False)
class NeighborRanking:
    query_id: int
    order: np.ndarray
    distances: np.ndarray

    def __len__(self):
        return len(self.order)


@dataclass(frozen=True, eq=False)
class ClassScores:
    scores: np.ndarray
    degenerate: bool = False
    fallback: bool = False


def _check_metric(metric):
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")


def distances(train_X, queries, metric="euclidean"):
    """(Q, N) distance matrix between query rows and training rows.

    Euclidean distances are taken from explicit differences rather than the
    expanded dot-product form, so an exact duplicate sits at distance 0.
    """
    _check_metric(metric)
    train_X = np.asarray(train_X, dtype=np.float64)
    Q = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if train_X.ndim != 2 or Q.shape[1] != train_X.shape[1]:
        raise DatasetError(
            f"query dimension {Q.shape[1]} does not match training dimension {train_X.shape[-1]}")
    if metric == "euclidean":
        out = np.empty((Q.shape[0], train_X.shape[0]))
        for r, q in enumerate(Q):
            diff = train_X - q
            out[r] = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        return out
    tn = np.linalg.norm(train_X, axis=1)
    qn = np.linalg.norm(Q, axis=1)
    if np.any(tn == 0) or np.any(qn == 0):
        raise DatasetError("cosine distance is undefined for zero-norm vectors")
    sim = (Q @ train_X.T) / np.outer(qn, tn)
    return 1.0 - np.clip(sim, -1.0, 1.0)


def rank_matrix(train_X, queries, metric="euclidean"):
    """Stable ascending ranking of all training points for every query row."""
    d = distances(train_X, queries, metric)
    order = np.argsort(d, axis=1, kind="stable")
    return order, np.take_along_axis(d, order, axis=1)


def rank_neighbors(train: Dataset, query, metric="euclidean", query_id=0) -> NeighborRanking:
    order, d = rank_matrix(train.X, np.asarray(query, dtype=np.float64).reshape(1, -1), metric)
    return NeighborRanking(query_id, order[0], d[0])


def _vote(labels, weights, C):
    s = np.bincount(labels, weights=weights, minlength=C).astype(np.float64)
    return s / s.sum()


def knn_predict(train: Dataset, K: int, query, metric="euclidean"):
    """Plurality vote of the ``min(K, N)`` nearest neighbors.

    Returns ``(label, ClassScores)``; score ties go to the smallest class index.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if len(train) == 0:
        raise DatasetError("cannot predict from an empty training set")
    r = rank_neighbors(train, query, metric)
    nn = r.order[: min(K, len(train))]
    scores = _vote(train.y[nn], None, train.num_classes)
    return int(np.argmax(scores)), ClassScores(scores)


def _effective_weights(weights, scheme):
    w = np.asarray(weights, dtype=np.float64)
    if scheme == "clip":
        return np.maximum(w, 0.0)
    if scheme == "minmax":
        lo, hi = w.min(), w.max()
        if hi == lo:
            return np.ones_like(w)
        return (w - lo) / (hi - lo)
    raise ValueError(f"unknown weighting scheme {scheme!r}")


def weighted_knn_predict(train: Dataset, weights, K: int, query, metric="euclidean",
                         scheme="clip"):
    """Vote of the K nearest neighbors weighted by per-sample valuations.

    With ``scheme="clip"`` negative weights count as zero; if every neighbor
    ends up with zero weight the plain vote is used and ``fallback`` is set.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (len(train),):
        raise DatasetError(f"got {w.size} weights for {len(train)} training samples")
    if len(train) == 0:
        raise DatasetError("cannot predict from an empty training set")
    eff = _effective_weights(w, scheme)
    r = rank_neighbors(train, query, metric)
    nn = r.order[: min(K, len(train))]
    if eff[nn].sum() <= 0:
        scores = _vote(train.y[nn], None, train.num_classes)
        return int(np.argmax(scores)), ClassScores(scores, fallback=True)
    scores = _vote(train.y[nn], eff[nn], train.num_classes)
    return int(np.argmax(scores)), ClassScores(scores)


def scores_from_ranking(order, train_y, K, C, keep=None, weights=None):
    """Class scores for every ranked query row, optionally restricted to ``keep``.

    ``order`` is a (Q, N) ranking; ``keep`` a boolean mask over training ids.
    Restricting an existing ranking preserves the (distance, id) order, so the
    result equals a fresh ranking of the kept subset. Returns (scores, fallback)
    where fallback flags rows whose weighted vote collapsed to zero.
    """
    order = np.asarray(order)
    Qn = order.shape[0]
    if keep is None:
        n_keep = order.shape[1]
        nn = order[:, : min(K, n_keep)]
    else:
        keep = np.asarray(keep, dtype=bool)
        n_keep = int(keep.sum())
        if n_keep == 0:
            raise DatasetError("training set is empty")
        k = min(K, n_keep)
        kept = keep[order]
        # first k kept entries of each row, in rank order
        pos = np.cumsum(kept, axis=1)
        sel = kept & (pos <= k)
        nn = order[sel].reshape(Qn, k)
    labels = np.asarray(train_y)[nn]
    onehot = np.zeros((Qn, nn.shape[1], C))
    np.put_along_axis(onehot, labels[..., None], 1.0, axis=2)
    plain = onehot.sum(axis=1)
    fallback = np.zeros(Qn, dtype=bool)
    if weights is None:
        return plain / plain.sum(axis=1, keepdims=True), fallback
    w = np.asarray(weights, dtype=np.float64)[nn]
    weighted = (onehot * w[..., None]).sum(axis=1)
    tot = weighted.sum(axis=1)
    fallback = tot <= 0
    out = np.where(fallback[:, None], plain, weighted)
    return out / out.sum(axis=1, keepdims=True), fallback


def predict_from_ranking(order, train_y, K, C, keep=None, weights=None):
    scores, _ = scores_from_ranking(order, train_y, K, C, keep=keep, weights=weights)
    return np.argmax(scores, axis=1)


def accuracy(train: Dataset, eval_set: Dataset, K: int, metric="euclidean", weights=None,
             scheme="clip") -> float:
    """Fraction of ``eval_set`` classified correctly by (weighted) KNN on ``train``."""
    if len(eval_set) == 0:
        raise DatasetError("evaluation set is empty")
    if len(train) == 0:
        raise DatasetError("training set is empty")
    order, _ = rank_matrix(train.X, eval_set.X, metric)
    C = max(train.num_classes, eval_set.num_classes)
    w = None if weights is None else _effective_weights(weights, scheme)
    if w is not None and w.shape != (len(train),):
        raise DatasetError(f"got {w.size} weights for {len(train)} training samples")
    pred = predict_from_ranking(order, train.y, K, C, weights=w)
    return float(np.count_nonzero(pred == eval_set.y)) / len(eval_set)


def export_ranking_csv(rankings, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("query_id,rank,train_id,distance\n")
        for r in rankings:
            for k, (i, d) in enumerate(zip(r.order, r.distances)):
                fh.write(f"{r.query_id},{k},{int(i)},{format(float(d), '.17g')}\n")
