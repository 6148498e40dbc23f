"""Shapley data values under a KNN utility.

Three routes are provided:

* :func:`exact_shapley` enumerates every coalition (exponential; used as the
  reference for small N),
* :func:`knn_shapley` is the closed-form O(N) recursion over a neighbor ranking,
* :func:`cknn_shapley` is the calibrated recursion: the T farthest points get
  exactly zero and the recursion restarts at rank N-T.

Aggregation over a validation set sums per-point vectors on a fixed dyadic
grid (int64 multiples of 2**-44). Integer addition is associative, so sums
are identical for any thread count or chunking, and summing over A then B
equals summing over A and B separately, bit for bit.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import knn
from .dataset import Dataset, DatasetError, Sample

METHODS = ("exact", "knn_shapley", "cknn_shapley")
METHOD_ALIASES = {"exact": "exact", "knn": "knn_shapley", "cknn": "cknn_shapley",
                  "knn_shapley": "knn_shapley", "cknn_shapley": "cknn_shapley"}

EXACT_CAP = 16
GRID_BITS = 44
_GRID = float(2 ** GRID_BITS)


class ValuationError(ValueError):
    pass


@dataclass(frozen=True)
class ValuationParams:
    K: int = 10
    T: int | None = None
    metric: str = "euclidean"
    divisor: str = "k"

    def __post_init__(self):
        if self.K < 1:
            raise ValuationError("K must be >= 1")
        if self.divisor not in ("k", "subset"):
            raise ValuationError(f"unknown utility divisor {self.divisor!r}")
        if self.metric not in knn.METRICS:
            raise ValuationError(f"unknown metric {self.metric!r}")

    def resolve(self, N: int) -> "ValuationParams":
        """Fill in the default ``T = max(N - 2K, 0)`` and range-check T."""
        T = max(N - 2 * self.K, 0) if self.T is None else int(self.T)
        if not 0 <= T <= max(N - 1, 0):
            raise ValuationError(f"T={T} outside [0, {max(N - 1, 0)}] for N={N}")
        return replace(self, T=T)

    def as_dict(self):
        return {"K": self.K, "T": self.T, "metric": self.metric, "divisor": self.divisor}


@dataclass(frozen=True, eq=False)
class ValuationVector:
    method: str
    params: ValuationParams
    values: np.ndarray
    aggregation: str = "single"
    n_validation: int = 1
    normalized: bool = False

    def __len__(self):
        return len(self.values)

    def as_dict(self):
        return {
            "method": self.method,
            "params": self.params.as_dict(),
            "aggregation": self.aggregation,
            "n_validation": self.n_validation,
            "normalized": self.normalized,
            "values": [float(v) for v in self.values],
        }


def canonical_method(name):
    try:
        return METHOD_ALIASES[name]
    except KeyError:
        raise ValuationError(f"unknown valuation method {name!r}") from None


# --------------------------------------------------------------------------
# Reference: utility and coalition enumeration

def _query_distances(train: Dataset, x_v, metric):
    return knn.distances(train.X, np.asarray(x_v, dtype=np.float64).reshape(1, -1), metric)[0]


def _subset_utility(members, dist, labels, y_v, K, divisor):
    if not members:
        return 0.0
    ranked = sorted(members, key=lambda i: (dist[i], i))
    k = min(K, len(ranked))
    hits = sum(1 for i in ranked[:k] if labels[i] == y_v)
    return hits / (K if divisor == "k" else k)


def utility_knn(subset, train: Dataset, z_v, K, metric="euclidean", divisor="k") -> float:
    """Vote share for ``z_v``'s label among its K nearest points of ``subset``.

    The share is divided by K even when the subset holds fewer than K points
    (``divisor="subset"`` divides by ``min(K, |S|)`` instead). U(empty) = 0.
    """
    members = sorted(set(int(i) for i in subset))
    if members and (members[0] < 0 or members[-1] >= len(train)):
        raise ValuationError(f"subset ids must lie in [0, {len(train)})")
    dist = _query_distances(train, z_v.features, metric)
    return _subset_utility(members, dist, train.y, z_v.label, K, divisor)


def exact_shapley(train: Dataset, z_v, K=10, metric="euclidean", divisor="k",
                  cap=EXACT_CAP) -> ValuationVector:
    """Shapley values by enumerating all 2**N coalitions."""
    N = len(train)
    if N > cap:
        raise ValuationError(f"exact Shapley enumerates 2**N coalitions; N={N} exceeds cap {cap}")
    dist = _query_distances(train, z_v.features, metric)
    labels = train.y
    n_masks = 1 << N
    U = np.empty(n_masks)
    sizes = np.empty(n_masks, dtype=np.int64)
    for mask in range(n_masks):
        members = [i for i in range(N) if mask >> i & 1]
        sizes[mask] = len(members)
        U[mask] = _subset_utility(members, dist, labels, z_v.label, K, divisor)
    inv_binom = np.array([1.0 / math.comb(N - 1, s) for s in range(N)]) if N else np.zeros(0)
    masks = np.arange(n_masks)
    values = np.zeros(N)
    for i in range(N):
        without = masks[(masks >> i & 1) == 0]
        values[i] = np.sum((U[without | (1 << i)] - U[without]) * inv_binom[sizes[without]]) / N
    params = ValuationParams(K=K, T=0, metric=metric, divisor=divisor)
    return ValuationVector("exact", params, values)


# --------------------------------------------------------------------------
# Recursions

def _recursion(match, K, L, base_div):
    """Rank-ordered values for rows of ``match`` (Q, N), zero beyond rank L.

    value[L-1] = match[L-1] / base_div, then walking toward the nearest point
    value[i-1] = value[i] + (match[i-1] - match[i]) / max(K, i)   (1-based i).
    np.cumsum accumulates sequentially, so this equals the scalar loop.
    """
    Q, N = match.shape
    out = np.zeros((Q, N))
    if L == 0:
        return out
    m = match[:, :L].astype(np.float64)
    i = np.arange(1, L)
    inc = (m[:, :-1] - m[:, 1:]) / np.maximum(K, i)
    seq = np.empty((Q, L))
    seq[:, 0] = m[:, L - 1] / base_div
    seq[:, 1:] = inc[:, ::-1]
    out[:, :L] = np.cumsum(seq, axis=1)[:, ::-1]
    return out


def _base_divisor(method, N, K, L):
    # With fewer than K points the farthest one is always a voter, so its
    # exact Shapley value is match/K; for N >= K this is the usual match/N.
    if method == "knn_shapley":
        return max(K, N)
    return L


def _values_from_order(order, train_y, y_v, K, L, base_div):
    order = np.atleast_2d(order)
    y_v = np.atleast_1d(y_v)
    match = np.asarray(train_y)[order] == y_v[:, None]
    ranked = _recursion(match, K, L, base_div)
    values = np.empty_like(ranked)
    np.put_along_axis(values, order, ranked, axis=1)
    return values


def knn_shapley(ranking: knn.NeighborRanking, train_labels, y_v, K=10) -> ValuationVector:
    """KNN-Shapley values for a single validation point, in training-id order."""
    N = len(ranking.order)
    if len(train_labels) != N:
        raise ValuationError("ranking does not cover the training set")
    vals = _values_from_order(ranking.order, train_labels, y_v, K, N, max(K, N))[0]
    return ValuationVector("knn_shapley", ValuationParams(K=K, T=0), vals)


def cknn_shapley(ranking: knn.NeighborRanking, train_labels, y_v, K=10, T=None) -> ValuationVector:
    """Calibrated KNN-Shapley: zero for the T farthest points, recursion restarted at N-T."""
    N = len(ranking.order)
    if len(train_labels) != N:
        raise ValuationError("ranking does not cover the training set")
    params = ValuationParams(K=K, T=T).resolve(N)
    L = N - params.T
    vals = _values_from_order(ranking.order, train_labels, y_v, K, L, L)[0]
    return ValuationVector("cknn_shapley", params, vals)


def value_single(train: Dataset, z_v, method="cknn_shapley", params=ValuationParams()):
    method = canonical_method(method)
    if method == "exact":
        return exact_shapley(train, z_v, params.K, params.metric, params.divisor)
    r = knn.rank_neighbors(train, z_v.features, params.metric)
    if method == "knn_shapley":
        v = knn_shapley(r, train.y, z_v.label, params.K)
        return replace(v, params=replace(params, T=0))
    v = cknn_shapley(r, train.y, z_v.label, params.K, params.T)
    return replace(v, params=replace(params, T=v.params.T))


# --------------------------------------------------------------------------
# Aggregation

def to_grid(values):
    """Round float values onto the int64 dyadic grid used for aggregation."""
    q = np.rint(np.asarray(values, dtype=np.float64) * _GRID)
    if q.size and np.max(np.abs(q)) >= 2.0 ** 62:
        raise ValuationError("valuation magnitude overflows the aggregation grid")
    return q.astype(np.int64)


def from_grid(q):
    return np.asarray(q, dtype=np.int64).astype(np.float64) / _GRID


def _chunk_grid_sum(train, Xv, yv, method, params, L):
    if method == "exact":
        total = np.zeros(len(train), dtype=np.int64)
        for x, y in zip(Xv, yv):
            z = Sample(0, x, int(y))
            total += to_grid(exact_shapley(train, z, params.K, params.metric, params.divisor).values)
        return total
    order, _ = knn.rank_matrix(train.X, Xv, params.metric)
    vals = _values_from_order(order, train.y, yv, params.K, L,
                              _base_divisor(method, len(train), params.K, L))
    return to_grid(vals).sum(axis=0)


def aggregate_over_validation(train: Dataset, val: Dataset, method="cknn_shapley",
                              params=ValuationParams(), threads=1, chunk_size=64,
                              normalize=False) -> ValuationVector:
    """Sum single-point valuations over every validation sample.

    Work is fanned out over ``threads`` workers in chunks of validation rows;
    the result does not depend on either setting.
    """
    method = canonical_method(method)
    if len(val) == 0:
        raise ValuationError("validation set is empty")
    if len(train) == 0:
        raise ValuationError("training set is empty")
    if val.dim != train.dim:
        raise DatasetError(f"validation dim {val.dim} != training dim {train.dim}")
    N = len(train)
    if method == "cknn_shapley":
        params = params.resolve(N)
        L = N - params.T
    else:
        params = replace(params, T=0)
        L = N
    bounds = list(range(0, len(val), max(1, chunk_size))) + [len(val)]
    jobs = [(val.X[a:b], val.y[a:b]) for a, b in zip(bounds[:-1], bounds[1:])]

    def work(job):
        return _chunk_grid_sum(train, job[0], job[1], method, params, L)

    total = np.zeros(N, dtype=np.int64)
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for part in pool.map(work, jobs):
                total += part
    else:
        for job in jobs:
            total += work(job)
    values = from_grid(total)
    if normalize:
        values = values / len(val)
    return ValuationVector(method, params, values, aggregation="summed",
                           n_validation=len(val), normalized=normalize)


# --------------------------------------------------------------------------
# Export

def export_csv(vec: ValuationVector, path, ids=None):
    ids = np.arange(len(vec)) if ids is None else ids
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("train_id,value\n")
        for i, v in zip(ids, vec.values):
            fh.write(f"{int(i)},{format(float(v), '.17g')}\n")


def load_csv_values(path) -> np.ndarray:
    data = np.genfromtxt(path, delimiter=",", skip_header=1, ndmin=2)
    order = np.argsort(data[:, 0], kind="stable")
    return data[order, 1]
