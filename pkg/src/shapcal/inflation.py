"""Value-inflation diagnostics.

Training samples are cut into equal-size bins by ascending valuation, each
bin is removed in turn to see whether KNN accuracy improves, and the first
stretch of harmful bins is compared with the sign of the valuations:

    j* = first bin j with p_j < p_0 and p_{j+1} < p_0
    i* = last bin whose (right-edge) value is <= 0
    t  = value of bin j*,    r = (j* - i*) / j*

Bin indices in reports are 1-based.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import knn
from .dataset import Dataset, DatasetError

OK = "ok"
NO_DETRIMENTAL_BOUNDARY = "no_detrimental_boundary"
NO_ZERO_CROSSING = "no_zero_crossing"


@dataclass(frozen=True, eq=False)
class BinSegmentation:
    num_bins: int
    assignment: np.ndarray
    bin_value: np.ndarray

    def members(self, j):
        """Training ids in 0-based bin ``j``."""
        return np.flatnonzero(self.assignment == j)

    @property
    def sizes(self):
        return np.bincount(self.assignment, minlength=self.num_bins)


@dataclass(frozen=True, eq=False)
class RemovalCurve:
    p0: float
    p: np.ndarray
    eval_name: str = "validation"


@dataclass(frozen=True)
class InflationReport:
    status: str
    num_bins: int
    p0: float
    t: float | None = None
    r: float | None = None
    j_star: int | None = None
    i_star: int | None = None
    zero_crossing_bin: int | None = None

    def as_dict(self):
        return {k: getattr(self, k) for k in
                ("status", "num_bins", "p0", "t", "r", "j_star", "i_star", "zero_crossing_bin")}


def segment_bins(values, num_bins=100) -> BinSegmentation:
    """Equal-size bins over samples sorted by (value, id).

    The first ``N mod B`` bins hold one extra sample. A bin's value is the
    largest valuation inside it.
    """
    v = np.asarray(getattr(values, "values", values), dtype=np.float64)
    N = len(v)
    if num_bins < 1 or num_bins > N:
        raise ValueError(f"need 1 <= bins <= N, got bins={num_bins}, N={N}")
    order = np.argsort(v, kind="stable")
    base, extra = divmod(N, num_bins)
    sizes = np.full(num_bins, base)
    sizes[:extra] += 1
    ranked_bin = np.repeat(np.arange(num_bins), sizes)
    assignment = np.empty(N, dtype=np.int64)
    assignment[order] = ranked_bin
    edges = np.cumsum(sizes) - 1
    bin_value = v[order][edges]
    return BinSegmentation(num_bins, assignment, bin_value)


def bin_removal_curve(train: Dataset, eval_set: Dataset, seg: BinSegmentation, K=10,
                      metric="euclidean", threads=1, eval_name="validation") -> RemovalCurve:
    """KNN accuracy on ``eval_set`` with the full training set and with each bin dropped."""
    if len(eval_set) == 0:
        raise DatasetError("evaluation set is empty")
    if len(seg.assignment) != len(train):
        raise DatasetError("segmentation does not match the training set")
    order, _ = knn.rank_matrix(train.X, eval_set.X, metric)
    C = max(train.num_classes, eval_set.num_classes)

    def acc(keep):
        pred = knn.predict_from_ranking(order, train.y, K, C, keep=keep)
        return float(np.count_nonzero(pred == eval_set.y)) / len(eval_set)

    for j in range(seg.num_bins):
        if np.all(seg.assignment == j):
            raise DatasetError(f"removing bin {j + 1} empties the training set")
    masks = [seg.assignment != j for j in range(seg.num_bins)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            p = list(pool.map(acc, masks))
    else:
        p = [acc(m) for m in masks]
    return RemovalCurve(acc(None), np.array(p), eval_name)


def inflation_metrics(curve: RemovalCurve, seg: BinSegmentation) -> InflationReport:
    p, p0 = np.asarray(curve.p), curve.p0
    B = len(p)
    if B < 2 or B != seg.num_bins:
        raise ValueError("curve needs at least 2 bins and must match the segmentation")
    below = p < p0
    hits = np.flatnonzero(below[:-1] & below[1:])
    if len(hits) == 0:
        return InflationReport(NO_DETRIMENTAL_BOUNDARY, B, float(p0))
    j_star = int(hits[0]) + 1
    t = float(seg.bin_value[j_star - 1])
    nonpos = np.flatnonzero(seg.bin_value <= 0)
    if len(nonpos) == 0:
        return InflationReport(NO_ZERO_CROSSING, B, float(p0), t=t, r=1.0,
                               j_star=j_star, i_star=0, zero_crossing_bin=0)
    crossing = int(nonpos[-1]) + 1
    # more non-positive bins than harmful ones means nothing harmful was missed
    i_star = min(crossing, j_star)
    r = (j_star - i_star) / j_star
    return InflationReport(OK, B, float(p0), t=t, r=r, j_star=j_star, i_star=i_star,
                           zero_crossing_bin=crossing)


def export_curve_csv(curve: RemovalCurve, seg: BinSegmentation, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("bin,p,value\n")
        fh.write(f"0,{format(curve.p0, '.17g')},\n")
        for j, (pj, vj) in enumerate(zip(curve.p, seg.bin_value), start=1):
            fh.write(f"{j},{format(float(pj), '.17g')},{format(float(vj), '.17g')}\n")
