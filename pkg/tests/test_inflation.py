import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shapcal.dataset import Dataset, DatasetError
from shapcal.inflation import (NO_DETRIMENTAL_BOUNDARY, NO_ZERO_CROSSING, OK, RemovalCurve,
                               bin_removal_curve, export_curve_csv, inflation_metrics,
                               segment_bins)
from shapcal.pipelines import blob_task
from shapcal.valuation import ValuationParams, aggregate_over_validation


def seg_for(bin_values, per_bin=2):
    """Segmentation whose bins hold ``per_bin`` copies of each given value."""
    v = np.repeat(np.asarray(bin_values, dtype=float), per_bin)
    return segment_bins(v, len(bin_values))


def test_segment_bins_sizes_and_edges():
    seg = segment_bins(np.arange(7.0)[::-1], 3)
    assert seg.sizes.tolist() == [3, 2, 2]
    assert seg.bin_value.tolist() == [2.0, 4.0, 6.0]
    assert seg.members(0).tolist() == [4, 5, 6]
    with pytest.raises(ValueError):
        segment_bins([1.0, 2.0], 3)
    with pytest.raises(ValueError):
        segment_bins([1.0], 0)


def test_segment_bins_ties_broken_by_id():
    seg = segment_bins([0.0, 0.0, 0.0, 0.0], 2)
    assert seg.assignment.tolist() == [0, 0, 1, 1]


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 300), data=st.data())
def test_segment_bins_partition_property(seed, n, data):
    B = data.draw(st.integers(1, n))
    v = np.random.default_rng(seed).normal(size=n).round(1)
    seg = segment_bins(v, B)
    sizes = seg.sizes
    assert sizes.sum() == n and sizes.max() - sizes.min() <= 1
    assert np.all(np.diff(seg.bin_value) >= 0)
    for j in range(B):
        assert seg.bin_value[j] == v[seg.members(j)].max()
    # increasing sign-preserving transform keeps the assignment
    assert np.array_equal(segment_bins(v ** 3 * 2, B).assignment, seg.assignment)


def test_metrics_calibrated_ideal_gives_r_zero():
    m = 4
    vals = [-4, -3, -2, -1, 1, 2, 3, 4]
    seg = seg_for(vals)
    p = np.array([0.9, 0.9, 0.9, 0.85, 0.82, 0.8, 0.8, 0.8])
    rep = inflation_metrics(RemovalCurve(0.86, p), seg)
    assert rep.status == OK and rep.j_star == m and rep.i_star == m
    assert rep.r == 0.0 and rep.t == -1.0 == seg.bin_value[m - 1]


def test_metrics_hand_arithmetic_case():
    vals = [-3, -2, -1, 0.5, 0.7, 1, 2, 3]
    seg = seg_for(vals)
    p = np.array([0.9, 0.9, 0.9, 0.9, 0.7, 0.7, 0.9, 0.9])
    rep = inflation_metrics(RemovalCurve(0.8, p), seg)
    assert (rep.j_star, rep.i_star) == (5, 3)
    assert rep.r == pytest.approx(0.4, abs=1e-15) and rep.t == 0.7


def test_metrics_degenerate_curves():
    seg = seg_for([-1, 1, 2, 3])
    rep = inflation_metrics(RemovalCurve(0.8, np.array([0.9, 0.8, 0.85, 0.8])), seg)
    assert rep.status == NO_DETRIMENTAL_BOUNDARY and rep.t is None and rep.r is None
    # a single sub-baseline bin is not enough
    rep = inflation_metrics(RemovalCurve(0.8, np.array([0.9, 0.7, 0.9, 0.7])), seg)
    assert rep.status == NO_DETRIMENTAL_BOUNDARY
    rep = inflation_metrics(RemovalCurve(0.8, np.array([0.9, 0.9, 0.7, 0.7])), seg_for([1, 2, 3, 4]))
    assert rep.status == NO_ZERO_CROSSING and rep.i_star == 0 and rep.r == 1.0 and rep.j_star == 3
    with pytest.raises(ValueError):
        inflation_metrics(RemovalCurve(0.8, np.array([0.9])), seg_for([1]))


def test_metrics_clamp_when_nonpositive_past_boundary():
    seg = seg_for([-3, -2, -1, -0.5, 0, 1])
    rep = inflation_metrics(RemovalCurve(0.8, np.array([0.9, 0.7, 0.7, 0.9, 0.9, 0.9])), seg)
    assert rep.j_star == 2 and rep.i_star == 2 and rep.r == 0.0
    assert rep.zero_crossing_bin == 5


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), B=st.integers(2, 20))
def test_metrics_invariants(seed, B):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=B * 3)
    seg = segment_bins(v, B)
    curve = RemovalCurve(0.5, rng.choice([0.4, 0.5, 0.6], size=B))
    rep = inflation_metrics(curve, seg)
    if rep.status == OK:
        assert 0.0 <= rep.r <= 1.0
        assert (rep.r == 0.0) == (rep.i_star == rep.j_star)
        # strictly increasing, sign preserving transform leaves indices alone
        rep2 = inflation_metrics(curve, segment_bins(np.sinh(v) * 5, B))
        assert (rep2.j_star, rep2.i_star, rep2.r) == (rep.j_star, rep.i_star, rep.r)
        assert rep2.t == pytest.approx(np.sinh(rep.t) * 5)


def test_bin_removal_curve_matches_fresh_accuracy():
    rng = np.random.default_rng(2)
    train = Dataset(rng.normal(size=(40, 2)), rng.integers(0, 2, 40), 2)
    ev = Dataset(rng.normal(size=(15, 2)), rng.integers(0, 2, 15), 2)
    seg = segment_bins(rng.normal(size=40), 5)
    from shapcal import knn
    curve = bin_removal_curve(train, ev, seg, K=3)
    assert curve.p0 == knn.accuracy(train, ev, 3)
    for j in range(5):
        keep = np.flatnonzero(seg.assignment != j)
        assert curve.p[j] == knn.accuracy(train.subset(keep), ev, 3)
    again = bin_removal_curve(train, ev, seg, K=3, threads=4)
    assert np.array_equal(again.p, curve.p)
    with pytest.raises(DatasetError):
        bin_removal_curve(train, ev, segment_bins(rng.normal(size=40), 1), K=3)


def test_blob_lowest_bin_is_detrimental_pinned(tmp_path):
    # pinned from a seeded run
    task = blob_task(seed=0)
    vec = aggregate_over_validation(task.train, task.val, "cknn", ValuationParams(K=10))
    seg = segment_bins(vec.values, 20)
    curve = bin_removal_curve(task.train, task.val, seg, K=10)
    assert curve.p0 == 0.91 and curve.p[0] == 0.95 and curve.p[0] > curve.p0
    rep = inflation_metrics(curve, seg)
    assert rep.status == OK and (rep.j_star, rep.i_star) == (15, 8)
    assert rep.r == 7 / 15 and rep.t == 0.1326168714326741
    export_curve_csv(curve, seg, tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "bin,p,value" and lines[1] == "0,0.91000000000000003,"
    assert len(lines) == 22
