from fractions import Fraction
from itertools import combinations
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import line_instance, random_instance
from shapcal import knn
from shapcal.dataset import Dataset, DatasetError, Sample
from shapcal.valuation import (ValuationError, ValuationParams, aggregate_over_validation,
                               cknn_shapley, exact_shapley, export_csv, from_grid, knn_shapley,
                               load_csv_values, to_grid, utility_knn, value_single)


def ranked(train, z):
    return knn.rank_neighbors(train, z.features)


def fraction_shapley(labels, y_v, K):
    """Rational-arithmetic Shapley values for points already in rank order."""
    N = len(labels)

    def U(S):
        top = sorted(S)[:K]
        return Fraction(sum(labels[i] == y_v for i in top), K)

    out = []
    for i in range(N):
        rest = [j for j in range(N) if j != i]
        tot = Fraction(0)
        for s in range(N):
            for S in combinations(rest, s):
                tot += (U(S + (i,)) - U(S)) / comb(N - 1, s)
        out.append(tot / N)
    return out


# --- utility ---------------------------------------------------------------

def test_utility_examples():
    train, z = line_instance([0, 1, 0])
    assert utility_knn(set(), train, z, 1) == 0.0
    assert utility_knn({0}, train, z, 1) == 1.0
    assert utility_knn({0, 1}, train, z, 3) == pytest.approx(1 / 3)
    assert utility_knn({0, 1}, train, z, 3, divisor="subset") == pytest.approx(1 / 2)
    with pytest.raises(ValuationError):
        utility_knn({5}, train, z, 1)


# --- exact oracle ----------------------------------------------------------

def test_exact_examples():
    train, z = line_instance([0])
    assert exact_shapley(train, z, 1).values.tolist() == [1.0]
    train, z = line_instance([0, 1, 0])
    assert exact_shapley(train, z, 1).values == pytest.approx([5 / 6, -1 / 6, 1 / 3], abs=1e-15)
    train, z = line_instance([0] * 6)
    for K in range(1, 7):
        assert exact_shapley(train, z, K).values == pytest.approx([1 / 6] * 6, abs=1e-15)


def test_exact_matches_rational_enumeration():
    labels = [0, 1, 0, 0, 1, 1, 0]
    train, z = line_instance(labels)
    for K in (1, 2, 3, 5, 9):
        want = [float(f) for f in fraction_shapley(labels, 0, K)]
        assert exact_shapley(train, z, K).values == pytest.approx(want, abs=1e-14)


def test_exact_cap():
    train, z = line_instance([0] * 17)
    with pytest.raises(ValuationError, match="cap"):
        exact_shapley(train, z, 1)


# --- recursions ------------------------------------------------------------

def test_knn_shapley_worked_examples():
    train, z = line_instance([0, 1, 0])
    assert knn_shapley(ranked(train, z), train.y, 0, 1).values == pytest.approx(
        [5 / 6, -1 / 6, 1 / 3], abs=1e-12)
    train, z = line_instance([0, 1, 0, 0, 1])
    v = knn_shapley(ranked(train, z), train.y, 0, 1).values
    assert v == pytest.approx([3 / 4, -1 / 4, 1 / 4, 1 / 4, 0], abs=1e-12)
    assert v == pytest.approx(exact_shapley(train, z, 1).values, abs=1e-12)
    train, z = line_instance([1] * 4)
    assert knn_shapley(ranked(train, z), train.y, 1, 2).values.tolist() == [0.25] * 4


def test_cknn_worked_examples():
    train, z = line_instance([0, 1, 0, 0, 1])
    v = cknn_shapley(ranked(train, z), train.y, 0, 1, 2)
    assert v.values == pytest.approx([5 / 6, -1 / 6, 1 / 3, 0, 0], abs=1e-12)
    assert v.params.T == 2
    # same numbers as exact Shapley on the 3 nearest points
    sub = train.subset([0, 1, 2])
    assert v.values[:3] == pytest.approx(exact_shapley(sub, z, 1).values, abs=1e-12)
    train, z = line_instance([0] * 5)
    v = cknn_shapley(ranked(train, z), train.y, 0, 1, 2).values
    assert v == pytest.approx([1 / 3, 1 / 3, 1 / 3, 0, 0], abs=1e-15)
    assert sum(v) == pytest.approx(1.0, abs=1e-15)


def test_cknn_default_t_and_range():
    train, z = line_instance([0, 1] * 15)
    v = cknn_shapley(ranked(train, z), train.y, 0, K=10)
    assert v.params.T == 10
    assert np.count_nonzero(v.values[20:]) == 0
    assert cknn_shapley(ranked(train, z), train.y, 0, K=20).params.T == 0
    for bad in (-1, 30):
        with pytest.raises(ValuationError):
            cknn_shapley(ranked(train, z), train.y, 0, 1, bad)


def test_values_reported_in_training_id_order():
    X = np.array([[3.0], [0.0], [2.0], [1.0]])
    train = Dataset(X, [0, 0, 1, 0], 2)
    z = Sample(0, np.array([-1.0]), 0)
    v = knn_shapley(ranked(train, z), train.y, 0, 1).values
    line, zl = line_instance([0, 0, 1, 0])
    w = knn_shapley(ranked(line, zl), line.y, 0, 1).values
    assert v.tolist() == [w[3], w[0], w[2], w[1]]


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 10), K=st.integers(1, 6),
       C=st.integers(2, 3))
def test_knn_shapley_equals_oracle_property(seed, n, K, C):
    rng = np.random.default_rng(seed)
    train, z = random_instance(rng, n, C)
    ex = exact_shapley(train, z, K).values
    assert np.max(np.abs(value_single(train, z, "knn", ValuationParams(K=K)).values - ex)) <= 1e-9


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 11), K=st.integers(1, 4),
       data=st.data())
def test_cknn_equals_restricted_game_when_enough_points(seed, n, K, data):
    T = data.draw(st.integers(0, max(0, n - K)))
    if n - T < K:
        return
    rng = np.random.default_rng(seed)
    train, z = random_instance(rng, n)
    r = ranked(train, z)
    v = cknn_shapley(r, train.y, z.label, K, T).values
    near = r.order[: n - T]
    ex = exact_shapley(train.subset(near), z, K).values
    assert np.max(np.abs(v[near] - ex)) <= 1e-12
    assert np.all(v[r.order[n - T:]] == 0.0)
    total = utility_knn(set(near.tolist()), train, z, K)
    assert abs(v.sum() - total) <= 1e-12


def test_divisor_subset_is_not_the_recursion():
    # the |S| divisor convention disagrees with the recursion, which is why "k" is the default
    rng = np.random.default_rng(0)
    diffs = 0
    for _ in range(20):
        train, z = random_instance(rng, 6)
        a = exact_shapley(train, z, 3, divisor="subset").values
        b = knn_shapley(ranked(train, z), train.y, z.label, 3).values
        diffs += np.max(np.abs(a - b)) > 1e-9
    assert diffs > 10


def test_small_n_literal_base_diverges_from_oracle():
    # with N < K the farthest point always votes, so its value is 1/K not 1/N
    train, z = line_instance([0, 1, 1, 0])
    ex = exact_shapley(train, z, 5).values
    v = knn_shapley(ranked(train, z), train.y, 0, 5).values
    assert v == pytest.approx(ex, abs=1e-12)
    assert ex[3] == pytest.approx(1 / 5)
    c = cknn_shapley(ranked(train, z), train.y, 0, 5, 0).values
    assert c[3] == 1 / 4
    assert not np.allclose(c, ex)


def test_value_single_dispatch_and_params():
    train, z = line_instance([0, 1, 0, 0, 1])
    p = ValuationParams(K=1, T=2)
    assert value_single(train, z, "cknn", p).params.T == 2
    assert value_single(train, z, "knn", p).params.T == 0
    assert value_single(train, z, "exact", p).method == "exact"
    with pytest.raises(ValuationError):
        value_single(train, z, "tknn", p)
    with pytest.raises(ValuationError):
        ValuationParams(K=0)


# --- aggregation -----------------------------------------------------------

def test_grid_roundtrip():
    v = np.array([0.0, 1.0, -0.5, 1 / 3])
    assert np.max(np.abs(from_grid(to_grid(v)) - v)) <= 2.0 ** -45
    with pytest.raises(ValuationError):
        to_grid([1e6])


def test_aggregate_single_point_and_duplicates():
    rng = np.random.default_rng(4)
    train, z = random_instance(rng, 12)
    val1 = Dataset(z.features[None], [z.label], 2)
    single = value_single(train, z, "cknn", ValuationParams(K=3)).values
    agg = aggregate_over_validation(train, val1, "cknn", ValuationParams(K=3))
    assert agg.aggregation == "summed" and agg.n_validation == 1
    assert np.max(np.abs(agg.values - single)) <= 2.0 ** -45
    val2 = Dataset.concat([val1, val1])
    agg2 = aggregate_over_validation(train, val2, "cknn", ValuationParams(K=3))
    assert np.array_equal(agg2.values, 2 * agg.values)


def test_aggregate_matches_sum_of_exact():
    rng = np.random.default_rng(5)
    train, _ = random_instance(rng, 10)
    val = Dataset(rng.normal(size=(3, 2)), rng.integers(0, 2, 3), 2)
    agg = aggregate_over_validation(train, val, "knn", ValuationParams(K=3)).values
    ex = sum(exact_shapley(train, Sample(0, x, int(y)), 3).values for x, y in zip(val.X, val.y))
    assert np.max(np.abs(agg - ex)) <= 1e-9
    ex_agg = aggregate_over_validation(train, val, "exact", ValuationParams(K=3)).values
    assert np.max(np.abs(ex_agg - ex)) <= 1e-12


def test_aggregate_independent_of_threads_and_chunks():
    rng = np.random.default_rng(6)
    train = Dataset(rng.normal(size=(300, 3)), rng.integers(0, 3, 300), 3)
    val = Dataset(rng.normal(size=(97, 3)), rng.integers(0, 3, 97), 3)
    ref = aggregate_over_validation(train, val, "cknn", threads=1, chunk_size=97).values
    for threads, cs in ((1, 1), (4, 7), (8, 64), (3, 1000)):
        got = aggregate_over_validation(train, val, "cknn", threads=threads, chunk_size=cs)
        assert got.values.tobytes() == ref.tobytes()


def test_aggregate_normalize_and_errors():
    rng = np.random.default_rng(7)
    train = Dataset(rng.normal(size=(20, 2)), rng.integers(0, 2, 20), 2)
    val = Dataset(rng.normal(size=(4, 2)), rng.integers(0, 2, 4), 2)
    s = aggregate_over_validation(train, val, "knn", ValuationParams(K=2))
    m = aggregate_over_validation(train, val, "knn", ValuationParams(K=2), normalize=True)
    assert np.array_equal(m.values, s.values / 4) and m.normalized
    with pytest.raises(ValuationError):
        aggregate_over_validation(train, Dataset(np.zeros((0, 2)), [], 2), "knn")
    with pytest.raises(DatasetError):
        aggregate_over_validation(train, Dataset(np.zeros((1, 3)), [0], 2), "knn")


def test_export_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(8)
    train = Dataset(rng.normal(size=(15, 2)), rng.integers(0, 2, 15), 2)
    val = Dataset(rng.normal(size=(5, 2)), rng.integers(0, 2, 5), 2)
    vec = aggregate_over_validation(train, val, "cknn", ValuationParams(K=3))
    export_csv(vec, tmp_path / "v.csv")
    assert np.array_equal(load_csv_values(tmp_path / "v.csv"), vec.values)
    d = vec.as_dict()
    assert d["method"] == "cknn_shapley" and d["params"]["T"] == 9


def test_cknn_cutoff_splits_tied_twins_by_id():
    # identical points at ranks L-1 and L: the lower id keeps the base term, the other is cut
    X = np.array([[0.0], [1.0], [1.0]])
    train = Dataset(X, [1, 0, 0], 2)
    z = Sample(0, np.array([0.0]), 0)
    v = cknn_shapley(knn.rank_neighbors(train, z.features), train.y, 0, 1, 1).values
    assert v[1] == 0.5 and v[2] == 0.0
    w = knn_shapley(knn.rank_neighbors(train, z.features), train.y, 0, 1).values
    assert w[1] == w[2]
