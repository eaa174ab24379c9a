import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from funclingam.dependence import hsic, hsic_pvalue, median_bandwidth
from funclingam.exceptions import DegenerateDataError, InvalidArgumentError


def trace_oracle(X, Y, sx, sy):
    """(1/n^2) tr(K H L H) with explicitly looped Gaussian kernels."""
    X = np.asarray(X, float).reshape(len(X), -1)
    Y = np.asarray(Y, float).reshape(len(Y), -1)
    n = len(X)
    K = np.empty((n, n))
    L = np.empty((n, n))
    for a in range(n):
        for b in range(n):
            K[a, b] = math.exp(-np.sum((X[a] - X[b]) ** 2) / (2 * sx * sx))
            L[a, b] = math.exp(-np.sum((Y[a] - Y[b]) ** 2) / (2 * sy * sy))
    H = np.eye(n) - np.ones((n, n)) / n
    return np.trace(K @ H @ L @ H) / n**2


def median_oracle(X):
    X = np.asarray(X, float).reshape(len(X), -1)
    d = [np.linalg.norm(X[a] - X[b]) for a in range(len(X)) for b in range(a + 1, len(X))]
    return float(np.median(d))


class TestBandwidth:
    def test_one_pair(self):
        assert median_bandwidth([0.0, 1.0]) == 1.0

    def test_three_points(self):
        assert median_bandwidth([0.0, 1.0, 2.0]) == 1.0

    def test_normal_5d(self):
        X = np.random.default_rng(3).normal(size=(100, 5))
        assert 2.5 <= median_bandwidth(X) <= 3.5

    def test_identical_rows(self):
        with pytest.raises(DegenerateDataError):
            median_bandwidth(np.ones((5, 2)))


class TestHsic:
    def test_constant_y(self, rng):
        X = rng.normal(size=(20, 3))
        assert hsic(X, np.full((20, 2), 4.0)).value == pytest.approx(0.0, abs=1e-12)

    def test_four_point_hand_case(self):
        x = np.array([0.0, 1.0, 2.0, 3.0])
        stat = hsic(x, x, bandwidths=(1.0, 1.0))
        assert stat.value == pytest.approx(trace_oracle(x, x, 1.0, 1.0), abs=1e-14)
        assert stat.bandwidths == (1.0, 1.0)

    @pytest.mark.parametrize("seed", range(10))
    def test_trace_formula_small_instances(self, seed):
        r = np.random.default_rng(seed)
        n = 4 + seed % 7
        X = r.normal(size=(n, 1 + seed % 3))
        Y = X[:, :1] ** 2 + r.normal(size=(n, 2))
        stat = hsic(X, Y)
        oracle = trace_oracle(X, Y, median_oracle(X), median_oracle(Y))
        assert abs(stat.value - oracle) <= 1e-10

    def test_independent_below_permutation_null(self):
        r = np.random.default_rng(7)
        X, Y = r.normal(size=(500, 5)), r.normal(size=(500, 5))
        value = hsic(X, Y).value
        null = [hsic(X, Y[r.permutation(500)]).value for _ in range(40)]
        assert value <= 5 * np.quantile(null, 0.95)

    def test_row_mismatch(self, rng):
        with pytest.raises(InvalidArgumentError):
            hsic(rng.normal(size=(10, 2)), rng.normal(size=(11, 2)))

    def test_too_few_rows(self):
        with pytest.raises(InvalidArgumentError):
            hsic(np.arange(3.0), np.arange(3.0))

    def test_subsample_is_seeded(self, rng):
        X = rng.normal(size=(60, 2))
        Y = X + rng.normal(size=(60, 2))
        a = hsic(X, Y, subsample=30, seed=1).value
        assert a == hsic(X, Y, subsample=30, seed=1).value
        assert a != hsic(X, Y, subsample=None).value


class TestPvalue:
    def test_dependent(self, rng):
        X = rng.normal(size=(200, 2))
        assert hsic_pvalue(X, X, B=199, seed=0) <= 0.02

    def test_deterministic(self, rng):
        X, Y = rng.normal(size=(50, 2)), rng.normal(size=(50, 1))
        assert hsic_pvalue(X, Y, B=99, seed=5) == hsic_pvalue(X, Y, B=99, seed=5)

    def test_matches_explicit_permutation_oracle(self, rng):
        X, Y = rng.normal(size=(30, 2)), rng.normal(size=(30, 1))
        B, seed = 60, 9
        obs = trace_oracle(X, Y, median_oracle(X), median_oracle(Y))
        gen = np.random.default_rng(seed)
        count = 0
        for _ in range(B):
            perm = gen.permutation(30)
            # bandwidth is permutation invariant, so reuse it
            count += trace_oracle(X, Y[perm], median_oracle(X), median_oracle(Y)) >= obs - 1e-12 * obs
        assert hsic_pvalue(X, Y, B=B, seed=seed) == (1 + count) / (B + 1)

    def test_minimum_permutations(self, rng):
        with pytest.raises(InvalidArgumentError):
            hsic_pvalue(rng.normal(size=(10, 1)), rng.normal(size=(10, 1)), B=10)

    @pytest.mark.slow
    def test_type_one_error(self):
        r = np.random.default_rng(2024)
        rejections = 0
        for rep in range(200):
            X, Y = r.normal(size=(60, 2)), r.normal(size=(60, 2))
            rejections += hsic_pvalue(X, Y, B=99, seed=rep) <= 0.05
        assert 0.02 <= rejections / 200 <= 0.10


finite = st.floats(-50, 50, allow_nan=False, width=64)


@settings(max_examples=40, deadline=None)
@given(
    X=arrays(np.float64, (12, 2), elements=finite),
    Y=arrays(np.float64, (12, 3), elements=finite),
    seed=st.integers(0, 1000),
)
def test_symmetry_nonnegativity_permutation(X, Y, seed):
    if len({tuple(r) for r in X}) < 2 or len({tuple(r) for r in Y}) < 2:
        return
    a = hsic(X, Y).value
    assert a >= -1e-12
    assert abs(a - hsic(Y, X).value) <= 1e-12
    perm = np.random.default_rng(seed).permutation(12)
    assert abs(a - hsic(X[perm], Y[perm]).value) <= 1e-12


def test_underflowing_distances_count_as_constant():
    X = np.arange(24.0).reshape(12, 2)
    Y = np.zeros((12, 3))
    Y[0, 0] = 2.2250738585072014e-308
    assert hsic(X, Y).value == 0.0
    assert hsic(Y, X).value == 0.0
    assert hsic_pvalue(X, Y, B=50) == 1.0
