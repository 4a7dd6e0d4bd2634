"""Statistical toolkit vs scipy oracles, plus the frozen hand anchors."""

import math

import numpy as np
import pytest
import scipy.stats as ss
from hypothesis import given, settings
from hypothesis import strategies as st

from morphoplast.stats import (
    bootstrap_ci,
    cohens_d,
    kruskal_wallis_eps2,
    mann_whitney_u,
    rankdata,
    sign_test_binomial,
    spearman_rho,
    wilcoxon_signed,
)

finite_floats = st.floats(-50, 50, allow_nan=False)


# --- hand anchors ---------------------------------------------------------------

def test_sign_test_anchors():
    assert sign_test_binomial(21, 30) == pytest.approx(0.043, abs=1e-3)
    assert sign_test_binomial(18, 30) == pytest.approx(0.36, abs=1e-2)
    assert sign_test_binomial(15, 30) == 1.0


def test_cohens_d_anchors():
    assert cohens_d([2, 4], [0, 2]) == pytest.approx(1.4142, abs=1e-4)
    assert cohens_d([1, 2, 3], [1, 2, 3]) == 0.0
    assert cohens_d([1.0, 3.0], [0.0, 4.0]) == 0.0  # equal means, unequal spread
    assert math.isnan(cohens_d([5, 5], [5, 5]))  # zero pooled variance


def test_mann_whitney_anchor():
    result = mann_whitney_u([1, 2], [3, 4])
    assert result.statistic == 0.0
    assert result.p_value == pytest.approx(1.0 / 3.0, abs=1e-6)
    assert result.method == "exact"


def test_mann_whitney_identical_groups():
    result = mann_whitney_u([1, 2, 3], [1, 2, 3])
    assert result.statistic == 4.5  # n*n/2
    assert result.p_value > 0.9


def test_wilcoxon_anchor():
    result = wilcoxon_signed([-1.0, -1.0, -1.0])
    assert result.statistic == 0.0
    assert result.p_value == pytest.approx(0.25, abs=1e-6)
    assert result.method == "exact"


def test_wilcoxon_symmetric_pair():
    assert wilcoxon_signed([-1.0, 1.0]).p_value == 1.0


def test_wilcoxon_all_zero_flagged():
    result = wilcoxon_signed([0.0, 0.0])
    assert result.method == "undefined"
    assert math.isnan(result.p_value)


def test_spearman_anchors():
    assert spearman_rho([1, 2, 3], [10, 20, 30]) == 1.0
    assert spearman_rho([1, 2, 3], [3, 1, 0]) == -1.0
    assert spearman_rho([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8)
    assert math.isnan(spearman_rho([1, 1, 1], [1, 2, 3]))


def test_kruskal_identical_groups_zero():
    h, eps = kruskal_wallis_eps2([[2, 2], [2, 2, 2]])
    assert h == 0.0 and eps == 0.0


def test_kruskal_small_fixture_matches_oracle():
    h, eps = kruskal_wallis_eps2([[1, 2], [3, 4]])
    oracle_h = ss.kruskal([1, 2], [3, 4]).statistic
    assert h == pytest.approx(oracle_h, abs=1e-12)
    assert eps == pytest.approx(oracle_h / 3.0, abs=1e-12)


def test_kruskal_large_shift_saturates_eps2():
    h, eps = kruskal_wallis_eps2([[1, 2, 3, 4], [1001, 1002, 1003, 1004]])
    assert eps > 0.75  # near the maximum for N=8, two groups


# --- scipy agreement on random data ------------------------------------------------

@pytest.mark.parametrize("seed", range(5))
def test_mann_whitney_matches_scipy_exact(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(0, 1, rng.integers(2, 9))
    b = rng.normal(0.4, 1, rng.integers(2, 9))
    mine = mann_whitney_u(a, b)
    oracle = ss.mannwhitneyu(a, b, alternative="two-sided", method="exact")
    assert mine.statistic == oracle.statistic
    assert mine.p_value == pytest.approx(oracle.pvalue, abs=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_mann_whitney_matches_scipy_asymptotic(seed):
    rng = np.random.default_rng(100 + seed)
    a = np.round(rng.normal(0, 1, 30), 1)  # rounding forces ties
    b = np.round(rng.normal(0.3, 1, 24), 1)
    mine = mann_whitney_u(a, b)
    oracle = ss.mannwhitneyu(a, b, alternative="two-sided", method="asymptotic")
    assert mine.method == "normal"
    assert mine.p_value == pytest.approx(oracle.pvalue, abs=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_wilcoxon_matches_scipy_exact(seed):
    rng = np.random.default_rng(200 + seed)
    d = rng.normal(0.3, 1, 15)
    mine = wilcoxon_signed(d)
    oracle = ss.wilcoxon(d, alternative="two-sided", method="exact")
    assert mine.p_value == pytest.approx(oracle.pvalue, abs=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_wilcoxon_matches_scipy_approx(seed):
    rng = np.random.default_rng(300 + seed)
    d = rng.normal(0.1, 1, 60)
    mine = wilcoxon_signed(d)
    oracle = ss.wilcoxon(d, alternative="two-sided", correction=False, method="approx")
    assert mine.method == "normal"
    assert mine.p_value == pytest.approx(oracle.pvalue, abs=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_kruskal_matches_scipy(seed):
    rng = np.random.default_rng(400 + seed)
    groups = [np.round(rng.normal(i * 0.4, 1, 12), 1) for i in range(3)]
    h, eps = kruskal_wallis_eps2(groups)
    oracle = ss.kruskal(*groups).statistic
    assert h == pytest.approx(oracle, abs=1e-9)
    assert eps == pytest.approx(oracle / (36 - 1), abs=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_spearman_matches_scipy(seed):
    rng = np.random.default_rng(500 + seed)
    x = rng.normal(0, 1, 40)
    y = x + rng.normal(0, 1.5, 40)
    assert spearman_rho(x, y) == pytest.approx(ss.spearmanr(x, y).statistic, abs=1e-9)


def test_rankdata_matches_scipy():
    vals = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0]
    np.testing.assert_allclose(rankdata(vals), ss.rankdata(vals))


# --- properties --------------------------------------------------------------------

@given(
    a=st.lists(finite_floats, min_size=2, max_size=20),
    b=st.lists(finite_floats, min_size=2, max_size=20),
)
@settings(max_examples=60, deadline=None)
def test_cohens_d_antisymmetry(a, b):
    d_ab = cohens_d(a, b)
    d_ba = cohens_d(b, a)
    if math.isnan(d_ab):
        assert math.isnan(d_ba)
    else:
        assert d_ab == pytest.approx(-d_ba, abs=1e-9)


@given(k=st.integers(0, 40), n=st.integers(1, 40))
def test_sign_test_symmetry(k, n):
    if k > n:
        return
    assert sign_test_binomial(k, n) == pytest.approx(sign_test_binomial(n - k, n), abs=1e-12)


@given(st.lists(st.integers(-5000, 5000), min_size=3, max_size=15, unique=True))
@settings(max_examples=40, deadline=None)
def test_rank_tests_invariant_under_monotone_transform(raw):
    # Spaced values keep the float transform strictly monotone.
    values = [v / 1000.0 for v in raw]
    half = len(values) // 2
    a, b = values[:half], values[half:]
    if not a or not b:
        return
    transform = lambda xs: [math.exp(0.1 * x) + 3.0 for x in xs]
    base = mann_whitney_u(a, b)
    mapped = mann_whitney_u(transform(a), transform(b))
    assert base.statistic == mapped.statistic
    assert base.p_value == pytest.approx(mapped.p_value, abs=1e-9)


@given(st.permutations(list(range(8))))
@settings(max_examples=25, deadline=None)
def test_relabeling_within_groups_irrelevant(perm):
    a = [0.5, 1.5, 2.5, 3.0, 7.0, 0.1, 4.4, 5.2]
    shuffled = [a[i] for i in perm]
    b = [2.0, 2.2, 6.0, 1.1]
    assert mann_whitney_u(a, b) == mann_whitney_u(shuffled, b)


# --- bootstrap -----------------------------------------------------------------------

def test_bootstrap_constant_data_collapses():
    result = bootstrap_ci([[3.0, 3.0, 3.0]], np.mean, n_resamples=100, seed=1)
    assert result.lo == result.hi == 3.0
    assert result.n_dropped == 0


def test_bootstrap_reproducible():
    data = [list(np.random.default_rng(0).normal(0, 1, 30))]
    a = bootstrap_ci(data, np.mean, n_resamples=300, seed=9)
    b = bootstrap_ci(data, np.mean, n_resamples=300, seed=9)
    assert a == b
    c = bootstrap_ci(data, np.mean, n_resamples=300, seed=10)
    assert (a.lo, a.hi) != (c.lo, c.hi)


def test_bootstrap_two_group_cohens_d_covers_truth():
    rng = np.random.default_rng(4)
    a = rng.normal(1.0, 1.0, 60)
    b = rng.normal(0.0, 1.0, 60)
    result = bootstrap_ci([a, b], cohens_d, n_resamples=500, seed=2)
    assert result.lo < 1.0 < result.hi  # true d = 1.0
    assert result.n_dropped == 0


def test_bootstrap_counts_degenerate_resamples():
    # A two-value group often resamples to a constant, where d is undefined.
    result = bootstrap_ci([[1.0, 2.0], [0.0, 1.0]], cohens_d, n_resamples=200, seed=3)
    assert result.n_dropped > 0


def test_bootstrap_rejects_empty_group():
    with pytest.raises(ValueError):
        bootstrap_ci([[]], np.mean, n_resamples=10)
